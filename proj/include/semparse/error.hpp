#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace semparse {

enum class Errc {
  // meaning representation parsing
  UnbalancedBrackets,
  EmptyLabel,
  RootNotIntent,
  TrailingContent,
  InvalidLabel,
  InvalidNesting,
  // canonicalization
  DuplicateSurrogate,
  UnknownLabel,
  UnknownSurrogate,
  // tokenizer
  IdOutOfRange,
  DuplicateSurface,
  // decoding
  EmptySequence,
  NoValidPath,
  // model
  SequenceTooLong,
  NonFiniteLoss,
  // data
  MalformedRecord,
  MissingField,
  TooFewExamples,
  LengthMismatch,
  // plumbing
  InvalidArgument,
  Io,
};

std::string_view errc_name(Errc code);

/// Every failure raised by the library. `where()` is a character offset for
/// parse errors and a 1-based line number for file readers.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::size_t> where = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> where() const noexcept { return where_; }
  /// The message without the code and location prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
  std::optional<std::size_t> where_;
};

}  // namespace semparse
