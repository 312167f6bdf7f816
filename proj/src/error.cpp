#include "semparse/error.hpp"

namespace semparse {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::UnbalancedBrackets: return "UnbalancedBrackets";
    case Errc::EmptyLabel: return "EmptyLabel";
    case Errc::RootNotIntent: return "RootNotIntent";
    case Errc::TrailingContent: return "TrailingContent";
    case Errc::InvalidLabel: return "InvalidLabel";
    case Errc::InvalidNesting: return "InvalidNesting";
    case Errc::DuplicateSurrogate: return "DuplicateSurrogate";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::UnknownSurrogate: return "UnknownSurrogate";
    case Errc::IdOutOfRange: return "IdOutOfRange";
    case Errc::DuplicateSurface: return "DuplicateSurface";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::NoValidPath: return "NoValidPath";
    case Errc::SequenceTooLong: return "SequenceTooLong";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::MissingField: return "MissingField";
    case Errc::TooFewExamples: return "TooFewExamples";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string format_message(Errc code, const std::string& message, std::optional<std::size_t> where) {
  std::string out(errc_name(code));
  if (where) out += " at " + std::to_string(*where);
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> where)
    : std::runtime_error(format_message(code, message, where)), code_(code), message_(message), where_(where) {}

}  // namespace semparse
