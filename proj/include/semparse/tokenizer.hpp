#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semparse {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

/// Whitespace word vocabulary with four reserved ids and a registry of atomic
/// tokens appended after construction.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr TokenId kNumReserved = 4;

  Vocabulary();

  /// Words in first-seen order after the reserved ids.
  static Vocabulary build(std::span<const std::string> corpus);

  /// Appends `surface` as a single token that wins over word segmentation.
  TokenId add_atomic_token(std::string surface);

  /// No BOS/EOS framing; unknown words map to kUnk.
  TokenSeq encode(std::string_view text) const;
  /// Space-joined surfaces with reserved ids dropped.
  std::string decode(std::span<const TokenId> ids) const;

  std::size_t size() const { return surfaces_.size(); }
  const std::string& surface(TokenId id) const;
  std::optional<TokenId> find(std::string_view surface) const;
  bool is_atomic(TokenId id) const { return id >= first_atomic_; }
  /// Id of the first atomic token, or size() when none were added.
  TokenId first_atomic_id() const { return first_atomic_; }
  const std::vector<std::string>& surfaces() const { return surfaces_; }

  /// One surface per line, line number = id. Atomic tokens are recorded in a
  /// sidecar "<path>.atomic" holding the first atomic id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const {
    return surfaces_ == other.surfaces_ && first_atomic_ == other.first_atomic_;
  }

 private:
  TokenId append(std::string surface);

  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId first_atomic_;
  // Atomic ids ordered by surface length, longest first.
  std::vector<TokenId> atomic_by_length_;
};

/// "[IN:A x ]" -> "[ IN:A x ]": detaches each opening bracket from its label
/// so that labels are whole words for the tokenizer.
std::string space_brackets(std::string_view target);
/// Inverse of space_brackets on its image: "[ IN:A x ]" -> "[IN:A x ]".
std::string join_brackets(std::string_view spaced);

}  // namespace semparse
