#pragma once

// Target-side canonicalization of TOP meaning representations.
//
//   None        serialize the tree as-is
//   Simplify    drop utterance tokens sitting directly under an intent
//   OutOfVocab  every ontology label becomes one new atomic vocabulary token
//   InVocab     labels are replaced by short identifiers (in0, in1, sl0, ...)
//
// `shorten_labels` strips the IN:/SL: prefix and lowercases the name. When a
// label substitution and Simplify are both configured, Simplify runs first.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semparse/meaning_repr.hpp"

namespace semparse {

enum class SchemeVariant { None, Simplify, OutOfVocab, InVocab };

std::string_view variant_name(SchemeVariant v);
/// Accepts "none", "simplify", "oov"/"out-of-vocab", "invocab"/"in-vocab".
SchemeVariant parse_variant(std::string_view name);

struct CanonScheme {
  SchemeVariant variant = SchemeVariant::None;
  bool shorten_labels = false;
  // Runs Simplify before an OutOfVocab/InVocab substitution.
  bool compose_simplify = false;

  bool simplifies() const { return variant == SchemeVariant::Simplify || compose_simplify; }
  bool substitutes_labels() const {
    return variant == SchemeVariant::OutOfVocab || variant == SchemeVariant::InVocab || shorten_labels;
  }
  /// Short tag for file names and result tables, e.g. "invocab+simplify+short".
  std::string tag() const;

  bool operator==(const CanonScheme&) const = default;
};

/// Bijective label <-> surrogate mapping, sorted by label surface.
class LabelTable {
 public:
  LabelTable() = default;

  static LabelTable build(const std::set<OntologyLabel>& labels, const CanonScheme& scheme);

  /// Reads a "label<TAB>surrogate" file; rejects duplicates on either side.
  static LabelTable load_tsv(const std::filesystem::path& path);
  void save_tsv(const std::filesystem::path& path) const;
  std::string to_tsv() const;

  const std::string& surrogate(std::string_view label_surface) const;
  const std::string& label(std::string_view surrogate) const;
  bool has_label(std::string_view label_surface) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// True when surrogates are meant to be registered as atomic tokens.
  bool atomic_surrogates() const { return atomic_; }
  void set_atomic_surrogates(bool atomic) { atomic_ = atomic; }

  bool operator==(const LabelTable& other) const { return entries_ == other.entries_; }

 private:
  static LabelTable from_entries(std::vector<std::pair<std::string, std::string>> entries);

  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t, std::less<>> by_label_;
  std::map<std::string, std::size_t, std::less<>> by_surrogate_;
  bool atomic_ = false;
};

ParseTree simplify(const ParseTree& tree);

std::string apply_scheme(const ParseTree& tree, const CanonScheme& scheme, const LabelTable& table);
/// For schemes that need no table (None, Simplify without shortening).
std::string apply_scheme(const ParseTree& tree, const CanonScheme& scheme);

ParseTree decanonicalize(std::string_view text, const CanonScheme& scheme, const LabelTable& table);
ParseTree decanonicalize(std::string_view text, const CanonScheme& scheme);

/// Replaces the label after every '[' using `map`; other text is kept verbatim.
template <typename Map>
std::string substitute_labels(std::string_view text, Map&& map) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    out += c;
    ++pos;
    if (c != '[') continue;
    std::size_t end = pos;
    while (end < text.size() && !is_space(text[end]) && text[end] != '[' && text[end] != ']') ++end;
    if (end > pos) out += map(text.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

}  // namespace semparse
