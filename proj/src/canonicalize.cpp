#include "semparse/canonicalize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "semparse/error.hpp"

namespace semparse {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Node simplify_node(const Node& node) {
  Node out{node.kind, node.text, {}};
  for (const auto& child : node.children) {
    if (node.kind == NodeKind::Intent && child.kind == NodeKind::Token) continue;
    out.children.push_back(child.is_label() ? simplify_node(child) : child);
  }
  return out;
}

void require_no_table(const CanonScheme& scheme) {
  if (scheme.substitutes_labels()) {
    throw Error(Errc::InvalidArgument, "scheme " + scheme.tag() + " requires a label table");
  }
}

}  // namespace

std::string_view variant_name(SchemeVariant v) {
  switch (v) {
    case SchemeVariant::None: return "none";
    case SchemeVariant::Simplify: return "simplify";
    case SchemeVariant::OutOfVocab: return "oov";
    case SchemeVariant::InVocab: return "invocab";
  }
  return "none";
}

SchemeVariant parse_variant(std::string_view name) {
  const std::string n = lowercase(name);
  if (n == "none") return SchemeVariant::None;
  if (n == "simplify") return SchemeVariant::Simplify;
  if (n == "oov" || n == "out-of-vocab" || n == "outofvocab") return SchemeVariant::OutOfVocab;
  if (n == "invocab" || n == "in-vocab") return SchemeVariant::InVocab;
  throw Error(Errc::InvalidArgument, "unknown scheme '" + std::string(name) + "'");
}

std::string CanonScheme::tag() const {
  std::string out(variant_name(variant));
  if (compose_simplify && variant != SchemeVariant::Simplify) out += "+simplify";
  if (shorten_labels) out += "+short";
  return out;
}

LabelTable LabelTable::from_entries(std::vector<std::pair<std::string, std::string>> entries) {
  LabelTable table;
  table.entries_ = std::move(entries);
  for (std::size_t i = 0; i < table.entries_.size(); ++i) {
    const auto& [label, surrogate] = table.entries_[i];
    if (!table.by_label_.emplace(label, i).second) {
      throw Error(Errc::DuplicateSurrogate, "label '" + label + "' listed twice");
    }
    if (!table.by_surrogate_.emplace(surrogate, i).second) {
      throw Error(Errc::DuplicateSurrogate,
                  "surrogate '" + surrogate + "' assigned to both '" + table.entries_[table.by_surrogate_[surrogate]].first +
                      "' and '" + label + "'");
    }
  }
  return table;
}

LabelTable LabelTable::build(const std::set<OntologyLabel>& labels, const CanonScheme& scheme) {
  if (labels.empty()) throw Error(Errc::InvalidArgument, "cannot build a label table from an empty label set");
  std::vector<std::pair<std::string, std::string>> entries;
  entries.reserve(labels.size());
  std::size_t n_intents = 0;
  std::size_t n_slots = 0;
  // std::set iterates in surface order, which fixes the surrogate assignment.
  for (const auto& label : labels) {
    std::string surrogate;
    if (scheme.variant == SchemeVariant::InVocab) {
      surrogate = label.ns == LabelNamespace::Intent ? "in" + std::to_string(n_intents++)
                                                     : "sl" + std::to_string(n_slots++);
    } else if (scheme.shorten_labels) {
      surrogate = lowercase(label.name);
    } else {
      surrogate = label.surface();
    }
    entries.emplace_back(label.surface(), std::move(surrogate));
  }
  LabelTable table = from_entries(std::move(entries));
  table.atomic_ = scheme.variant == SchemeVariant::OutOfVocab;
  return table;
}

LabelTable LabelTable::load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open label table " + path.string());
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(Errc::MalformedRecord, "expected label<TAB>surrogate in " + path.string(), line_no);
    }
    entries.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return from_entries(std::move(entries));
}

std::string LabelTable::to_tsv() const {
  std::string out;
  for (const auto& [label, surrogate] : entries_) {
    out += label;
    out += '\t';
    out += surrogate;
    out += '\n';
  }
  return out;
}

void LabelTable::save_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write label table " + path.string());
  out << to_tsv();
}

const std::string& LabelTable::surrogate(std::string_view label_surface) const {
  auto it = by_label_.find(label_surface);
  if (it == by_label_.end()) throw Error(Errc::UnknownLabel, std::string(label_surface));
  return entries_[it->second].second;
}

const std::string& LabelTable::label(std::string_view surrogate) const {
  auto it = by_surrogate_.find(surrogate);
  if (it == by_surrogate_.end()) throw Error(Errc::UnknownSurrogate, std::string(surrogate));
  return entries_[it->second].first;
}

bool LabelTable::has_label(std::string_view label_surface) const {
  return by_label_.find(label_surface) != by_label_.end();
}

ParseTree simplify(const ParseTree& tree) { return ParseTree{simplify_node(tree.root)}; }

std::string apply_scheme(const ParseTree& tree, const CanonScheme& scheme, const LabelTable& table) {
  const std::string base = serialize(scheme.simplifies() ? simplify(tree) : tree);
  if (!scheme.substitutes_labels()) return base;
  return substitute_labels(base, [&](std::string_view label) -> const std::string& { return table.surrogate(label); });
}

std::string apply_scheme(const ParseTree& tree, const CanonScheme& scheme) {
  require_no_table(scheme);
  return serialize(scheme.simplifies() ? simplify(tree) : tree);
}

ParseTree decanonicalize(std::string_view text, const CanonScheme& scheme, const LabelTable& table) {
  if (!scheme.substitutes_labels()) return parse_top(text);
  const std::string restored =
      substitute_labels(text, [&](std::string_view surrogate) -> const std::string& { return table.label(surrogate); });
  return parse_top(restored);
}

ParseTree decanonicalize(std::string_view text, const CanonScheme& scheme) {
  require_no_table(scheme);
  return parse_top(text);
}

}  // namespace semparse
