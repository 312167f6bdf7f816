#pragma once

// TOP-style bracketed meaning representations:
//
//   [IN:GET_WEATHER whats the weather in [SL:LOCATION boston ] ]
//
// Intent nodes hold utterance tokens and slots; slot nodes hold utterance
// tokens and nested intents. Leaves are whitespace-separated tokens.

#include <compare>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace semparse {

enum class LabelNamespace { Intent, Slot };

struct OntologyLabel {
  LabelNamespace ns = LabelNamespace::Intent;
  std::string name;

  /// "IN:" or "SL:" followed by the name.
  std::string surface() const;

  /// Throws Error(InvalidLabel | EmptyLabel) for anything that is not a
  /// well-formed "IN:name" / "SL:name" surface.
  static OntologyLabel parse(std::string_view surface);

  static OntologyLabel intent(std::string name) { return {LabelNamespace::Intent, std::move(name)}; }
  static OntologyLabel slot(std::string name) { return {LabelNamespace::Slot, std::move(name)}; }

  bool operator==(const OntologyLabel&) const = default;
  // Ordered by surface form, so all intents sort before all slots.
  std::strong_ordering operator<=>(const OntologyLabel& other) const;
};

enum class NodeKind { Intent, Slot, Token };

struct Node {
  NodeKind kind = NodeKind::Token;
  // Label surface ("IN:X", "SL:Y") for intent/slot nodes, token text for leaves.
  std::string text;
  std::vector<Node> children;

  static Node intent(std::string name, std::vector<Node> children = {});
  static Node slot(std::string name, std::vector<Node> children = {});
  static Node token(std::string text);

  bool is_label() const { return kind != NodeKind::Token; }
  OntologyLabel label() const { return OntologyLabel::parse(text); }

  bool operator==(const Node&) const = default;
};

struct ParseTree {
  Node root;

  bool operator==(const ParseTree&) const = default;
};

ParseTree parse_top(std::string_view text);

/// Canonical single-space form with a space before every closing bracket.
std::string serialize(const ParseTree& tree);
std::string serialize(const Node& node);

/// Count of intent/slot nodes on the longest root-to-leaf path (root = 1).
std::size_t depth(const ParseTree& tree);

std::size_t node_count(const ParseTree& tree);

std::set<OntologyLabel> ontology_labels(const ParseTree& tree);

/// Collapses whitespace runs into single spaces and trims both ends.
std::string normalize_ws(std::string_view text);

bool is_space(char c);

/// True for well-formed trees: root is an intent, intents contain only
/// tokens and slots, slots contain only tokens and intents.
bool is_valid(const ParseTree& tree);

}  // namespace semparse
