#include "semparse/meaning_repr.hpp"

#include <utility>

#include "semparse/error.hpp"

namespace semparse {

namespace {

constexpr std::string_view kIntentPrefix = "IN:";
constexpr std::string_view kSlotPrefix = "SL:";

bool is_delim(char c) { return is_space(c) || c == '[' || c == ']'; }

std::size_t scan_word(std::string_view text, std::size_t pos) {
  while (pos < text.size() && !is_delim(text[pos])) ++pos;
  return pos;
}

void collect_labels(const Node& node, std::set<OntologyLabel>& out) {
  if (!node.is_label()) return;
  out.insert(node.label());
  for (const auto& child : node.children) collect_labels(child, out);
}

std::size_t node_depth(const Node& node) {
  if (!node.is_label()) return 0;
  std::size_t best = 0;
  for (const auto& child : node.children) best = std::max(best, node_depth(child));
  return best + 1;
}

std::size_t count_nodes(const Node& node) {
  std::size_t n = 1;
  for (const auto& child : node.children) n += count_nodes(child);
  return n;
}

void serialize_into(const Node& node, std::string& out) {
  if (!node.is_label()) {
    out += node.text;
    return;
  }
  out += '[';
  out += node.text;
  for (const auto& child : node.children) {
    out += ' ';
    serialize_into(child, out);
  }
  out += " ]";
}

bool valid_child(NodeKind parent, NodeKind child) {
  if (child == NodeKind::Token) return true;
  if (parent == NodeKind::Intent) return child == NodeKind::Slot;
  if (parent == NodeKind::Slot) return child == NodeKind::Intent;
  return false;
}

bool valid_node(const Node& node) {
  if (node.is_label()) {
    try {
      (void)node.label();
    } catch (const Error&) {
      return false;
    }
    const bool ns_ok = node.kind == NodeKind::Intent ? node.text.starts_with(kIntentPrefix)
                                                     : node.text.starts_with(kSlotPrefix);
    if (!ns_ok) return false;
  } else {
    if (node.text.empty() || scan_word(node.text, 0) != node.text.size()) return false;
    return node.children.empty();
  }
  for (const auto& child : node.children) {
    if (!valid_child(node.kind, child.kind) || !valid_node(child)) return false;
  }
  return true;
}

}  // namespace

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string OntologyLabel::surface() const {
  std::string out(ns == LabelNamespace::Intent ? kIntentPrefix : kSlotPrefix);
  out += name;
  return out;
}

OntologyLabel OntologyLabel::parse(std::string_view surface) {
  LabelNamespace ns;
  if (surface.starts_with(kIntentPrefix)) {
    ns = LabelNamespace::Intent;
  } else if (surface.starts_with(kSlotPrefix)) {
    ns = LabelNamespace::Slot;
  } else {
    throw Error(Errc::InvalidLabel, "label must start with IN: or SL: (got '" + std::string(surface) + "')");
  }
  std::string_view name = surface.substr(3);
  if (name.empty()) throw Error(Errc::EmptyLabel, "label has an empty name");
  if (scan_word(name, 0) != name.size()) {
    throw Error(Errc::InvalidLabel, "label contains whitespace or brackets");
  }
  return {ns, std::string(name)};
}

std::strong_ordering OntologyLabel::operator<=>(const OntologyLabel& other) const {
  return surface() <=> other.surface();
}

Node Node::intent(std::string name, std::vector<Node> children) {
  return {NodeKind::Intent, std::string(kIntentPrefix) + name, std::move(children)};
}

Node Node::slot(std::string name, std::vector<Node> children) {
  return {NodeKind::Slot, std::string(kSlotPrefix) + name, std::move(children)};
}

Node Node::token(std::string text) { return {NodeKind::Token, std::move(text), {}}; }

ParseTree parse_top(std::string_view text) {
  // Iterative so that adversarial nesting depth cannot exhaust the stack.
  std::vector<Node> stack;
  bool have_root = false;
  Node root;
  std::size_t pos = 0;
  while (true) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size()) break;
    const char c = text[pos];
    if (have_root) throw Error(Errc::TrailingContent, "content after the root node", pos);

    if (c == '[') {
      const std::size_t open = pos;
      const std::size_t end = scan_word(text, pos + 1);
      std::string_view surface = text.substr(pos + 1, end - pos - 1);
      if (surface.empty()) throw Error(Errc::EmptyLabel, "bracket without a label", open);
      OntologyLabel label;
      try {
        label = OntologyLabel::parse(surface);
      } catch (const Error& e) {
        throw Error(e.code(), "bad label '" + std::string(surface) + "'", open);
      }
      const NodeKind kind = label.ns == LabelNamespace::Intent ? NodeKind::Intent : NodeKind::Slot;
      if (stack.empty()) {
        if (kind != NodeKind::Intent) throw Error(Errc::RootNotIntent, "root must be an intent", open);
      } else if (!valid_child(stack.back().kind, kind)) {
        throw Error(Errc::InvalidNesting,
                    std::string(kind == NodeKind::Intent ? "intent" : "slot") + " directly inside " +
                        (stack.back().kind == NodeKind::Intent ? "an intent" : "a slot"),
                    open);
      }
      stack.push_back(Node{kind, std::string(surface), {}});
      pos = end;
    } else if (c == ']') {
      if (stack.empty()) throw Error(Errc::UnbalancedBrackets, "unmatched ']'", pos);
      Node done = std::move(stack.back());
      stack.pop_back();
      if (stack.empty()) {
        root = std::move(done);
        have_root = true;
      } else {
        stack.back().children.push_back(std::move(done));
      }
      ++pos;
    } else {
      const std::size_t end = scan_word(text, pos);
      if (stack.empty()) throw Error(Errc::RootNotIntent, "expected '[IN:' at start", pos);
      stack.back().children.push_back(Node::token(std::string(text.substr(pos, end - pos))));
      pos = end;
    }
  }
  if (!stack.empty()) throw Error(Errc::UnbalancedBrackets, "missing ']'", text.size());
  if (!have_root) throw Error(Errc::RootNotIntent, "empty input", 0);
  return ParseTree{std::move(root)};
}

std::string serialize(const Node& node) {
  std::string out;
  serialize_into(node, out);
  return out;
}

std::string serialize(const ParseTree& tree) { return serialize(tree.root); }

std::size_t depth(const ParseTree& tree) { return node_depth(tree.root); }

std::size_t node_count(const ParseTree& tree) { return count_nodes(tree.root); }

std::set<OntologyLabel> ontology_labels(const ParseTree& tree) {
  std::set<OntologyLabel> out;
  collect_labels(tree.root, out);
  return out;
}

std::string normalize_ws(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && !is_space(text[pos])) ++pos;
    if (pos > start) {
      if (!out.empty()) out += ' ';
      out.append(text.substr(start, pos - start));
    }
  }
  return out;
}

bool is_valid(const ParseTree& tree) {
  return tree.root.kind == NodeKind::Intent && valid_node(tree.root);
}

}  // namespace semparse
