#include "semparse/trie_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "semparse/error.hpp"

namespace semparse {

Trie::Trie() : nodes_(1) {}

Trie Trie::build(std::span<const TokenSeq> sequences) {
  Trie trie;
  for (const auto& seq : sequences) trie.insert(seq);
  return trie;
}

void Trie::insert(std::span<const TokenId> sequence) {
  if (sequence.empty()) throw Error(Errc::EmptySequence, "cannot insert an empty sequence into a trie");
  std::uint32_t node = 0;
  for (TokenId tok : sequence) {
    auto it = nodes_[node].children.find(tok);
    if (it == nodes_[node].children.end()) {
      const auto next = static_cast<std::uint32_t>(nodes_.size());
      nodes_[node].children.emplace(tok, next);
      nodes_.emplace_back();
      node = next;
    } else {
      node = it->second;
    }
  }
  if (!nodes_[node].terminal) {
    nodes_[node].terminal = true;
    ++size_;
  }
}

std::uint32_t Trie::child(std::uint32_t node, TokenId token) const {
  const auto& children = nodes_[node].children;
  auto it = children.find(token);
  return it == children.end() ? kNoNode : it->second;
}

std::uint32_t Trie::walk(std::span<const TokenId> prefix) const {
  std::uint32_t node = 0;
  for (TokenId tok : prefix) {
    node = child(node, tok);
    if (node == kNoNode) return kNoNode;
  }
  return node;
}

bool Trie::contains(std::span<const TokenId> sequence) const {
  if (sequence.empty()) return false;
  const auto node = walk(sequence);
  return node != kNoNode && nodes_[node].terminal;
}

Trie::Continuations Trie::continuations(std::span<const TokenId> prefix) const {
  const auto node = walk(prefix);
  if (node == kNoNode) return {};
  Continuations out;
  out.may_end = nodes_[node].terminal;
  out.tokens.reserve(nodes_[node].children.size());
  for (const auto& [tok, _] : nodes_[node].children) out.tokens.push_back(tok);
  return out;
}

std::vector<TokenSeq> Trie::sequences() const {
  std::vector<TokenSeq> out;
  TokenSeq prefix;
  // Explicit DFS; std::map children give lexicographic order.
  struct Frame {
    std::uint32_t node;
    std::map<TokenId, std::uint32_t>::const_iterator next;
  };
  std::vector<Frame> stack{{0, nodes_[0].children.begin()}};
  while (!stack.empty()) {
    auto& top = stack.back();
    if (top.next == nodes_[top.node].children.end()) {
      stack.pop_back();
      if (!prefix.empty()) prefix.pop_back();
      continue;
    }
    const auto [tok, child_node] = *top.next;
    ++top.next;
    prefix.push_back(tok);
    if (nodes_[child_node].terminal) out.push_back(prefix);
    stack.push_back({child_node, nodes_[child_node].children.begin()});
  }
  return out;
}

void Trie::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write trie " + path.string());
  for (const auto& seq : sequences()) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i) out << ' ';
      out << seq[i];
    }
    out << '\n';
  }
}

Trie Trie::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open trie " + path.string());
  Trie trie;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    TokenSeq seq;
    long long id;
    while (fields >> id) {
      if (id < 0 || id > std::numeric_limits<TokenId>::max()) {
        throw Error(Errc::MalformedRecord, "token id out of range in " + path.string(), line_no);
      }
      seq.push_back(static_cast<TokenId>(id));
    }
    if (!fields.eof()) throw Error(Errc::MalformedRecord, "non-numeric token in " + path.string(), line_no);
    if (seq.empty()) throw Error(Errc::EmptySequence, "blank line in " + path.string(), line_no);
    trie.insert(seq);
  }
  return trie;
}

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.tokens < b.tokens;
}

namespace {

struct Beam {
  TokenSeq prefix;
  double logprob = 0.0;
  bool finished = false;
  std::uint32_t node = 0;
};

// Total order: score, then tokens, then finished before open.
bool beam_before(const Beam& a, const Beam& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  if (a.prefix != b.prefix) return a.prefix < b.prefix;
  return a.finished && !b.finished;
}

void check_width(const BeamOptions& options) {
  if (options.beam_width < 1) throw Error(Errc::InvalidArgument, "beam_width must be >= 1");
  if (options.max_len < 0) throw Error(Errc::InvalidArgument, "max_len must be >= 0");
}

std::vector<double> score(const Scorer& scorer, std::span<const TokenId> source, const Beam& beam,
                          std::size_t min_size) {
  auto lp = scorer.next_logprobs(source, beam.prefix);
  if (lp.size() < min_size) {
    throw Error(Errc::IdOutOfRange, "scorer returned " + std::to_string(lp.size()) +
                                        " entries but the search needs ids below " + std::to_string(min_size));
  }
  return lp;
}

// Shared driver. `expand` appends the candidates of one open beam.
template <typename Expand>
std::vector<Hypothesis> run_beam_search(const BeamOptions& options, Expand&& expand) {
  check_width(options);
  const auto width = static_cast<std::size_t>(options.beam_width);
  std::vector<Beam> beams{Beam{}};
  std::vector<Beam> candidates;
  for (int step = 0;; ++step) {
    candidates.clear();
    bool any_open = false;
    for (auto& beam : beams) {
      if (beam.finished) {
        candidates.push_back(std::move(beam));
        continue;
      }
      expand(beam, step < options.max_len, candidates);
    }
    const std::size_t keep = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      beam_before);
    candidates.resize(keep);
    beams.swap(candidates);
    for (const auto& beam : beams) any_open = any_open || !beam.finished;
    if (!any_open) break;
  }
  std::vector<Hypothesis> out;
  for (auto& beam : beams) {
    if (beam.finished) out.push_back({std::move(beam.prefix), beam.logprob});
  }
  return out;
}

}  // namespace

std::vector<Hypothesis> constrained_beam_search(const Scorer& scorer, const Trie& trie,
                                                std::span<const TokenId> source, const BeamOptions& options) {
  if (trie.empty()) throw Error(Errc::InvalidArgument, "constrained search over an empty trie");
  auto expand = [&](const Beam& beam, bool may_extend, std::vector<Beam>& out) {
    const auto& children = trie.children(beam.node);
    const bool may_end = trie.terminal(beam.node);
    if ((!may_extend || children.empty()) && !may_end) return;
    std::size_t need = may_end ? static_cast<std::size_t>(options.eos) + 1 : 0;
    if (may_extend && !children.empty()) need = std::max(need, static_cast<std::size_t>(children.rbegin()->first) + 1);
    const auto lp = score(scorer, source, beam, need);
    if (may_extend) {
      for (const auto& [tok, child] : children) {
        Beam next{beam.prefix, beam.logprob + lp[tok], false, child};
        next.prefix.push_back(tok);
        out.push_back(std::move(next));
      }
    }
    if (may_end) out.push_back(Beam{beam.prefix, beam.logprob + lp[options.eos], true, beam.node});
  };
  auto result = run_beam_search(options, expand);
  if (result.empty()) {
    throw Error(Errc::NoValidPath, "every hypothesis was pruned (is max_len shorter than all stored sequences?)");
  }
  return result;
}

std::vector<Hypothesis> unconstrained_beam_search(const Scorer& scorer, std::span<const TokenId> source,
                                                  const BeamOptions& options) {
  auto expand = [&](const Beam& beam, bool may_extend, std::vector<Beam>& out) {
    const auto lp = score(scorer, source, beam, static_cast<std::size_t>(options.eos) + 1);
    if (may_extend) {
      for (std::size_t tok = 0; tok < lp.size(); ++tok) {
        if (static_cast<TokenId>(tok) == options.eos) continue;
        Beam next{beam.prefix, beam.logprob + lp[tok], false, 0};
        next.prefix.push_back(static_cast<TokenId>(tok));
        out.push_back(std::move(next));
      }
    }
    out.push_back(Beam{beam.prefix, beam.logprob + lp[options.eos], true, 0});
  };
  return run_beam_search(options, expand);
}

}  // namespace semparse
