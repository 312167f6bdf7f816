#pragma once

// Prefix-trie constrained beam search.
//
// The trie stores every admissible target sequence. During constrained search
// each open hypothesis may only extend with a token that is a child of its
// trie node, and may only finish (take the end transition, scored with the
// scorer's EOS entry) at a terminal node. Scores are raw summed
// log-probabilities; ties are broken by lexicographic token-id order.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "semparse/tokenizer.hpp"

namespace semparse {

class Trie {
 public:
  struct Continuations {
    std::vector<TokenId> tokens;  // ascending
    bool may_end = false;

    bool operator==(const Continuations&) const = default;
  };

  static constexpr std::uint32_t kNoNode = ~std::uint32_t{0};

  Trie();

  /// Throws Error(EmptySequence) for an empty input sequence.
  static Trie build(std::span<const TokenSeq> sequences);

  void insert(std::span<const TokenId> sequence);
  bool contains(std::span<const TokenId> sequence) const;
  Continuations continuations(std::span<const TokenId> prefix) const;

  /// Number of distinct stored sequences.
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  /// Stored sequences in lexicographic order.
  std::vector<TokenSeq> sequences() const;

  /// One sequence per line, ids separated by single spaces.
  void save(const std::filesystem::path& path) const;
  static Trie load(const std::filesystem::path& path);

  // Node-level access used by the search.
  std::uint32_t root() const { return 0; }
  std::uint32_t child(std::uint32_t node, TokenId token) const;
  bool terminal(std::uint32_t node) const { return nodes_[node].terminal; }
  const std::map<TokenId, std::uint32_t>& children(std::uint32_t node) const { return nodes_[node].children; }

 private:
  struct Node {
    std::map<TokenId, std::uint32_t> children;
    bool terminal = false;
  };

  std::uint32_t walk(std::span<const TokenId> prefix) const;

  std::vector<Node> nodes_;
  std::size_t size_ = 0;
};

/// Next-token distribution for a (source, target prefix) pair. Implementations
/// must be deterministic and return log-probabilities whose exponentials sum
/// to one; -inf entries are allowed.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> next_logprobs(std::span<const TokenId> source,
                                            std::span<const TokenId> prefix) const = 0;
};

struct Hypothesis {
  TokenSeq tokens;  // excludes the end token
  double logprob = 0.0;

  bool operator==(const Hypothesis&) const = default;
};

struct BeamOptions {
  int beam_width = 10;
  // Longest hypothesis (in tokens, end token excluded).
  int max_len = 64;
  TokenId eos = Vocabulary::kEos;
};

/// Hypotheses sorted by log-probability (descending), then token order.
std::vector<Hypothesis> constrained_beam_search(const Scorer& scorer, const Trie& trie,
                                                std::span<const TokenId> source, const BeamOptions& options = {});

/// Same ranking contract over the full vocabulary; every token other than
/// `eos` is a continuation and `eos` finishes a hypothesis.
std::vector<Hypothesis> unconstrained_beam_search(const Scorer& scorer, std::span<const TokenId> source,
                                                  const BeamOptions& options = {});

/// Ranking order shared by both searches: higher logprob first, then
/// lexicographically smaller token sequence.
bool ranks_before(const Hypothesis& a, const Hypothesis& b);

}  // namespace semparse
