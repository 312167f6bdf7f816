#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace semparse {

struct Example {
  std::string utterance;
  // TOP-bracketed for TOP-style data, opaque otherwise.
  std::string meaning;
  std::optional<std::string> canonical;
  std::string domain;

  bool operator==(const Example&) const = default;
};

struct Provenance {
  std::string source;
  std::string method;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  bool operator==(const Provenance&) const = default;
};

struct Dataset {
  std::vector<Example> examples;
  std::string split;  // "train", "val", "test" or empty
  Provenance provenance;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

/// Keys "utterance", "meaning", optional "canonical", optional "domain".
Dataset load_jsonl(const std::filesystem::path& path);
void save_jsonl(const Dataset& dataset, const std::filesystem::path& path);

/// utterance TAB meaning [TAB domain]; meanings must parse as TOP trees.
Dataset load_top_tsv(const std::filesystem::path& path);

/// Writes the provenance sidecar {source, method, params, seed}.
void save_sidecar(const Dataset& dataset, const std::filesystem::path& path);

struct SplitSets {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// `n_train` uniformly sampled training examples; `val_frac` of the rest
/// (rounded to nearest) goes to validation, the remainder to test.
SplitSets overnight_split(const Dataset& dataset, std::size_t n_train = 200, double val_frac = 0.2,
                          std::uint64_t seed = 0);

/// Samples-per-intent-and-slot: one greedy pass over a seeded shuffle that
/// keeps an example iff one of its ontology labels has been kept fewer than
/// `k` times so far. Labels are counted once per example.
Dataset spis_sample(const Dataset& dataset, int k, std::uint64_t seed);

/// Template grammar for desk-scale TOP-style data.
struct SynthGrammarConfig {
  std::string domain = "weather";
  int n_intents = 7;
  int n_slots = 11;
  int values_per_slot = 5;
  int templates_per_intent = 2;
  int min_slots_per_intent = 1;
  int max_slots_per_intent = 3;
  // Probability that one slot of an example holds a nested intent, giving
  // trees of depth 4.
  double nesting_probability = 0.0;
  std::uint64_t grammar_seed = 17;

  /// 7 intents / 11 slots, flat trees.
  static SynthGrammarConfig weather();
  /// 19 intents / 32 slots, about 21% of trees deeper than 2.
  static SynthGrammarConfig reminder();

  nlohmann::json to_json() const;
  static SynthGrammarConfig from_json(const nlohmann::json& j);
};

Dataset gen_synthetic(const SynthGrammarConfig& grammar, std::size_t n, std::uint64_t seed);

/// Every intent and slot label the grammar can emit, as surfaces.
std::vector<std::string> synthetic_ontology(const SynthGrammarConfig& grammar);

}  // namespace semparse
