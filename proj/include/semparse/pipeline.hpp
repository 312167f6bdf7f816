#pragma once

// End-to-end experiment plumbing shared by the CLI and the acceptance suite:
// sample -> canonicalize -> vocabulary -> train -> decode -> evaluate.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semparse/canonicalize.hpp"
#include "semparse/datasets.hpp"
#include "semparse/eval.hpp"
#include "semparse/prompt_lm.hpp"
#include "semparse/tokenizer.hpp"
#include "semparse/trie_decoder.hpp"

namespace semparse {

enum class TargetField { Meaning, Canonical };

/// "none", "invocab", or an object {"variant", "shorten", "simplify"}.
CanonScheme scheme_from_json(const nlohmann::json& j);
nlohmann::json scheme_to_json(const CanonScheme& scheme);

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});
TrainConfig train_config_from_json(const nlohmann::json& j, TuningMode mode);

/// Builds the label table for `scheme` from every TOP meaning in `sets`, or
/// nullopt when the scheme substitutes no labels.
std::optional<LabelTable> label_table_for(const std::vector<const Dataset*>& sets, const CanonScheme& scheme);

/// Target string the model is trained to produce.
std::string make_target(const Example& ex, const CanonScheme& scheme, const LabelTable* table, TargetField field);
/// Gold string used for evaluation (the meaning, or the canonical form).
const std::string& gold_of(const Example& ex, TargetField field);

/// Word vocabulary over utterances and bracket-spaced targets. Atomic
/// surrogates (OutOfVocab) are left out of the word pass and returned
/// separately so they can be registered after model init.
struct VocabPlan {
  Vocabulary base;
  std::vector<std::string> atomic;
};
VocabPlan plan_vocabulary(const std::vector<const Dataset*>& sets, const CanonScheme& scheme, const LabelTable* table,
                          TargetField field);

TrainExample encode_example(const Vocabulary& vocab, const std::string& utterance, const std::string& target);
std::string decode_prediction(const Vocabulary& vocab, std::span<const TokenId> ids);

enum class DecodingMode { Constrained, Unconstrained };
std::string_view decoding_name(DecodingMode mode);
DecodingMode parse_decoding(std::string_view name);

/// Top hypotheses per source; constrained when `trie` is non-null. A source
/// with no admissible hypothesis yields an empty list.
std::vector<std::vector<Hypothesis>> decode_all(const Model& model, std::span<const TokenSeq> sources,
                                                const Trie* trie, const BeamOptions& options);

std::string history_csv(std::span<const HistoryEntry> history);

struct ExperimentConfig {
  std::string name = "experiment";
  // Exactly one of: synthetic grammar, JSONL path, TSV path.
  std::optional<SynthGrammarConfig> synthetic;
  std::size_t synthetic_n = 600;
  std::uint64_t synthetic_seed = 11;
  std::optional<std::filesystem::path> data_path;
  bool data_is_tsv = false;

  std::string sampling = "overnight";  // "overnight" | "spis"
  std::size_t n_train = 200;
  double val_frac = 0.2;
  double test_frac = 0.2;  // spis only: held out before sampling
  int spis_k = 25;

  std::vector<CanonScheme> schemes{CanonScheme{}};
  TargetField target_field = TargetField::Meaning;
  TuningMode tuning = TuningMode::FineTune;
  ModelConfig model;
  nlohmann::json train_overrides = nlohmann::json::object();

  std::vector<DecodingMode> decoding{DecodingMode::Constrained};
  int beam_width = 10;
  int max_decode_len = 48;
  bool trie_from_all_splits = true;

  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "experiment_out";

  /// Relative output paths resolve against `output_root` when given.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::optional<std::filesystem::path>& output_root = {});
  nlohmann::json to_json() const;
  void validate() const;
};

struct RunOutcome {
  RunResult result;
  std::filesystem::path run_dir;
  // Fraction of constrained predictions whose token sequence is in the trie.
  std::optional<double> trie_membership;
  int epochs_run = 0;
  double best_val_exact_match = 0.0;
};

struct ExperimentOutcome {
  std::vector<RunOutcome> runs;
  std::filesystem::path results_csv;
  std::filesystem::path aggregate_csv;
};

/// Runs every (scheme, seed) combination, writing all artifacts under
/// config.output_dir. Errors are rethrown as "stage <name>: ..." after the
/// rows finished so far have been written.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

}  // namespace semparse
