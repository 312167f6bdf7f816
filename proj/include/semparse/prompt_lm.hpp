#pragma once

// Toy pre-layer-norm transformer encoder-decoder with a trainable soft prompt.
//
// The encoder reads [P ; e(source) + pos] where P is a K x d_model matrix of
// prompt embeddings (no positional embeddings on prompt rows). The decoder
// reads e([BOS] + target prefix) + pos, attends causally to itself and fully
// to the encoder states, and predicts the next target token.
//
// Parameters are split into two partitions: the prompt matrix P and the
// backbone (everything else). Prompt tuning updates P only; fine-tuning
// updates both.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semparse/autodiff.hpp"
#include "semparse/tokenizer.hpp"
#include "semparse/trie_decoder.hpp"

namespace semparse {

using ad::Matrix;

struct ModelConfig {
  int d_model = 64;
  int n_heads = 2;
  int n_encoder_layers = 2;
  int n_decoder_layers = 2;
  // Longest source (prompt excluded) and longest decoder input.
  int max_len = 64;
  int vocab_size = 0;
  // Desk-scale default; the full-scale recipe uses 150 prompt tokens.
  int prompt_len = 20;
  std::uint64_t seed = 1;

  int ffn_dim() const { return 4 * d_model; }
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

enum class Partition { Backbone, Prompt };

/// Which parameters receive gradients.
enum class GradTarget { PromptOnly, All };

struct Parameter {
  std::string name;
  Partition partition = Partition::Backbone;
  Matrix value;
};

class Model {
 public:
  Model() = default;

  /// Backbone weights ~ N(0, 0.02^2), biases 0, layer-norm gains 1. Each
  /// prompt row copies a uniformly drawn row of the token embedding table.
  static Model init(const ModelConfig& config);
  static Model init(ModelConfig config, const Vocabulary& vocab);

  /// Appends fresh N(0, 0.02^2) rows for tokens added after init (token
  /// embeddings and output projection).
  void grow_vocab(int new_vocab_size, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }
  const Parameter& parameter(std::string_view name) const;
  Parameter& parameter(std::string_view name);

  std::size_t parameter_count() const;
  std::size_t parameter_count(Partition partition) const;

  /// Binary container: magic, config, then named row-major float64 tensors.
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

  bool operator==(const Model& other) const;

 private:
  Parameter& add(std::string name, Partition partition, Matrix value);

  ModelConfig config_;
  std::vector<Parameter> params_;
};

/// Log-softmax over the vocabulary for the token following `prefix`
/// (prefix excludes BOS).
std::vector<double> forward_logprobs(const Model& model, std::span<const TokenId> source,
                                     std::span<const TokenId> prefix);

struct TrainExample {
  TokenSeq source;
  TokenSeq target;  // no BOS/EOS
};

struct ParamGrad {
  std::size_t index;  // into Model::parameters()
  Matrix grad;
};

struct LossAndGrads {
  double loss = 0.0;  // mean token NLL
  std::size_t tokens = 0;
  std::vector<ParamGrad> grads;  // selected partition only
};

/// Teacher-forced mean token NLL over the batch (targets framed as
/// [BOS] + target -> target + [EOS]) and its gradient.
LossAndGrads loss_and_gradients(const Model& model, std::span<const TrainExample> batch, GradTarget target);

/// Loss only; no gradient bookkeeping.
double batch_loss(const Model& model, std::span<const TrainExample> batch);

/// Scorer backed by a model. Caches encoder states per source; not safe
/// for concurrent use.
class ModelScorer : public Scorer {
 public:
  explicit ModelScorer(const Model& model) : model_(model) {}
  std::vector<double> next_logprobs(std::span<const TokenId> source, std::span<const TokenId> prefix) const override;

 private:
  const Model& model_;
  mutable TokenSeq cached_source_;
  mutable std::optional<Matrix> cached_memory_;
};

TokenSeq greedy_decode(const Model& model, std::span<const TokenId> source, int max_len);

enum class TuningMode { PromptTune, FineTune };

std::string_view tuning_name(TuningMode mode);
TuningMode parse_tuning(std::string_view name);

struct TrainConfig {
  TuningMode mode = TuningMode::FineTune;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 16;
  int max_epochs = 500;
  // Evaluations without improvement before stopping.
  int patience = 5;
  int eval_interval = 5;
  // Stop as soon as validation exact match reaches 1.
  bool stop_at_perfect = true;
  std::uint64_t seed = 1;

  /// Mode-specific learning rate: 0.3 for prompt tuning, 1e-3 otherwise.
  static TrainConfig defaults(TuningMode mode);
};

struct HistoryEntry {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_exact_match;
};

struct TrainResult {
  Model best;
  std::vector<HistoryEntry> history;
  double best_val_exact_match = -1.0;
  int best_epoch = 0;
  int epochs_run = 0;
};

using EvalFn = std::function<double(const Model&)>;

/// Token-level exact match of greedy decodes against the targets.
double greedy_exact_match(const Model& model, std::span<const TrainExample> examples);

/// Adam on the partition selected by `config.mode`, with early stopping on
/// `eval_fn` (validation exact match). Throws Error(NonFiniteLoss) on
/// divergence.
TrainResult train(Model model, std::span<const TrainExample> train_set, std::span<const TrainExample> val_set,
                  const TrainConfig& config, const EvalFn& eval_fn = {});

struct GroupError {
  std::string name;
  double max_rel_error = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<GroupError> groups;  // one per checked parameter tensor

  /// Names of tensors whose error exceeds `tolerance`.
  std::vector<std::string> failing(double tolerance) const;
};

/// Small model for gradient checks: unit-scale Gaussian embeddings, weights
/// with std 0.5/sqrt(fan_in), gains near 1. At the N(0, 0.02^2) training init
/// most gradients are too small for central differences to resolve.
Model gradcheck_model(const ModelConfig& config);

/// Five-point central differences with step `h` against loss_and_gradients,
/// over every entry of every tensor in the selected partition. Error per entry is
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(const Model& model, const TrainExample& example, GradTarget target, double h = 1e-4);

}  // namespace semparse
