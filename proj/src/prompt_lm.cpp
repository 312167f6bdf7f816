#include "semparse/prompt_lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "semparse/error.hpp"

namespace semparse {

namespace {

constexpr double kInitStd = 0.02;
constexpr char kMagic[8] = {'S', 'P', 'C', 'K', 'P', 'T', '0', '1'};

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, kInitStd);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

std::string layer_name(const char* stack, int layer, const char* rest) {
  return std::string(stack) + "." + std::to_string(layer) + "." + rest;
}

// Builds the tape-side view of a model: one leaf per parameter.
class Net {
 public:
  Net(const Model& model, ad::Tape& tape, std::optional<GradTarget> target) : model_(model), tape_(tape) {
    const auto& params = model.parameters();
    vars_.reserve(params.size());
    for (const auto& p : params) {
      const bool req = target && (*target == GradTarget::All || p.partition == Partition::Prompt);
      vars_.push_back(tape.parameter(p.value, req));
      index_.emplace(p.name, vars_.size() - 1);
    }
  }

  ad::Var var(std::size_t i) const { return vars_[i]; }

  ad::Var encode(std::span<const TokenId> source) {
    const auto& cfg = model_.config();
    if (static_cast<int>(source.size()) > cfg.max_len) {
      throw Error(Errc::SequenceTooLong, "source of " + std::to_string(source.size()) + " tokens exceeds max_len " +
                                             std::to_string(cfg.max_len));
    }
    if (source.empty() && cfg.prompt_len == 0) {
      throw Error(Errc::InvalidArgument, "empty source with no prompt gives the decoder nothing to attend to");
    }
    std::optional<ad::Var> x;
    if (!source.empty()) {
      const std::vector<int> ids(source.begin(), source.end());
      const auto tok = tape_.gather_rows(p("embed.token"), ids);
      x = tape_.add(tok, tape_.slice_rows(p("embed.enc_pos"), 0, static_cast<int>(ids.size())));
    }
    if (cfg.prompt_len > 0) x = x ? tape_.concat_rows(p("prompt"), *x) : p("prompt");
    for (int l = 0; l < cfg.n_encoder_layers; ++l) {
      const auto h = norm(*x, layer_name("enc", l, "ln1"));
      x = tape_.add(*x, attention(h, h, false, layer_name("enc", l, "attn")));
      const auto h2 = norm(*x, layer_name("enc", l, "ln2"));
      x = tape_.add(*x, ffn(h2, layer_name("enc", l, "ffn")));
    }
    return norm(*x, "enc.ln_f");
  }

  ad::Var decode_logits(ad::Var memory, std::span<const int> decoder_input) {
    const auto& cfg = model_.config();
    if (static_cast<int>(decoder_input.size()) > cfg.max_len) {
      throw Error(Errc::SequenceTooLong, "decoder input of " + std::to_string(decoder_input.size()) +
                                             " tokens exceeds max_len " + std::to_string(cfg.max_len));
    }
    const auto tok = tape_.gather_rows(p("embed.token"), decoder_input);
    auto y = tape_.add(tok, tape_.slice_rows(p("embed.dec_pos"), 0, static_cast<int>(decoder_input.size())));
    for (int l = 0; l < cfg.n_decoder_layers; ++l) {
      const auto h = norm(y, layer_name("dec", l, "ln1"));
      y = tape_.add(y, attention(h, h, true, layer_name("dec", l, "self")));
      const auto h2 = norm(y, layer_name("dec", l, "ln2"));
      y = tape_.add(y, attention(h2, memory, false, layer_name("dec", l, "cross")));
      const auto h3 = norm(y, layer_name("dec", l, "ln3"));
      y = tape_.add(y, ffn(h3, layer_name("dec", l, "ffn")));
    }
    y = norm(y, "dec.ln_f");
    return tape_.matmul(y, p("out.proj"));
  }

 private:
  ad::Var p(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error(Errc::InvalidArgument, "model has no parameter " + name);
    return vars_[it->second];
  }

  ad::Var norm(ad::Var x, const std::string& prefix) {
    return tape_.layer_norm(x, p(prefix + ".gamma"), p(prefix + ".beta"));
  }

  ad::Var affine(ad::Var x, const std::string& w, const std::string& b) {
    return tape_.add_row(tape_.matmul(x, p(w)), p(b));
  }

  ad::Var attention(ad::Var queries, ad::Var keys_values, bool causal, const std::string& prefix) {
    const auto& cfg = model_.config();
    const int head_dim = cfg.d_model / cfg.n_heads;
    const auto q = affine(queries, prefix + ".wq", prefix + ".bq");
    const auto k = tape_.matmul(keys_values, p(prefix + ".wk"));
    const auto v = affine(keys_values, prefix + ".wv", prefix + ".bv");
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    std::vector<ad::Var> heads;
    heads.reserve(static_cast<std::size_t>(cfg.n_heads));
    for (int h = 0; h < cfg.n_heads; ++h) {
      const int start = h * head_dim;
      const auto qh = cfg.n_heads == 1 ? q : tape_.slice_cols(q, start, head_dim);
      const auto kh = cfg.n_heads == 1 ? k : tape_.slice_cols(k, start, head_dim);
      const auto vh = cfg.n_heads == 1 ? v : tape_.slice_cols(v, start, head_dim);
      const auto scores = tape_.scale(tape_.matmul_nt(qh, kh), inv_sqrt);
      heads.push_back(tape_.matmul(tape_.softmax_rows(scores, causal), vh));
    }
    const auto merged = cfg.n_heads == 1 ? heads.front() : tape_.concat_cols(heads);
    return affine(merged, prefix + ".wo", prefix + ".bo");
  }

  ad::Var ffn(ad::Var x, const std::string& prefix) {
    const auto hidden = tape_.gelu(affine(x, prefix + ".w1", prefix + ".b1"));
    return affine(hidden, prefix + ".w2", prefix + ".b2");
  }

  const Model& model_;
  ad::Tape& tape_;
  std::vector<ad::Var> vars_;
  std::map<std::string, std::size_t> index_;
};

std::vector<int> decoder_input(std::span<const TokenId> prefix) {
  std::vector<int> ids;
  ids.reserve(prefix.size() + 1);
  ids.push_back(Vocabulary::kBos);
  ids.insert(ids.end(), prefix.begin(), prefix.end());
  return ids;
}

std::vector<double> log_softmax_last_row(const Matrix& logits) {
  const auto row = logits.row(logits.rows() - 1);
  const double mx = row.maxCoeff();
  const double lse = mx + std::log((row.array() - mx).exp().sum());
  std::vector<double> out(static_cast<std::size_t>(row.size()));
  for (Eigen::Index i = 0; i < row.size(); ++i) out[static_cast<std::size_t>(i)] = row(i) - lse;
  return out;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(Errc::MalformedRecord, "truncated checkpoint");
  return v;
}

}  // namespace

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(Errc::InvalidArgument, std::string("model config: ") + what);
  };
  require(d_model > 0 && n_heads > 0, "d_model and n_heads must be positive");
  require(d_model % n_heads == 0, "d_model must be divisible by n_heads");
  require(n_encoder_layers >= 0 && n_decoder_layers >= 0, "layer counts must be non-negative");
  require(max_len > 0, "max_len must be positive");
  require(vocab_size > Vocabulary::kNumReserved, "vocab_size must exceed the reserved ids");
  require(prompt_len >= 0, "prompt_len must be non-negative");
}

Parameter& Model::add(std::string name, Partition partition, Matrix value) {
  params_.push_back({std::move(name), partition, std::move(value)});
  return params_.back();
}

Model Model::init(const ModelConfig& config) {
  config.validate();
  Model m;
  m.config_ = config;
  std::mt19937_64 rng(config.seed);
  const int d = config.d_model;
  const int f = config.ffn_dim();
  auto weight = [&](const std::string& name, int rows, int cols) {
    m.add(name, Partition::Backbone, normal_matrix(rows, cols, rng));
  };
  auto zeros = [&](const std::string& name, int cols) { m.add(name, Partition::Backbone, Matrix::Zero(1, cols)); };
  auto ones = [&](const std::string& name, int cols) { m.add(name, Partition::Backbone, Matrix::Ones(1, cols)); };
  auto norm = [&](const std::string& prefix) {
    ones(prefix + ".gamma", d);
    zeros(prefix + ".beta", d);
  };
  auto attention = [&](const std::string& prefix) {
    // Keys carry no bias.
    for (const char* w : {"q", "k", "v", "o"}) {
      weight(prefix + ".w" + w, d, d);
      if (*w != 'k') zeros(prefix + ".b" + w, d);
    }
  };
  auto ffn = [&](const std::string& prefix) {
    weight(prefix + ".w1", d, f);
    zeros(prefix + ".b1", f);
    weight(prefix + ".w2", f, d);
    zeros(prefix + ".b2", d);
  };

  weight("embed.token", config.vocab_size, d);
  weight("embed.enc_pos", config.max_len, d);
  weight("embed.dec_pos", config.max_len, d);
  for (int l = 0; l < config.n_encoder_layers; ++l) {
    norm(layer_name("enc", l, "ln1"));
    attention(layer_name("enc", l, "attn"));
    norm(layer_name("enc", l, "ln2"));
    ffn(layer_name("enc", l, "ffn"));
  }
  norm("enc.ln_f");
  for (int l = 0; l < config.n_decoder_layers; ++l) {
    norm(layer_name("dec", l, "ln1"));
    attention(layer_name("dec", l, "self"));
    norm(layer_name("dec", l, "ln2"));
    attention(layer_name("dec", l, "cross"));
    norm(layer_name("dec", l, "ln3"));
    ffn(layer_name("dec", l, "ffn"));
  }
  norm("dec.ln_f");
  weight("out.proj", d, config.vocab_size);

  // Drawn last so the backbone does not depend on prompt_len.
  Matrix prompt(config.prompt_len, d);
  const Matrix& table = m.params_.front().value;
  std::uniform_int_distribution<int> pick(0, config.vocab_size - 1);
  for (int r = 0; r < config.prompt_len; ++r) prompt.row(r) = table.row(pick(rng));
  m.add("prompt", Partition::Prompt, std::move(prompt));
  return m;
}

Model Model::init(ModelConfig config, const Vocabulary& vocab) {
  if (config.vocab_size != 0 && config.vocab_size != static_cast<int>(vocab.size())) {
    throw Error(Errc::InvalidArgument, "config vocab_size " + std::to_string(config.vocab_size) +
                                           " does not match vocabulary of " + std::to_string(vocab.size()));
  }
  config.vocab_size = static_cast<int>(vocab.size());
  return init(config);
}

void Model::grow_vocab(int new_vocab_size, std::uint64_t seed) {
  if (new_vocab_size < config_.vocab_size) throw Error(Errc::InvalidArgument, "vocabulary cannot shrink");
  const int extra = new_vocab_size - config_.vocab_size;
  if (extra == 0) return;
  std::mt19937_64 rng(seed);
  const int d = config_.d_model;
  auto& emb = parameter("embed.token").value;
  Matrix grown_emb(new_vocab_size, d);
  grown_emb.topRows(config_.vocab_size) = emb;
  grown_emb.bottomRows(extra) = normal_matrix(extra, d, rng);
  emb = std::move(grown_emb);
  auto& proj = parameter("out.proj").value;
  Matrix grown_proj(d, new_vocab_size);
  grown_proj.leftCols(config_.vocab_size) = proj;
  grown_proj.rightCols(extra) = normal_matrix(d, extra, rng);
  proj = std::move(grown_proj);
  config_.vocab_size = new_vocab_size;
}

const Parameter& Model::parameter(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p;
  }
  throw Error(Errc::InvalidArgument, "model has no parameter " + std::string(name));
}

Parameter& Model::parameter(std::string_view name) {
  return const_cast<Parameter&>(std::as_const(*this).parameter(name));
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

std::size_t Model::parameter_count(Partition partition) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.partition == partition) n += static_cast<std::size_t>(p.value.size());
  }
  return n;
}

bool Model::operator==(const Model& other) const {
  if (!(config_ == other.config_) || params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.name != b.name || a.partition != b.partition || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols()) {
      return false;
    }
    if (std::memcmp(a.value.data(), b.value.data(), sizeof(double) * static_cast<std::size_t>(a.value.size())) != 0) {
      return false;
    }
  }
  return true;
}

void Model::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  for (int v : {config_.d_model, config_.n_heads, config_.n_encoder_layers, config_.n_decoder_layers, config_.max_len,
                config_.vocab_size, config_.prompt_len}) {
    write_pod<std::int64_t>(out, v);
  }
  write_pod<std::uint64_t>(out, config_.seed);
  write_pod<std::uint64_t>(out, params_.size());
  for (const auto& p : params_) {
    write_pod<std::uint64_t>(out, p.name.size());
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_pod<std::uint8_t>(out, p.partition == Partition::Prompt ? 1 : 0);
    write_pod<std::int64_t>(out, p.value.rows());
    write_pod<std::int64_t>(out, p.value.cols());
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p.value.size())));
  }
  if (!out) throw Error(Errc::Io, "short write to " + path.string());
}

Model Model::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(Errc::MalformedRecord, path.string() + " is not a checkpoint");
  }
  Model m;
  int* fields[] = {&m.config_.d_model, &m.config_.n_heads, &m.config_.n_encoder_layers, &m.config_.n_decoder_layers,
                   &m.config_.max_len, &m.config_.vocab_size, &m.config_.prompt_len};
  for (int* f : fields) *f = static_cast<int>(read_pod<std::int64_t>(in));
  m.config_.seed = read_pod<std::uint64_t>(in);
  m.config_.validate();
  const auto count = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = read_pod<std::uint64_t>(in);
    if (len > 4096) throw Error(Errc::MalformedRecord, "implausible tensor name length");
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    const auto partition = read_pod<std::uint8_t>(in) ? Partition::Prompt : Partition::Backbone;
    const auto rows = read_pod<std::int64_t>(in);
    const auto cols = read_pod<std::int64_t>(in);
    if (rows < 0 || cols < 0 || rows * cols > (std::int64_t{1} << 32)) {
      throw Error(Errc::MalformedRecord, "bad shape for tensor " + name);
    }
    Matrix value(rows, cols);
    in.read(reinterpret_cast<char*>(value.data()), static_cast<std::streamsize>(sizeof(double) * rows * cols));
    if (!in) throw Error(Errc::MalformedRecord, "truncated tensor " + name);
    m.add(std::move(name), partition, std::move(value));
  }
  return m;
}

std::vector<double> forward_logprobs(const Model& model, std::span<const TokenId> source,
                                     std::span<const TokenId> prefix) {
  ad::Tape tape(false);
  Net net(model, tape, std::nullopt);
  const auto memory = net.encode(source);
  const auto ids = decoder_input(prefix);
  return log_softmax_last_row(tape.value(net.decode_logits(memory, ids)));
}

std::vector<double> ModelScorer::next_logprobs(std::span<const TokenId> source,
                                               std::span<const TokenId> prefix) const {
  ad::Tape tape(false);
  Net net(model_, tape, std::nullopt);
  if (!cached_memory_ || !std::equal(source.begin(), source.end(), cached_source_.begin(), cached_source_.end())) {
    cached_memory_ = tape.value(net.encode(source));
    cached_source_.assign(source.begin(), source.end());
  }
  const auto memory = tape.parameter(*cached_memory_, false);
  const auto ids = decoder_input(prefix);
  return log_softmax_last_row(tape.value(net.decode_logits(memory, ids)));
}

namespace {

struct BatchGraph {
  ad::Var total;
  std::size_t tokens = 0;
};

BatchGraph build_batch(Net& net, ad::Tape& tape, std::span<const TrainExample> batch) {
  std::vector<ad::Var> sums;
  sums.reserve(batch.size());
  std::size_t tokens = 0;
  for (const auto& ex : batch) {
    const auto memory = net.encode(ex.source);
    const auto input = decoder_input(ex.target);
    std::vector<int> gold(ex.target.begin(), ex.target.end());
    gold.push_back(Vocabulary::kEos);
    sums.push_back(tape.cross_entropy_sum(net.decode_logits(memory, input), gold));
    tokens += gold.size();
  }
  return {tape.sum(sums), tokens};
}

}  // namespace

LossAndGrads loss_and_gradients(const Model& model, std::span<const TrainExample> batch, GradTarget target) {
  if (batch.empty()) throw Error(Errc::InvalidArgument, "empty batch");
  ad::Tape tape(true);
  Net net(model, tape, target);
  const auto graph = build_batch(net, tape, batch);
  LossAndGrads out;
  out.tokens = graph.tokens;
  out.loss = tape.value(graph.total)(0, 0) / static_cast<double>(graph.tokens);
  if (!std::isfinite(out.loss)) throw Error(Errc::NonFiniteLoss, "loss is " + std::to_string(out.loss));
  tape.backward(graph.total, 1.0 / static_cast<double>(graph.tokens));
  const auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (target == GradTarget::PromptOnly && params[i].partition != Partition::Prompt) continue;
    const Matrix* g = tape.grad(net.var(i));
    out.grads.push_back({i, g ? *g : Matrix::Zero(params[i].value.rows(), params[i].value.cols())});
  }
  return out;
}

double batch_loss(const Model& model, std::span<const TrainExample> batch) {
  if (batch.empty()) throw Error(Errc::InvalidArgument, "empty batch");
  ad::Tape tape(false);
  Net net(model, tape, std::nullopt);
  const auto graph = build_batch(net, tape, batch);
  return tape.value(graph.total)(0, 0) / static_cast<double>(graph.tokens);
}

TokenSeq greedy_decode(const Model& model, std::span<const TokenId> source, int max_len) {
  ModelScorer scorer(model);
  BeamOptions options;
  options.beam_width = 1;
  options.max_len = std::min(max_len, model.config().max_len - 1);
  auto hyps = unconstrained_beam_search(scorer, source, options);
  return hyps.empty() ? TokenSeq{} : std::move(hyps.front().tokens);
}

std::string_view tuning_name(TuningMode mode) { return mode == TuningMode::PromptTune ? "prompt" : "finetune"; }

TuningMode parse_tuning(std::string_view name) {
  if (name == "prompt" || name == "prompt-tune" || name == "pt") return TuningMode::PromptTune;
  if (name == "finetune" || name == "fine-tune" || name == "ft") return TuningMode::FineTune;
  throw Error(Errc::InvalidArgument, "unknown tuning mode '" + std::string(name) + "'");
}

TrainConfig TrainConfig::defaults(TuningMode mode) {
  TrainConfig c;
  c.mode = mode;
  c.learning_rate = mode == TuningMode::PromptTune ? 0.3 : 1e-3;
  return c;
}

double greedy_exact_match(const Model& model, std::span<const TrainExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : examples) {
    const int limit = static_cast<int>(ex.target.size()) + 8;
    if (greedy_decode(model, ex.source, limit) == ex.target) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

TrainResult train(Model model, std::span<const TrainExample> train_set, std::span<const TrainExample> val_set,
                  const TrainConfig& config, const EvalFn& eval_fn) {
  if (train_set.empty() || val_set.empty()) throw Error(Errc::InvalidArgument, "train and validation sets must be non-empty");
  if (config.batch_size < 1 || config.max_epochs < 1 || config.eval_interval < 1 || config.patience < 1 ||
      config.learning_rate < 0.0) {
    throw Error(Errc::InvalidArgument, "train config: sizes must be positive and the learning rate non-negative");
  }
  const GradTarget target = config.mode == TuningMode::PromptTune ? GradTarget::PromptOnly : GradTarget::All;
  auto evaluate = [&](const Model& m) { return eval_fn ? eval_fn(m) : greedy_exact_match(m, val_set); };

  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  for (const auto& p : model.parameters()) {
    first_moment.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    second_moment.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainExample> batch;

  TrainResult result;
  result.best = model;
  int since_best = 0;
  long step = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double nll_sum = 0.0;
    std::size_t token_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      batch.clear();
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train_set[order[i]]);
      const auto lg = loss_and_gradients(model, batch, target);
      nll_sum += lg.loss * static_cast<double>(lg.tokens);
      token_sum += lg.tokens;
      ++step;
      const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (const auto& [index, grad] : lg.grads) {
        Matrix& m1 = first_moment[index];
        Matrix& m2 = second_moment[index];
        m1 = config.beta1 * m1 + (1.0 - config.beta1) * grad;
        m2 = config.beta2 * m2 + (1.0 - config.beta2) * grad.cwiseProduct(grad);
        model.parameters()[index].value.array() -=
            config.learning_rate * (m1.array() / bias1) / ((m2.array() / bias2).sqrt() + config.epsilon);
      }
    }
    HistoryEntry entry{epoch, nll_sum / static_cast<double>(token_sum), std::nullopt};
    result.epochs_run = epoch;
    bool stop = false;
    if (epoch % config.eval_interval == 0 || epoch == config.max_epochs) {
      const double em = evaluate(model);
      entry.val_exact_match = em;
      if (em > result.best_val_exact_match) {
        result.best_val_exact_match = em;
        result.best_epoch = epoch;
        result.best = model;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        stop = true;
      }
      if (config.stop_at_perfect && em >= 1.0) stop = true;
    }
    result.history.push_back(entry);
    if (stop) break;
  }
  return result;
}

std::vector<std::string> GradCheckReport::failing(double tolerance) const {
  std::vector<std::string> out;
  for (const auto& g : groups) {
    if (!(g.max_rel_error <= tolerance)) out.push_back(g.name);
  }
  return out;
}

Model gradcheck_model(const ModelConfig& config) {
  Model m = Model::init(config);
  std::mt19937_64 rng(config.seed ^ 0x5eedULL);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (auto& p : m.parameters()) {
    const bool embedding = p.name.starts_with("embed.") || p.partition == Partition::Prompt;
    const bool gain = p.name.ends_with(".gamma");
    const double fan_in = static_cast<double>(std::max<Eigen::Index>(p.value.rows(), 1));
    const double s = embedding ? 1.0 : 0.5 / std::sqrt(fan_in);
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = gain ? 1.0 + 0.1 * unit(rng) : s * unit(rng);
  }
  return m;
}

GradCheckReport grad_check(const Model& model, const TrainExample& example, GradTarget target, double h) {
  const std::span<const TrainExample> batch(&example, 1);
  const auto analytic = loss_and_gradients(model, batch, target);
  Model probe = model;
  GradCheckReport report;
  for (const auto& [index, grad] : analytic.grads) {
    GroupError group{model.parameters()[index].name, 0.0, 0.0, 0.0};
    Matrix& value = probe.parameters()[index].value;
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      auto loss_at = [&](double offset) {
        value.data()[i] = saved + offset;
        return batch_loss(probe, batch);
      };
      const double p1 = loss_at(h), m1 = loss_at(-h), p2 = loss_at(2 * h), m2 = loss_at(-2 * h);
      value.data()[i] = saved;
      const double numeric = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
      const double a = grad.data()[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (err > group.max_rel_error || std::isnan(err)) {
        group.max_rel_error = err;
        group.analytic = a;
        group.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
    report.groups.push_back(std::move(group));
  }
  return report;
}

}  // namespace semparse
