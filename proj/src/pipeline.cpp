#include "semparse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "semparse/error.hpp"

namespace semparse {

using nlohmann::json;

namespace {

bool is_identity(const CanonScheme& scheme) { return !scheme.simplifies() && !scheme.substitutes_labels(); }

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && !is_space(text[pos])) ++pos;
    if (pos > start) words.emplace_back(text.substr(start, pos - start));
  }
  return words;
}

Dataset pick(const Dataset& from, std::span<const std::size_t> idx, std::string split, std::string method,
             json params, std::uint64_t seed) {
  Dataset out;
  for (auto i : idx) out.examples.push_back(from.examples[i]);
  out.split = std::move(split);
  out.provenance = {from.provenance.source, std::move(method), std::move(params), seed};
  return out;
}

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + name + ": " + e.message(), e.where());
  } catch (const std::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("stage ") + name + ": " + e.what());
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string domain_of(const Dataset& ds, const ExperimentConfig& config) {
  if (config.synthetic) return config.synthetic->domain;
  std::set<std::string> domains;
  for (const auto& ex : ds.examples) domains.insert(ex.domain);
  if (domains.size() == 1 && !domains.begin()->empty()) return *domains.begin();
  return domains.empty() || domains.size() > 1 ? std::string("mixed") : config.name;
}

}  // namespace

CanonScheme scheme_from_json(const json& j) {
  CanonScheme s;
  if (j.is_string()) {
    s.variant = parse_variant(j.get<std::string>());
    return s;
  }
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "scheme must be a string or an object");
  s.variant = parse_variant(j.value("variant", std::string("none")));
  s.shorten_labels = j.value("shorten", false);
  s.compose_simplify = j.value("simplify", false);
  return s;
}

json scheme_to_json(const CanonScheme& scheme) {
  return json{{"variant", std::string(variant_name(scheme.variant))},
              {"shorten", scheme.shorten_labels},
              {"simplify", scheme.compose_simplify}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig c) {
  c.d_model = j.value("d_model", c.d_model);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.n_encoder_layers = j.value("n_encoder_layers", c.n_encoder_layers);
  c.n_decoder_layers = j.value("n_decoder_layers", c.n_decoder_layers);
  c.max_len = j.value("max_len", c.max_len);
  c.prompt_len = j.value("prompt_len", c.prompt_len);
  c.seed = j.value("seed", c.seed);
  return c;
}

TrainConfig train_config_from_json(const json& j, TuningMode mode) {
  TrainConfig c = TrainConfig::defaults(mode);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.eval_interval = j.value("eval_interval", c.eval_interval);
  c.stop_at_perfect = j.value("stop_at_perfect", c.stop_at_perfect);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::optional<LabelTable> label_table_for(const std::vector<const Dataset*>& sets, const CanonScheme& scheme) {
  if (!scheme.substitutes_labels()) return std::nullopt;
  std::set<OntologyLabel> labels;
  for (const auto* ds : sets) {
    for (std::size_t i = 0; i < ds->size(); ++i) {
      try {
        const auto l = ontology_labels(parse_top(ds->examples[i].meaning));
        labels.insert(l.begin(), l.end());
      } catch (const Error& e) {
        throw Error(e.code(), "meaning of example " + std::to_string(i + 1) + ": " + e.message(), e.where());
      }
    }
  }
  return LabelTable::build(labels, scheme);
}

const std::string& gold_of(const Example& ex, TargetField field) {
  if (field == TargetField::Canonical) {
    if (!ex.canonical) throw Error(Errc::MissingField, "example has no canonical form");
    return *ex.canonical;
  }
  return ex.meaning;
}

std::string make_target(const Example& ex, const CanonScheme& scheme, const LabelTable* table, TargetField field) {
  if (field == TargetField::Canonical) return normalize_ws(gold_of(ex, field));
  ParseTree tree;
  try {
    tree = parse_top(ex.meaning);
  } catch (const Error&) {
    // Opaque (non-TOP) meanings are only usable untransformed.
    if (is_identity(scheme)) return normalize_ws(ex.meaning);
    throw;
  }
  return table ? apply_scheme(tree, scheme, *table) : apply_scheme(tree, scheme);
}

VocabPlan plan_vocabulary(const std::vector<const Dataset*>& sets, const CanonScheme& scheme, const LabelTable* table,
                          TargetField field) {
  std::set<std::string> atomic;
  VocabPlan plan;
  if (table && table->atomic_surrogates()) {
    for (const auto& [label, surrogate] : table->entries()) {
      atomic.insert(surrogate);
      plan.atomic.push_back(surrogate);
    }
  }
  std::vector<std::string> corpus;
  auto add_line = [&](std::string_view text) {
    std::string kept;
    for (auto& w : split_words(text)) {
      if (atomic.contains(w)) continue;
      if (!kept.empty()) kept += ' ';
      kept += w;
    }
    corpus.push_back(std::move(kept));
  };
  for (const auto* ds : sets) {
    for (const auto& ex : ds->examples) {
      add_line(ex.utterance);
      add_line(space_brackets(make_target(ex, scheme, table, field)));
    }
  }
  plan.base = Vocabulary::build(corpus);
  return plan;
}

TrainExample encode_example(const Vocabulary& vocab, const std::string& utterance, const std::string& target) {
  return {vocab.encode(utterance), vocab.encode(space_brackets(target))};
}

std::string decode_prediction(const Vocabulary& vocab, std::span<const TokenId> ids) {
  return join_brackets(vocab.decode(ids));
}

std::string_view decoding_name(DecodingMode mode) {
  return mode == DecodingMode::Constrained ? "constrained" : "unconstrained";
}

DecodingMode parse_decoding(std::string_view name) {
  if (name == "constrained") return DecodingMode::Constrained;
  if (name == "unconstrained") return DecodingMode::Unconstrained;
  throw Error(Errc::InvalidArgument, "unknown decoding mode '" + std::string(name) + "'");
}

std::vector<std::vector<Hypothesis>> decode_all(const Model& model, std::span<const TokenSeq> sources,
                                                const Trie* trie, const BeamOptions& options) {
  BeamOptions opts = options;
  opts.max_len = std::min(opts.max_len, model.config().max_len - 1);
  ModelScorer scorer(model);
  std::vector<std::vector<Hypothesis>> out;
  out.reserve(sources.size());
  for (const auto& src : sources) {
    if (trie) {
      try {
        out.push_back(constrained_beam_search(scorer, *trie, src, opts));
      } catch (const Error& e) {
        if (e.code() != Errc::NoValidPath) throw;
        out.emplace_back();
      }
    } else {
      out.push_back(unconstrained_beam_search(scorer, src, opts));
    }
  }
  return out;
}

std::string history_csv(std::span<const HistoryEntry> history) {
  std::string out = "epoch,train_loss,val_exact_match\n";
  for (const auto& h : history) {
    out += std::to_string(h.epoch) + "," + fixed(h.train_loss, 6) + "," +
           (h.val_exact_match ? fixed(*h.val_exact_match, 4) : std::string()) + "\n";
  }
  return out;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::optional<std::filesystem::path>& output_root) {
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  const json data = j.value("data", json::object());
  if (auto it = data.find("synthetic"); it != data.end()) {
    c.synthetic = SynthGrammarConfig::from_json(*it);
    c.synthetic_n = it->value("n", c.synthetic_n);
    c.synthetic_seed = it->value("seed", c.synthetic_seed);
  }
  if (auto it = data.find("path"); it != data.end()) c.data_path = it->get<std::string>();
  if (auto it = data.find("tsv"); it != data.end()) {
    c.data_path = it->get<std::string>();
    c.data_is_tsv = true;
  }
  const json sampling = j.value("sampling", json::object());
  c.sampling = sampling.value("method", c.sampling);
  c.n_train = sampling.value("n_train", c.n_train);
  c.val_frac = sampling.value("val_frac", c.val_frac);
  c.test_frac = sampling.value("test_frac", c.test_frac);
  c.spis_k = sampling.value("k", c.spis_k);
  if (auto it = j.find("schemes"); it != j.end()) {
    c.schemes.clear();
    for (const auto& s : *it) c.schemes.push_back(scheme_from_json(s));
  } else if (auto it1 = j.find("scheme"); it1 != j.end()) {
    c.schemes = {scheme_from_json(*it1)};
  }
  const std::string field = j.value("target_field", std::string("meaning"));
  if (field == "canonical") {
    c.target_field = TargetField::Canonical;
  } else if (field != "meaning") {
    throw Error(Errc::InvalidArgument, "target_field must be meaning or canonical");
  }
  c.tuning = parse_tuning(j.value("tuning", std::string(tuning_name(c.tuning))));
  c.model = model_config_from_json(j.value("model", json::object()));
  c.train_overrides = j.value("train", json::object());
  const json decoding = j.value("decoding", json::object());
  if (auto it = decoding.find("modes"); it != decoding.end()) {
    c.decoding.clear();
    for (const auto& m : *it) c.decoding.push_back(parse_decoding(m.get<std::string>()));
  }
  c.beam_width = decoding.value("beam_width", c.beam_width);
  c.max_decode_len = decoding.value("max_len", c.max_decode_len);
  const std::string trie_source = decoding.value("trie_source", std::string("all"));
  if (trie_source != "all" && trie_source != "train") {
    throw Error(Errc::InvalidArgument, "trie_source must be all or train");
  }
  c.trie_from_all_splits = trie_source == "all";
  if (auto it = j.find("seeds"); it != j.end()) c.seeds = it->get<std::vector<std::uint64_t>>();
  c.output_dir = j.value("output_dir", c.output_dir.string());
  if (output_root && c.output_dir.is_relative()) c.output_dir = *output_root / c.output_dir;
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json data = json::object();
  if (synthetic) {
    json s = synthetic->to_json();
    s["n"] = synthetic_n;
    s["seed"] = synthetic_seed;
    data["synthetic"] = s;
  }
  if (data_path) data[data_is_tsv ? "tsv" : "path"] = data_path->string();
  json schemes_json = json::array();
  for (const auto& s : schemes) schemes_json.push_back(scheme_to_json(s));
  json modes = json::array();
  for (auto m : decoding) modes.push_back(std::string(decoding_name(m)));
  return json{{"name", name},
              {"data", data},
              {"sampling",
               {{"method", sampling}, {"n_train", n_train}, {"val_frac", val_frac}, {"test_frac", test_frac},
                {"k", spis_k}}},
              {"schemes", schemes_json},
              {"target_field", target_field == TargetField::Canonical ? "canonical" : "meaning"},
              {"tuning", std::string(tuning_name(tuning))},
              {"model",
               {{"d_model", model.d_model}, {"n_heads", model.n_heads}, {"n_encoder_layers", model.n_encoder_layers},
                {"n_decoder_layers", model.n_decoder_layers}, {"max_len", model.max_len},
                {"prompt_len", model.prompt_len}}},
              {"train", train_overrides},
              {"decoding",
               {{"modes", modes}, {"beam_width", beam_width}, {"max_len", max_decode_len},
                {"trie_source", trie_from_all_splits ? "all" : "train"}}},
              {"seeds", seeds},
              {"output_dir", output_dir.string()}};
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(Errc::InvalidArgument, "experiment config: " + what);
  };
  require(synthetic.has_value() != data_path.has_value(), "give exactly one of data.synthetic, data.path, data.tsv");
  if (data_path) require(std::filesystem::exists(*data_path), "data file " + data_path->string() + " does not exist");
  require(sampling == "overnight" || sampling == "spis", "sampling.method must be overnight or spis");
  require(!seeds.empty(), "seeds must be non-empty");
  require(!schemes.empty(), "schemes must be non-empty");
  require(!decoding.empty(), "decoding.modes must be non-empty");
  require(beam_width >= 1, "decoding.beam_width must be >= 1");
  require(spis_k >= 1, "sampling.k must be >= 1");
  require(val_frac >= 0.0 && test_frac >= 0.0 && val_frac + test_frac < 1.0, "split fractions out of range");
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  write_text(config.output_dir / "config.json", config.to_json().dump(2) + "\n");

  const Dataset full = stage("load", [&] {
    if (config.synthetic) return gen_synthetic(*config.synthetic, config.synthetic_n, config.synthetic_seed);
    return config.data_is_tsv ? load_top_tsv(*config.data_path) : load_jsonl(*config.data_path);
  });
  const std::string domain = domain_of(full, config);

  ExperimentOutcome outcome;
  outcome.results_csv = config.output_dir / "results.csv";
  outcome.aggregate_csv = config.output_dir / "aggregate.csv";
  std::vector<RunResult> rows;
  auto flush = [&] { write_text(outcome.results_csv, results_csv(rows)); };

  try {
    for (const auto& scheme : config.schemes) {
      for (const auto seed : config.seeds) {
        const fs::path run_dir = config.output_dir / scheme.tag() / ("seed" + std::to_string(seed));
        fs::create_directories(run_dir);

        const SplitSets splits = stage("sample", [&] {
          SplitSets s;
          if (config.sampling == "overnight") {
            s = overnight_split(full, config.n_train, config.val_frac, seed);
          } else {
            std::vector<std::size_t> idx(full.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::mt19937_64 rng(seed);
            std::shuffle(idx.begin(), idx.end(), rng);
            const auto n = static_cast<double>(full.size());
            const auto n_test = static_cast<std::size_t>(std::llround(config.test_frac * n));
            const auto n_val = static_cast<std::size_t>(std::llround(config.val_frac * n));
            if (n_test + n_val >= full.size()) throw Error(Errc::TooFewExamples, "nothing left to sample from");
            const json params = {{"k", config.spis_k}, {"val_frac", config.val_frac}, {"test_frac", config.test_frac}};
            const std::span<const std::size_t> all(idx);
            s.test = pick(full, all.subspan(0, n_test), "test", "spis_holdout", params, seed);
            s.val = pick(full, all.subspan(n_test, n_val), "val", "spis_holdout", params, seed);
            Dataset pool = pick(full, all.subspan(n_test + n_val), "train", "spis_holdout", params, seed);
            s.train = spis_sample(pool, config.spis_k, seed);
            s.train.split = "train";
          }
          for (const Dataset* d : {&s.train, &s.val, &s.test}) {
            save_jsonl(*d, run_dir / (d->split + ".jsonl"));
            save_sidecar(*d, run_dir / (d->split + ".split.json"));
          }
          if (s.train.empty() || s.val.empty() || s.test.empty()) {
            throw Error(Errc::TooFewExamples, "a split came out empty");
          }
          return s;
        });
        const std::vector<const Dataset*> all_sets{&splits.train, &splits.val, &splits.test};

        const std::optional<LabelTable> table = stage("canonicalize", [&] {
          auto t = label_table_for(all_sets, scheme);
          if (t) t->save_tsv(run_dir / "labels.tsv");
          return t;
        });
        const LabelTable* table_ptr = table ? &*table : nullptr;

        Vocabulary vocab;
        Model model;
        stage("vocabulary", [&] {
          auto plan = plan_vocabulary(all_sets, scheme, table_ptr, config.target_field);
          vocab = std::move(plan.base);
          ModelConfig mc = config.model;
          mc.vocab_size = 0;
          mc.seed = seed;
          model = Model::init(mc, vocab);
          for (auto& surface : plan.atomic) vocab.add_atomic_token(std::move(surface));
          model.grow_vocab(static_cast<int>(vocab.size()), seed + 1);
          vocab.save(run_dir / "vocab.txt");
        });

        auto encode_set = [&](const Dataset& d) {
          std::vector<TrainExample> out;
          for (const auto& ex : d.examples) {
            out.push_back(encode_example(vocab, ex.utterance, make_target(ex, scheme, table_ptr, config.target_field)));
          }
          return out;
        };
        const auto train_set = encode_set(splits.train);
        const auto val_set = encode_set(splits.val);
        const auto test_set = encode_set(splits.test);

        TrainConfig tc = train_config_from_json(config.train_overrides, config.tuning);
        tc.seed = seed;
        const TrainResult trained = stage("train", [&] {
          auto r = train(model, train_set, val_set, tc);
          r.best.save(run_dir / "model.ckpt");
          write_text(run_dir / "history.csv", history_csv(r.history));
          return r;
        });

        const Trie trie = stage("build-trie", [&] {
          std::vector<TokenSeq> seqs;
          for (const auto* set : {&train_set, &val_set, &test_set}) {
            if (!config.trie_from_all_splits && set != &train_set) continue;
            for (const auto& ex : *set) seqs.push_back(ex.target);
          }
          auto t = Trie::build(seqs);
          t.save(run_dir / "trie.txt");
          return t;
        });

        std::vector<TokenSeq> sources;
        std::vector<std::string> golds;
        for (std::size_t i = 0; i < test_set.size(); ++i) {
          sources.push_back(test_set[i].source);
          golds.push_back(gold_of(splits.test.examples[i], config.target_field));
        }
        BeamOptions beam;
        beam.beam_width = config.beam_width;
        beam.max_len = config.max_decode_len;

        for (const auto mode : config.decoding) {
          RunOutcome run;
          run.run_dir = run_dir;
          run.epochs_run = trained.epochs_run;
          run.best_val_exact_match = trained.best_val_exact_match;
          std::vector<std::string> predictions;
          stage("decode", [&] {
            const auto hyps = decode_all(trained.best, sources,
                                         mode == DecodingMode::Constrained ? &trie : nullptr, beam);
            std::size_t members = 0;
            std::string text;
            for (const auto& h : hyps) {
              const TokenSeq best = h.empty() ? TokenSeq{} : h.front().tokens;
              if (trie.contains(best)) ++members;
              predictions.push_back(decode_prediction(vocab, best));
              text += predictions.back() + "\n";
            }
            write_text(run_dir / ("predictions." + std::string(decoding_name(mode)) + ".txt"), text);
            if (mode == DecodingMode::Constrained) {
              run.trie_membership = hyps.empty() ? 1.0 : static_cast<double>(members) / static_cast<double>(hyps.size());
            }
          });
          stage("eval", [&] {
            const bool meaning_space = config.target_field == TargetField::Meaning;
            const auto m = meaning_space ? exact_match(predictions, golds, scheme, table_ptr)
                                         : exact_match(predictions, golds, CanonScheme{}, nullptr);
            run.result = RunResult{domain,           scheme.tag(), std::string(tuning_name(config.tuning)),
                                   std::string(decoding_name(mode)), seed, m.n, m.matches};
          });
          rows.push_back(run.result);
          outcome.runs.push_back(std::move(run));
          flush();
        }
      }
    }
  } catch (...) {
    flush();
    throw;
  }

  const std::vector<ResultField> group{ResultField::Domain, ResultField::Scheme, ResultField::Tuning,
                                       ResultField::Decoding};
  write_text(outcome.aggregate_csv, aggregate_csv(aggregate(rows, group), group));
  return outcome;
}

}  // namespace semparse
