// semparse: command-line driver for the canonicalization / prompt-tuning
// pipeline. Run `semparse --help` for the subcommand list.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "semparse/autodiff.hpp"
#include "semparse/canonicalize.hpp"
#include "semparse/datasets.hpp"
#include "semparse/error.hpp"
#include "semparse/eval.hpp"
#include "semparse/pipeline.hpp"
#include "semparse/prompt_lm.hpp"
#include "semparse/tokenizer.hpp"
#include "semparse/trie_decoder.hpp"

namespace fs = std::filesystem;
using namespace semparse;
using nlohmann::json;

namespace {

std::optional<fs::path> output_root() {
  if (const char* env = std::getenv("SEMPARSE_OUTPUT_ROOT"); env && *env) return fs::path(env);
  return std::nullopt;
}

// Relative output paths land under $SEMPARSE_OUTPUT_ROOT when it is set.
fs::path out_path(const std::string& p) {
  fs::path path(p);
  if (const auto root = output_root(); root && path.is_relative()) path = *root / path;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
}

Dataset read_dataset(const std::string& path) {
  return path.ends_with(".tsv") ? load_top_tsv(path) : load_jsonl(path);
}

struct SchemeFlags {
  std::string variant = "none";
  bool shorten = false;
  bool simplify = false;

  void add_to(CLI::App* app) {
    app->add_option("--scheme", variant, "none | simplify | oov | invocab")->capture_default_str();
    app->add_flag("--shorten", shorten, "strip IN:/SL: prefixes and lowercase label names");
    app->add_flag("--simplify", simplify, "run simplify before a label substitution");
  }
  CanonScheme scheme() const { return {parse_variant(variant), shorten, simplify}; }
};

TargetField parse_field_flag(const std::string& s) {
  if (s == "meaning") return TargetField::Meaning;
  if (s == "canonical") return TargetField::Canonical;
  throw Error(Errc::InvalidArgument, "--field must be meaning or canonical");
}

// Table for the scheme: loaded from `path` when given, otherwise built from
// the datasets. Null when the scheme substitutes nothing.
std::optional<LabelTable> resolve_table(const CanonScheme& scheme, const std::string& path,
                                        const std::vector<const Dataset*>& sets) {
  if (!scheme.substitutes_labels()) return std::nullopt;
  if (!path.empty() && fs::exists(path)) {
    auto t = LabelTable::load_tsv(path);
    t.set_atomic_surrogates(scheme.variant == SchemeVariant::OutOfVocab);
    return t;
  }
  return label_table_for(sets, scheme);
}

// ---- canonicalize ----

struct CanonicalizeArgs {
  std::string in;
  std::string out;
  std::string table = "labels.tsv";
  SchemeFlags scheme;
};

void cmd_canonicalize(const CanonicalizeArgs& a) {
  Dataset ds = read_dataset(a.in);
  const CanonScheme scheme = a.scheme.scheme();
  std::set<OntologyLabel> labels;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    try {
      const auto l = ontology_labels(parse_top(ds.examples[i].meaning));
      labels.insert(l.begin(), l.end());
    } catch (const Error& e) {
      if (scheme == CanonScheme{}) continue;  // opaque meanings pass through unchanged
      throw Error(e.code(), a.in + " record " + std::to_string(i + 1) + ": " + e.message(), i + 1);
    }
  }
  std::optional<LabelTable> table;
  if (!labels.empty()) {
    table = LabelTable::build(labels, scheme.substitutes_labels() ? scheme : CanonScheme{SchemeVariant::OutOfVocab});
    table->save_tsv(out_path(a.table));
  }
  if (scheme != CanonScheme{}) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      auto& ex = ds.examples[i];
      try {
        ex.meaning = scheme.substitutes_labels() ? apply_scheme(parse_top(ex.meaning), scheme, *table)
                                                 : apply_scheme(parse_top(ex.meaning), scheme);
      } catch (const Error& e) {
        throw Error(e.code(), a.in + " record " + std::to_string(i + 1) + ": " + e.message(), i + 1);
      }
    }
  }
  ds.provenance.method = "canonicalize";
  ds.provenance.params = {{"scheme", scheme.tag()}};
  save_jsonl(ds, out_path(a.out));
  std::cout << "wrote " << ds.size() << " records (" << scheme.tag() << ")\n";
}

// ---- sample ----

struct SampleArgs {
  std::string in;
  std::string method = "overnight";
  std::size_t n_train = 200;
  double val_frac = 0.2;
  int k = 25;
  std::uint64_t seed = 1;
  std::string out_dir = "sample_out";
};

void cmd_sample(const SampleArgs& a) {
  const Dataset ds = read_dataset(a.in);
  const fs::path dir = out_path(a.out_dir + "/");
  fs::create_directories(dir);
  if (a.method == "overnight") {
    const auto s = overnight_split(ds, a.n_train, a.val_frac, a.seed);
    for (const Dataset* d : {&s.train, &s.val, &s.test}) {
      save_jsonl(*d, dir / (d->split + ".jsonl"));
      save_sidecar(*d, dir / (d->split + ".split.json"));
    }
    std::cout << "train " << s.train.size() << ", val " << s.val.size() << ", test " << s.test.size() << "\n";
  } else if (a.method == "spis") {
    const auto s = spis_sample(ds, a.k, a.seed);
    save_jsonl(s, dir / "train.jsonl");
    save_sidecar(s, dir / "train.split.json");
    std::cout << "kept " << s.size() << " of " << ds.size() << "\n";
  } else {
    throw Error(Errc::InvalidArgument, "--method must be overnight or spis");
  }
}

// ---- synth ----

struct SynthArgs {
  std::string preset = "weather";
  std::string grammar;
  std::size_t n = 600;
  std::uint64_t seed = 11;
  std::string out = "synthetic.jsonl";
};

void cmd_synth(const SynthArgs& a) {
  SynthGrammarConfig g;
  if (!a.grammar.empty()) {
    g = SynthGrammarConfig::from_json(read_json(a.grammar));
  } else if (a.preset == "weather") {
    g = SynthGrammarConfig::weather();
  } else if (a.preset == "reminder") {
    g = SynthGrammarConfig::reminder();
  } else {
    throw Error(Errc::InvalidArgument, "--preset must be weather or reminder");
  }
  const auto ds = gen_synthetic(g, a.n, a.seed);
  const auto path = out_path(a.out);
  save_jsonl(ds, path);
  save_sidecar(ds, path.string() + ".meta.json");
  std::cout << "wrote " << ds.size() << " examples to " << path.string() << "\n";
}

// ---- build-trie ----

struct TrieArgs {
  std::vector<std::string> in;
  std::string vocab;
  std::string table;
  std::string field = "meaning";
  SchemeFlags scheme;
  std::string out = "trie.txt";
};

void cmd_build_trie(const TrieArgs& a) {
  const Vocabulary vocab = Vocabulary::load(a.vocab);
  std::vector<Dataset> sets;
  for (const auto& p : a.in) sets.push_back(read_dataset(p));
  std::vector<const Dataset*> ptrs;
  for (const auto& d : sets) ptrs.push_back(&d);
  const CanonScheme scheme = a.scheme.scheme();
  const auto table = resolve_table(scheme, a.table, ptrs);
  const auto field = parse_field_flag(a.field);
  std::vector<TokenSeq> seqs;
  for (const auto& d : sets) {
    for (const auto& ex : d.examples) {
      seqs.push_back(vocab.encode(space_brackets(make_target(ex, scheme, table ? &*table : nullptr, field))));
    }
  }
  const auto trie = Trie::build(seqs);
  trie.save(out_path(a.out));
  std::cout << "trie with " << trie.size() << " sequences\n";
}

// ---- train ----

struct TrainArgs {
  std::string train_path;
  std::string val_path;
  std::vector<std::string> vocab_extra;
  std::string field = "meaning";
  SchemeFlags scheme;
  std::string tuning = "finetune";
  std::string config;
  std::optional<double> lr;
  std::optional<int> epochs;
  std::optional<int> prompt_len;
  std::uint64_t seed = 1;
  std::string out_dir = "train_out";
};

void cmd_train(const TrainArgs& a) {
  const Dataset train_ds = read_dataset(a.train_path);
  const Dataset val_ds = read_dataset(a.val_path);
  std::vector<Dataset> extra;
  for (const auto& p : a.vocab_extra) extra.push_back(read_dataset(p));
  std::vector<const Dataset*> sets{&train_ds, &val_ds};
  for (const auto& d : extra) sets.push_back(&d);

  const json cfg = a.config.empty() ? json::object() : read_json(a.config);
  const TuningMode mode = parse_tuning(a.tuning);
  ModelConfig mc = model_config_from_json(cfg.value("model", json::object()));
  if (a.prompt_len) mc.prompt_len = *a.prompt_len;
  mc.seed = a.seed;
  mc.vocab_size = 0;
  TrainConfig tc = train_config_from_json(cfg.value("train", json::object()), mode);
  if (a.lr) tc.learning_rate = *a.lr;
  if (a.epochs) tc.max_epochs = *a.epochs;
  tc.seed = a.seed;

  const fs::path dir = out_path(a.out_dir + "/");
  fs::create_directories(dir);
  const CanonScheme scheme = a.scheme.scheme();
  const auto field = parse_field_flag(a.field);
  const auto table = label_table_for(sets, scheme);
  const LabelTable* tp = table ? &*table : nullptr;
  if (table) table->save_tsv(dir / "labels.tsv");

  auto plan = plan_vocabulary(sets, scheme, tp, field);
  Vocabulary vocab = std::move(plan.base);
  Model model = Model::init(mc, vocab);
  for (auto& s : plan.atomic) vocab.add_atomic_token(std::move(s));
  model.grow_vocab(static_cast<int>(vocab.size()), a.seed + 1);
  vocab.save(dir / "vocab.txt");

  auto encode = [&](const Dataset& d) {
    std::vector<TrainExample> out;
    for (const auto& ex : d.examples) out.push_back(encode_example(vocab, ex.utterance, make_target(ex, scheme, tp, field)));
    return out;
  };
  const auto result = train(model, encode(train_ds), encode(val_ds), tc);
  result.best.save(dir / "model.ckpt");
  write_text(dir / "history.csv", history_csv(result.history));
  std::printf("epochs %d, best val exact match %.4f at epoch %d\n", result.epochs_run, result.best_val_exact_match,
              result.best_epoch);
}

// ---- decode ----

struct DecodeArgs {
  std::string model;
  std::string vocab;
  std::string trie;
  std::string input;
  std::string out = "predictions.txt";
  bool unconstrained = false;
  int beam = 10;
  int max_len = 48;
  std::optional<int> top_k;
};

void cmd_decode(const DecodeArgs& a) {
  if (a.trie.empty() && !a.unconstrained) throw Error(Errc::InvalidArgument, "give --trie or --unconstrained");
  for (const auto* p : {&a.model, &a.vocab, &a.input}) {
    if (!fs::exists(*p)) throw Error(Errc::Io, "missing artifact " + *p);
  }
  const Model model = Model::load(a.model);
  const Vocabulary vocab = Vocabulary::load(a.vocab);
  std::optional<Trie> trie;
  if (!a.unconstrained) {
    if (!fs::exists(a.trie)) throw Error(Errc::Io, "missing artifact " + a.trie);
    trie = Trie::load(a.trie);
  }
  std::vector<TokenSeq> sources;
  for (const auto& line : read_lines(a.input)) sources.push_back(vocab.encode(line));
  BeamOptions options;
  options.beam_width = a.beam;
  options.max_len = a.max_len;
  const auto hyps = decode_all(model, sources, trie ? &*trie : nullptr, options);
  std::string text;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (!a.top_k) {
      text += (hyps[i].empty() ? std::string() : decode_prediction(vocab, hyps[i].front().tokens)) + "\n";
      continue;
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(*a.top_k), hyps[i].size());
    for (std::size_t r = 0; r < k; ++r) {
      char lp[32];
      std::snprintf(lp, sizeof(lp), "%.6f", hyps[i][r].logprob);
      text += std::to_string(i) + "\t" + std::to_string(r) + "\t" + lp + "\t" + decode_prediction(vocab, hyps[i][r].tokens) + "\n";
    }
  }
  write_text(out_path(a.out), text);
}

// ---- eval ----

struct EvalArgs {
  std::string predictions;
  std::string gold;
  std::string table;
  std::string field = "meaning";
  SchemeFlags scheme;
  std::string results;
  std::string domain;
  std::string tuning = "finetune";
  std::string decoding = "constrained";
  std::uint64_t seed = 0;
};

void cmd_eval(const EvalArgs& a) {
  const auto preds = read_lines(a.predictions);
  const Dataset gold_ds = read_dataset(a.gold);
  const auto field = parse_field_flag(a.field);
  std::vector<std::string> golds;
  for (const auto& ex : gold_ds.examples) golds.push_back(gold_of(ex, field));
  const CanonScheme scheme = field == TargetField::Meaning ? a.scheme.scheme() : CanonScheme{};
  const std::vector<const Dataset*> sets{&gold_ds};
  const auto table = resolve_table(scheme, a.table, sets);
  const auto m = exact_match(preds, golds, scheme, table ? &*table : nullptr);
  std::printf("exact match %zu/%zu = %.4f\n", m.matches, m.n, m.accuracy());
  if (!a.results.empty()) {
    const std::string domain = a.domain.empty() && !gold_ds.empty() ? gold_ds.examples.front().domain : a.domain;
    const std::vector<RunResult> rows{{domain, a.scheme.scheme().tag(), a.tuning, a.decoding, a.seed, m.n, m.matches}};
    write_text(out_path(a.results), results_csv(rows));
  }
}

// ---- experiment ----

struct ExperimentArgs {
  std::string config;
  std::string output_dir;
  std::vector<std::uint64_t> seeds;
};

void cmd_experiment(const ExperimentArgs& a) {
  json j = read_json(a.config);
  if (!a.output_dir.empty()) j["output_dir"] = a.output_dir;
  if (!a.seeds.empty()) j["seeds"] = a.seeds;
  const auto cfg = ExperimentConfig::from_json(j, output_root());
  const auto outcome = run_experiment(cfg);
  for (const auto& run : outcome.runs) {
    std::printf("%s %s seed %llu: %zu/%zu = %.4f (epochs %d)\n", run.result.scheme.c_str(), run.result.decoding.c_str(),
                static_cast<unsigned long long>(run.result.seed), run.result.matches, run.result.n,
                run.result.accuracy(), run.epochs_run);
  }
  std::cout << "results: " << outcome.results_csv.string() << "\naggregate: " << outcome.aggregate_csv.string() << "\n";
}

// ---- gradcheck ----

struct GradCheckArgs {
  ModelConfig model = [] {
    ModelConfig c;
    c.d_model = 4;
    c.n_heads = 2;
    c.n_encoder_layers = 1;
    c.n_decoder_layers = 1;
    c.max_len = 8;
    c.vocab_size = 9;
    c.prompt_len = 3;
    return c;
  }();
  std::string target = "both";
  double tolerance = 1e-4;
  double step = 1e-4;
  std::string fault;
};

int cmd_gradcheck(const GradCheckArgs& a) {
  const Model model = gradcheck_model(a.model);
  const auto v = static_cast<TokenId>(a.model.vocab_size);
  const TrainExample ex{{4 % v, 5 % v, 6 % v}, {7 % v, 8 % v}};
  std::vector<std::pair<std::string, GradTarget>> targets;
  if (a.target == "prompt" || a.target == "both") targets.emplace_back("prompt", GradTarget::PromptOnly);
  if (a.target == "all" || a.target == "both") targets.emplace_back("all", GradTarget::All);
  if (targets.empty()) throw Error(Errc::InvalidArgument, "--target must be prompt, all or both");
  if (!a.fault.empty()) ad::set_backward_fault(a.fault);
  std::printf("parameters: %zu\n", model.parameter_count());
  bool ok = true;
  for (const auto& [name, target] : targets) {
    const auto report = grad_check(model, ex, target, a.step);
    for (const auto& g : report.groups) {
      std::printf("%-6s %-22s %.3e%s\n", name.c_str(), g.name.c_str(), g.max_rel_error,
                  g.max_rel_error <= a.tolerance ? "" : "  FAIL");
    }
    const auto bad = report.failing(a.tolerance);
    std::printf("%-6s max relative error %.3e (tolerance %.1e)\n", name.c_str(), report.max_rel_error, a.tolerance);
    if (!bad.empty()) {
      ok = false;
      std::string names;
      for (const auto& b : bad) names += (names.empty() ? "" : ",") + b;
      std::fprintf(stderr, "error: GradientMismatch: %s: %s\n", name.c_str(), names.c_str());
    }
  }
  ad::set_backward_fault(std::nullopt);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic parsing with canonicalized targets, prompt tuning and constrained decoding"};
  app.require_subcommand(1);

  CanonicalizeArgs canon;
  auto* c = app.add_subcommand("canonicalize", "rewrite dataset meanings under a canonicalization scheme");
  c->add_option("--in", canon.in, "input dataset (.jsonl or .tsv)")->required()->check(CLI::ExistingFile);
  c->add_option("--out", canon.out, "output JSONL")->required();
  c->add_option("--table", canon.table, "label table TSV to write")->capture_default_str();
  canon.scheme.add_to(c);

  SampleArgs sample;
  auto* s = app.add_subcommand("sample", "draw a 200-shot split or an SPIS sample");
  s->add_option("--in", sample.in)->required()->check(CLI::ExistingFile);
  s->add_option("--method", sample.method, "overnight | spis")->capture_default_str();
  s->add_option("--n-train", sample.n_train)->capture_default_str();
  s->add_option("--val-frac", sample.val_frac)->capture_default_str();
  s->add_option("-k,--k", sample.k, "SPIS samples per label")->capture_default_str();
  s->add_option("--seed", sample.seed)->capture_default_str();
  s->add_option("--out-dir", sample.out_dir)->capture_default_str();

  SynthArgs synth;
  auto* y = app.add_subcommand("synth", "generate a synthetic TOP-style dataset");
  y->add_option("--preset", synth.preset, "weather | reminder")->capture_default_str();
  y->add_option("--grammar", synth.grammar, "grammar JSON (overrides --preset)")->check(CLI::ExistingFile);
  y->add_option("-n,--n", synth.n)->capture_default_str();
  y->add_option("--seed", synth.seed)->capture_default_str();
  y->add_option("--out", synth.out)->capture_default_str();

  TrieArgs trie;
  auto* t = app.add_subcommand("build-trie", "build the prefix trie of admissible targets");
  t->add_option("--in", trie.in, "datasets whose targets are admissible")->required();
  t->add_option("--vocab", trie.vocab)->required()->check(CLI::ExistingFile);
  t->add_option("--table", trie.table, "label table TSV (built from --in when absent)");
  t->add_option("--field", trie.field, "meaning | canonical")->capture_default_str();
  trie.scheme.add_to(t);
  t->add_option("--out", trie.out)->capture_default_str();

  TrainArgs tr;
  auto* r = app.add_subcommand("train", "train a model and write vocab, labels and checkpoint");
  r->add_option("--train", tr.train_path)->required()->check(CLI::ExistingFile);
  r->add_option("--val", tr.val_path)->required()->check(CLI::ExistingFile);
  r->add_option("--vocab-from", tr.vocab_extra, "extra datasets whose words join the vocabulary");
  r->add_option("--field", tr.field, "meaning | canonical")->capture_default_str();
  tr.scheme.add_to(r);
  r->add_option("--tuning", tr.tuning, "prompt | finetune")->capture_default_str();
  r->add_option("--config", tr.config, "JSON with \"model\" and \"train\" objects")->check(CLI::ExistingFile);
  r->add_option("--lr", tr.lr);
  r->add_option("--epochs", tr.epochs);
  r->add_option("--prompt-len", tr.prompt_len);
  r->add_option("--seed", tr.seed)->capture_default_str();
  r->add_option("--out-dir", tr.out_dir)->capture_default_str();

  DecodeArgs dec;
  auto* d = app.add_subcommand("decode", "beam-search decode one utterance per input line");
  d->add_option("--model", dec.model)->required();
  d->add_option("--vocab", dec.vocab)->required();
  d->add_option("--trie", dec.trie, "trie file for constrained decoding");
  d->add_flag("--unconstrained", dec.unconstrained, "search the full vocabulary");
  d->add_option("--input", dec.input)->required();
  d->add_option("--out", dec.out)->capture_default_str();
  d->add_option("--beam", dec.beam)->capture_default_str();
  d->add_option("--max-len", dec.max_len)->capture_default_str();
  d->add_option("--top-k", dec.top_k, "write index, rank, logprob, prediction for the k best");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "exact match of predictions against gold meanings");
  e->add_option("--predictions", ev.predictions)->required()->check(CLI::ExistingFile);
  e->add_option("--gold", ev.gold)->required()->check(CLI::ExistingFile);
  e->add_option("--table", ev.table, "label table TSV");
  e->add_option("--field", ev.field, "meaning | canonical")->capture_default_str();
  ev.scheme.add_to(e);
  e->add_option("--results", ev.results, "write a one-row results CSV");
  e->add_option("--domain", ev.domain);
  e->add_option("--tuning", ev.tuning)->capture_default_str();
  e->add_option("--decoding", ev.decoding)->capture_default_str();
  e->add_option("--seed", ev.seed)->capture_default_str();

  ExperimentArgs ex;
  auto* x = app.add_subcommand("experiment", "run the full pipeline from a JSON config");
  x->add_option("config", ex.config)->required()->check(CLI::ExistingFile);
  x->add_option("--output-dir", ex.output_dir, "overrides output_dir");
  x->add_option("--seeds", ex.seeds, "overrides seeds");

  GradCheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "finite-difference check of the model gradients");
  g->add_option("--d-model", gc.model.d_model)->capture_default_str();
  g->add_option("--heads", gc.model.n_heads)->capture_default_str();
  g->add_option("--encoder-layers", gc.model.n_encoder_layers)->capture_default_str();
  g->add_option("--decoder-layers", gc.model.n_decoder_layers)->capture_default_str();
  g->add_option("--vocab-size", gc.model.vocab_size)->capture_default_str();
  g->add_option("--prompt-len", gc.model.prompt_len)->capture_default_str();
  g->add_option("--seed", gc.model.seed)->capture_default_str();
  g->add_option("--target", gc.target, "prompt | all | both")->capture_default_str();
  g->add_option("--tolerance", gc.tolerance)->capture_default_str();
  g->add_option("--step", gc.step, "finite-difference step")->capture_default_str();
  g->add_option("--inject-fault", gc.fault, "flip the sign of one backward rule, e.g. gelu");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    std::fprintf(stderr, "error: Usage: %s\n", err.what());
    return 2;
  }

  try {
    if (*c) cmd_canonicalize(canon);
    if (*s) cmd_sample(sample);
    if (*y) cmd_synth(synth);
    if (*t) cmd_build_trie(trie);
    if (*r) cmd_train(tr);
    if (*d) cmd_decode(dec);
    if (*e) cmd_eval(ev);
    if (*x) cmd_experiment(ex);
    if (*g) return cmd_gradcheck(gc);
  } catch (const Error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: Internal: %s\n", err.what());
    return 1;
  }
  return 0;
}
