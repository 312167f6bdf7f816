// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "semparse/canonicalize.hpp"
#include "semparse/datasets.hpp"
#include "semparse/pipeline.hpp"
#include "semparse/prompt_lm.hpp"
#include "semparse/trie_decoder.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace semparse;
using namespace semparse::test_support;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double limit_s, const std::function<Verdict()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs <= limit_s;
  const bool ok = v.pass && in_time;
  failures += !ok;
  std::printf("%s [%d] %s: %s (%.1fs, limit %.0fs%s)\n", ok ? "PASS" : "FAIL", id, name, v.detail.c_str(), secs,
              limit_s, in_time ? "" : ", too slow");
  std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

// Labels of each example counted once, straight from the bracket text.
std::map<std::string, int> label_counts(const Dataset& d) {
  std::map<std::string, int> out;
  for (const auto& e : d.examples) {
    std::set<std::string> seen;
    for (std::size_t pos = e.meaning.find('['); pos != std::string::npos; pos = e.meaning.find('[', pos + 1)) {
      seen.insert(e.meaning.substr(pos + 1, e.meaning.find(' ', pos) - pos - 1));
    }
    for (const auto& l : seen) ++out[l];
  }
  return out;
}

ExperimentConfig weather_config(const fs::path& out) {
  ExperimentConfig c;
  c.name = "weather-200shot";
  c.synthetic = SynthGrammarConfig::weather();
  c.sampling = "overnight";
  c.n_train = 200;
  c.schemes = {CanonScheme{}};
  c.tuning = TuningMode::FineTune;
  c.decoding = {DecodingMode::Constrained, DecodingMode::Unconstrained};
  c.seeds = {1};
  c.output_dir = out;
  return c;
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "semparse_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  report(1, "trie membership", 60, [] {
    std::mt19937_64 rng(101);
    std::size_t outputs = 0, members = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int vocab = std::uniform_int_distribution<int>(6, 50)(rng);
      const int n = std::uniform_int_distribution<int>(5, 200)(rng);
      const auto trie = Trie::build(random_sequences(rng, n, vocab, 8));
      const HashScorer scorer(vocab, static_cast<std::uint64_t>(trial));
      BeamOptions opt;
      opt.beam_width = std::uniform_int_distribution<int>(1, 10)(rng);
      const TokenSeq source{4, static_cast<TokenId>(trial % vocab)};
      for (const auto& h : constrained_beam_search(scorer, trie, source, opt)) {
        ++outputs;
        members += trie.contains(h.tokens);
      }
    }
    return Verdict{outputs > 0 && members == outputs,
                   std::to_string(members) + "/" + std::to_string(outputs) + " outputs in trie over 1000 pairs"};
  });

  report(2, "oracle equivalence", 60, [] {
    std::mt19937_64 rng(202);
    int agree = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const int vocab = std::uniform_int_distribution<int>(6, 30)(rng);
      const int n = std::uniform_int_distribution<int>(1, 50)(rng);
      const auto trie = Trie::build(random_sequences(rng, n, vocab, 6));
      const HashScorer scorer(vocab, static_cast<std::uint64_t>(trial) + 7);
      const TokenSeq source{5};
      BeamOptions opt;
      opt.beam_width = static_cast<int>(trie.size());
      const auto out = constrained_beam_search(scorer, trie, source, opt);
      Hypothesis best{{}, -std::numeric_limits<double>::infinity()};
      bool first = true;
      for (const auto& seq : trie.sequences()) {
        const Hypothesis h{seq, sequence_score(scorer, source, seq)};
        if (first || ranks_before(h, best)) best = h;
        first = false;
      }
      agree += !out.empty() && out.front().tokens == best.tokens;
    }
    return Verdict{agree == 100, std::to_string(agree) + "/100 tries agree with brute-force argmax"};
  });

  report(3, "gradient check", 300, [] {
    ModelConfig c;
    c.d_model = 4;
    c.n_heads = 2;
    c.n_encoder_layers = 1;
    c.n_decoder_layers = 1;
    c.max_len = 8;
    c.vocab_size = 9;
    c.prompt_len = 3;
    const Model m = gradcheck_model(c);
    const TrainExample ex{{4, 5, 6}, {7, 8}};
    const double prompt = grad_check(m, ex, GradTarget::PromptOnly).max_rel_error;
    const double all = grad_check(m, ex, GradTarget::All).max_rel_error;
    return Verdict{m.parameter_count() <= 5000 && prompt <= 1e-4 && all <= 1e-4,
                   std::to_string(m.parameter_count()) + " params, max rel error " +
                       fmt("PromptOnly %.2e, All %.2e (tol 1e-4)", prompt, all)};
  });

  report(4, "frozen backbone", 120, [] {
    const auto ds = gen_synthetic(SynthGrammarConfig::weather(), 160, 4);
    const std::vector<const Dataset*> sets{&ds};
    const auto plan = plan_vocabulary(sets, CanonScheme{}, nullptr, TargetField::Meaning);
    std::vector<TrainExample> data;
    for (const auto& ex : ds.examples) {
      data.push_back(encode_example(plan.base, ex.utterance, make_target(ex, CanonScheme{}, nullptr, TargetField::Meaning)));
    }
    const Model init = Model::init(ModelConfig{}, plan.base);
    TrainConfig tc = TrainConfig::defaults(TuningMode::PromptTune);
    tc.batch_size = 16;
    tc.max_epochs = 10;  // 160 / 16 = 10 steps per epoch -> 100 steps
    tc.eval_interval = 10;
    const auto result = train(init, data, data, tc, [](const Model&) { return 0.0; });
    std::size_t changed_backbone = 0;
    bool prompt_moved = false;
    for (std::size_t i = 0; i < init.parameters().size(); ++i) {
      const auto& a = init.parameters()[i];
      const auto& b = result.best.parameters()[i];
      const bool same = a.value.size() == b.value.size() &&
                        std::memcmp(a.value.data(), b.value.data(), sizeof(double) * a.value.size()) == 0;
      if (a.partition == Partition::Backbone) changed_backbone += !same;
      if (a.partition == Partition::Prompt) prompt_moved = !same;
    }
    return Verdict{changed_backbone == 0 && prompt_moved && result.epochs_run == 10,
                   "100 steps: " + std::to_string(changed_backbone) + " backbone tensors changed, prompt " +
                       (prompt_moved ? "changed" : "unchanged")};
  });

  report(5, "canonicalization round trip", 10, [] {
    std::mt19937_64 rng(505);
    std::vector<ParseTree> trees;
    for (int i = 0; i < 1000; ++i) trees.push_back(random_tree(rng));
    int bad = 0;
    for (const auto variant : {SchemeVariant::OutOfVocab, SchemeVariant::InVocab}) {
      for (const bool composed : {false, true}) {
        const CanonScheme scheme{variant, false, composed};
        for (const auto& t : trees) {
          const auto table = LabelTable::build(ontology_labels(t), scheme);
          const auto back = decanonicalize(apply_scheme(t, scheme, table), scheme, table);
          bad += !(back == (composed ? simplify(t) : t));
        }
      }
    }
    int not_idempotent = 0;
    for (const auto& t : trees) not_idempotent += !(simplify(simplify(t)) == simplify(t));
    return Verdict{bad == 0 && not_idempotent == 0, std::to_string(bad) + " round-trip failures in 4000, " +
                                                        std::to_string(not_idempotent) + " simplify idempotence failures in 1000"};
  });

  report(6, "SPIS coverage", 10, [] {
    const auto g = SynthGrammarConfig::reminder();
    const auto ds = gen_synthetic(g, 3000, 6);
    const auto available = label_counts(ds);
    std::string detail;
    bool all_exact = true;
    for (const int k : {10, 25, 500}) {
      const auto kept = label_counts(spis_sample(ds, k, 1));
      int exact = 0, over = 0, under = 0;
      for (const auto& [label, n] : available) {
        const int want = std::min(k, n);
        const int got = kept.count(label) ? kept.at(label) : 0;
        exact += got == want;
        over += got > want;
        under += got < want;
      }
      all_exact = all_exact && over == 0 && under == 0;
      detail += (detail.empty() ? "" : "; ") + std::string("k=") + std::to_string(k) + ": " + std::to_string(exact) + "/" +
                std::to_string(available.size()) + " labels exact, " + std::to_string(over) + " over, " +
                std::to_string(under) + " under";
    }
    return Verdict{all_exact, detail};
  });

  ExperimentOutcome first;
  report(7, "end-to-end learnability", 1800, [&] {
    first = run_experiment(weather_config(work / "run1"));
    const auto& constrained = first.runs.at(0);
    const double em = constrained.result.accuracy();
    return Verdict{em >= 0.80 && constrained.trie_membership == 1.0,
                   fmt("constrained test EM %.4f (target 0.90, floor 0.80)", em) +
                       ", epochs " + std::to_string(constrained.epochs_run) +
                       (em >= 0.90 ? ", target met" : ", target missed") +
                       fmt(", trie membership %.4f", constrained.trie_membership.value_or(0.0))};
  });

  report(8, "constrained >= unconstrained", 5, [&] {
    if (first.runs.size() < 2) return Verdict{false, "criterion 7 run missing"};
    const double c = first.runs[0].result.accuracy();
    const double u = first.runs[1].result.accuracy();
    return Verdict{c >= u - 0.01, fmt("constrained %.4f vs unconstrained %.4f", c, u)};
  });

  report(9, "determinism", 1800, [&] {
    if (first.runs.empty()) return Verdict{false, "criterion 7 run missing"};
    const auto second = run_experiment(weather_config(work / "run2"));
    const bool results = slurp(first.results_csv) == slurp(second.results_csv);
    const bool aggregate = slurp(first.aggregate_csv) == slurp(second.aggregate_csv);
    return Verdict{results && aggregate, std::string("results.csv ") + (results ? "identical" : "differs") +
                                             ", aggregate.csv " + (aggregate ? "identical" : "differs")};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
