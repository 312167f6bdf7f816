#include "semparse/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "semparse/error.hpp"
#include "semparse/meaning_repr.hpp"

namespace semparse {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  return out;
}

std::string require_string(const json& record, const char* key, std::size_t line_no, bool required) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) {
    if (required) throw Error(Errc::MissingField, std::string("record lacks \"") + key + "\"", line_no);
    return {};
  }
  if (!it->is_string()) throw Error(Errc::MalformedRecord, std::string("\"") + key + "\" is not a string", line_no);
  return it->get<std::string>();
}

Dataset subset(const Dataset& from, const std::vector<std::size_t>& idx, std::string split, std::string method,
               json params, std::uint64_t seed) {
  Dataset out;
  out.examples.reserve(idx.size());
  for (auto i : idx) out.examples.push_back(from.examples[i]);
  out.split = std::move(split);
  out.provenance = {from.provenance.source, std::move(method), std::move(params), seed};
  return out;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

}  // namespace

json Provenance::to_json() const {
  return json{{"source", source}, {"method", method}, {"params", params}, {"seed", seed}};
}

Dataset load_jsonl(const std::filesystem::path& path) {
  auto in = open_in(path);
  Dataset ds;
  ds.provenance.source = path.string();
  ds.provenance.method = "load_jsonl";
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_ws(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(Errc::MalformedRecord, "invalid JSON in " + path.string() + ": " + e.what(), line_no);
    }
    if (!record.is_object()) throw Error(Errc::MalformedRecord, "record is not a JSON object", line_no);
    Example ex;
    ex.utterance = require_string(record, "utterance", line_no, true);
    ex.meaning = require_string(record, "meaning", line_no, true);
    if (ex.utterance.empty() || ex.meaning.empty()) {
      throw Error(Errc::MalformedRecord, "utterance and meaning must be non-empty", line_no);
    }
    if (record.contains("canonical") && !record["canonical"].is_null()) {
      ex.canonical = require_string(record, "canonical", line_no, false);
    }
    ex.domain = require_string(record, "domain", line_no, false);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

void save_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& ex : dataset.examples) {
    json record = {{"utterance", ex.utterance}, {"meaning", ex.meaning}};
    if (ex.canonical) record["canonical"] = *ex.canonical;
    record["domain"] = ex.domain;
    out << record.dump() << '\n';
  }
}

Dataset load_top_tsv(const std::filesystem::path& path) {
  auto in = open_in(path);
  Dataset ds;
  ds.provenance.source = path.string();
  ds.provenance.method = "load_top_tsv";
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (normalize_ws(line).empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() < 2) throw Error(Errc::MissingField, "expected utterance<TAB>meaning[<TAB>domain]", line_no);
    if (cols.size() > 3) throw Error(Errc::MalformedRecord, "more than three columns", line_no);
    try {
      (void)parse_top(cols[1]);
    } catch (const Error& e) {
      throw Error(Errc::MalformedRecord, std::string("meaning does not parse: ") + e.what(), line_no);
    }
    if (normalize_ws(cols[0]).empty()) throw Error(Errc::MalformedRecord, "empty utterance", line_no);
    ds.examples.push_back({cols[0], cols[1], std::nullopt, cols.size() == 3 ? cols[2] : std::string()});
  }
  return ds;
}

void save_sidecar(const Dataset& dataset, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << dataset.provenance.to_json().dump(2) << '\n';
}

SplitSets overnight_split(const Dataset& dataset, std::size_t n_train, double val_frac, std::uint64_t seed) {
  if (dataset.size() <= n_train) {
    throw Error(Errc::TooFewExamples, "need more than " + std::to_string(n_train) + " examples, have " +
                                          std::to_string(dataset.size()));
  }
  if (!(val_frac >= 0.0 && val_frac <= 1.0)) throw Error(Errc::InvalidArgument, "val_frac must lie in [0, 1]");
  const auto idx = shuffled_indices(dataset.size(), seed);
  const std::size_t rest = dataset.size() - n_train;
  const auto n_val = static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(rest)));
  const json params = {{"n_train", n_train}, {"val_frac", val_frac}};
  auto part = [&](std::size_t from, std::size_t to, const char* split) {
    return subset(dataset, std::vector<std::size_t>(idx.begin() + static_cast<std::ptrdiff_t>(from),
                                                    idx.begin() + static_cast<std::ptrdiff_t>(to)),
                  split, "overnight_split", params, seed);
  };
  return {part(0, n_train, "train"), part(n_train, n_train + n_val, "val"),
          part(n_train + n_val, dataset.size(), "test")};
}

Dataset spis_sample(const Dataset& dataset, int k, std::uint64_t seed) {
  if (k < 1) throw Error(Errc::InvalidArgument, "SPIS k must be >= 1");
  std::vector<std::set<OntologyLabel>> labels;
  labels.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    try {
      labels.push_back(ontology_labels(parse_top(dataset.examples[i].meaning)));
    } catch (const Error& e) {
      throw Error(Errc::MalformedRecord, std::string("SPIS needs TOP meanings: ") + e.what(), i + 1);
    }
  }
  std::map<OntologyLabel, int> kept;
  std::vector<std::size_t> keep;
  for (auto i : shuffled_indices(dataset.size(), seed)) {
    const bool wanted = std::any_of(labels[i].begin(), labels[i].end(),
                                    [&](const OntologyLabel& l) { return kept[l] < k; });
    if (!wanted) continue;
    keep.push_back(i);
    for (const auto& l : labels[i]) ++kept[l];
  }
  Dataset out = subset(dataset, keep, dataset.split, "spis_sample", json{{"k", k}}, seed);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic grammar

namespace {

const char* const kVerbs[] = {"GET", "SET", "CREATE", "DELETE", "UPDATE", "CHECK", "FIND", "SHOW", "CANCEL", "SNOOZE"};
const char* const kNouns[] = {"WEATHER", "REMINDER", "ALARM", "TIMER", "EVENT", "SUNSET", "FORECAST", "TODO"};
const char* const kSlotNames[] = {
    "LOCATION", "DATE_TIME", "WEATHER_ATTRIBUTE", "TEMPERATURE_UNIT", "TODO", "PERSON_REMINDED", "RECURRING_DATE_TIME",
    "REMINDER_ID", "METHOD", "ATTENDEE", "AMOUNT", "ORDINAL", "CONTACT", "GROUP", "CATEGORY", "DURATION",
    "FREQUENCY", "START_TIME", "END_TIME", "NAME", "TYPE", "PLACE", "SOURCE", "DESTINATION", "NOTE", "PRIORITY",
    "LABEL", "REPEAT", "VALUE", "UNIT", "TARGET", "TOPIC"};
const char* const kCarriers[] = {"what", "is", "the", "please", "show", "me", "can", "you", "tell", "i", "want",
                                 "to", "a", "my", "will", "it", "be", "let", "know", "hey", "now", "any"};
const char* const kCues[] = {"in", "at", "for", "on", "about", "with", "by", "near", "from", "until"};

struct IntentRule {
  std::string name;
  std::vector<std::vector<std::string>> templates;
  std::vector<int> slots;
};

struct SlotRule {
  std::string name;
  std::string cue;
  std::vector<std::string> values;
};

struct Grammar {
  std::vector<IntentRule> intents;
  std::vector<SlotRule> slots;
};

std::string intent_name(int i) {
  constexpr int nv = static_cast<int>(std::size(kVerbs));
  constexpr int nn = static_cast<int>(std::size(kNouns));
  std::string name = std::string(kVerbs[i % nv]) + "_" + kNouns[(i / nv) % nn];
  if (i >= nv * nn) name += "_" + std::to_string(i / (nv * nn));
  return name;
}

std::string slot_name(int i) {
  constexpr int ns = static_cast<int>(std::size(kSlotNames));
  std::string name = kSlotNames[i % ns];
  if (i >= ns) name += "_" + std::to_string(i / ns);
  return name;
}

Grammar build_grammar(const SynthGrammarConfig& cfg) {
  if (cfg.n_intents < 1) throw Error(Errc::InvalidArgument, "synthetic grammar needs at least one intent");
  if (cfg.n_slots < 0 || cfg.values_per_slot < 1 || cfg.templates_per_intent < 1 || cfg.min_slots_per_intent < 0 ||
      cfg.max_slots_per_intent < cfg.min_slots_per_intent) {
    throw Error(Errc::InvalidArgument, "inconsistent synthetic grammar sizes");
  }
  std::mt19937_64 rng(cfg.grammar_seed);
  static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  std::set<std::string> used;
  auto pseudo_word = [&] {
    std::uniform_int_distribution<std::size_t> c(0, kConsonants.size() - 1);
    std::uniform_int_distribution<std::size_t> v(0, kVowels.size() - 1);
    while (true) {
      std::string w;
      for (int s = 0; s < 3; ++s) {
        w += kConsonants[c(rng)];
        w += kVowels[v(rng)];
      }
      if (used.insert(w).second) return w;
    }
  };
  auto pick = [&](auto& array) {
    std::uniform_int_distribution<std::size_t> d(0, std::size(array) - 1);
    return std::string(array[d(rng)]);
  };

  Grammar g;
  for (int s = 0; s < cfg.n_slots; ++s) {
    SlotRule rule{slot_name(s), pick(kCues), {}};
    for (int v = 0; v < cfg.values_per_slot; ++v) rule.values.push_back(pseudo_word());
    g.slots.push_back(std::move(rule));
  }
  for (int i = 0; i < cfg.n_intents; ++i) {
    IntentRule rule{intent_name(i), {}, {}};
    const std::string keyword = pseudo_word();
    for (int t = 0; t < cfg.templates_per_intent; ++t) {
      std::uniform_int_distribution<int> len(1, 3);
      std::vector<std::string> words;
      const int n = len(rng);
      for (int w = 0; w < n; ++w) words.push_back(pick(kCarriers));
      words.push_back(keyword);
      rule.templates.push_back(std::move(words));
    }
    if (cfg.n_slots > 0) {
      const int hi = std::min(cfg.max_slots_per_intent, cfg.n_slots);
      const int lo = std::min(cfg.min_slots_per_intent, hi);
      std::uniform_int_distribution<int> count(lo, hi);
      std::vector<int> all(static_cast<std::size_t>(cfg.n_slots));
      std::iota(all.begin(), all.end(), 0);
      std::shuffle(all.begin(), all.end(), rng);
      const int n = count(rng);
      for (int k = 0; k < n; ++k) rule.slots.push_back(all[static_cast<std::size_t>(k)]);
    }
    g.intents.push_back(std::move(rule));
  }
  // Every slot must be reachable from some intent.
  if (cfg.n_slots > 0) {
    for (int s = 0; s < cfg.n_slots; ++s) {
      const bool covered = std::any_of(g.intents.begin(), g.intents.end(), [&](const IntentRule& r) {
        return std::find(r.slots.begin(), r.slots.end(), s) != r.slots.end();
      });
      if (!covered) g.intents[static_cast<std::size_t>(s % cfg.n_intents)].slots.push_back(s);
    }
  }
  return g;
}

Node sample_intent(const Grammar& g, int intent, std::mt19937_64& rng, int nested_slot_host) {
  const auto& rule = g.intents[static_cast<std::size_t>(intent)];
  std::uniform_int_distribution<std::size_t> tmpl(0, rule.templates.size() - 1);
  Node node = Node::intent(rule.name);
  for (const auto& w : rule.templates[tmpl(rng)]) node.children.push_back(Node::token(w));

  std::vector<int> chosen;
  std::bernoulli_distribution include(0.6);
  for (int s : rule.slots) {
    if (include(rng)) chosen.push_back(s);
  }
  if (nested_slot_host >= 0 && chosen.empty() && !rule.slots.empty()) chosen.push_back(rule.slots.front());
  std::shuffle(chosen.begin(), chosen.end(), rng);

  std::size_t host = chosen.size();
  if (nested_slot_host >= 0 && !chosen.empty()) {
    std::uniform_int_distribution<std::size_t> h(0, chosen.size() - 1);
    host = h(rng);
  }
  for (std::size_t c = 0; c < chosen.size(); ++c) {
    const auto& slot = g.slots[static_cast<std::size_t>(chosen[c])];
    node.children.push_back(Node::token(slot.cue));
    Node slot_node = Node::slot(slot.name);
    if (c == host) {
      slot_node.children.push_back(sample_intent(g, nested_slot_host, rng, -1));
    } else {
      std::uniform_int_distribution<std::size_t> v(0, slot.values.size() - 1);
      slot_node.children.push_back(Node::token(slot.values[v(rng)]));
    }
    node.children.push_back(std::move(slot_node));
  }
  return node;
}

void collect_tokens(const Node& node, std::string& out) {
  if (!node.is_label()) {
    if (!out.empty()) out += ' ';
    out += node.text;
    return;
  }
  for (const auto& c : node.children) collect_tokens(c, out);
}

}  // namespace

SynthGrammarConfig SynthGrammarConfig::weather() { return SynthGrammarConfig{}; }

SynthGrammarConfig SynthGrammarConfig::reminder() {
  SynthGrammarConfig c;
  c.domain = "reminder";
  c.n_intents = 19;
  c.n_slots = 32;
  c.max_slots_per_intent = 4;
  c.nesting_probability = 0.21;
  c.grammar_seed = 29;
  return c;
}

json SynthGrammarConfig::to_json() const {
  return json{{"domain", domain},
              {"n_intents", n_intents},
              {"n_slots", n_slots},
              {"values_per_slot", values_per_slot},
              {"templates_per_intent", templates_per_intent},
              {"min_slots_per_intent", min_slots_per_intent},
              {"max_slots_per_intent", max_slots_per_intent},
              {"nesting_probability", nesting_probability},
              {"grammar_seed", grammar_seed}};
}

SynthGrammarConfig SynthGrammarConfig::from_json(const json& j) {
  SynthGrammarConfig c;
  if (auto it = j.find("preset"); it != j.end()) {
    const auto preset = it->get<std::string>();
    if (preset == "weather") {
      c = weather();
    } else if (preset == "reminder") {
      c = reminder();
    } else {
      throw Error(Errc::InvalidArgument, "unknown synthetic preset '" + preset + "'");
    }
  }
  c.domain = j.value("domain", c.domain);
  c.n_intents = j.value("n_intents", c.n_intents);
  c.n_slots = j.value("n_slots", c.n_slots);
  c.values_per_slot = j.value("values_per_slot", c.values_per_slot);
  c.templates_per_intent = j.value("templates_per_intent", c.templates_per_intent);
  c.min_slots_per_intent = j.value("min_slots_per_intent", c.min_slots_per_intent);
  c.max_slots_per_intent = j.value("max_slots_per_intent", c.max_slots_per_intent);
  c.nesting_probability = j.value("nesting_probability", c.nesting_probability);
  c.grammar_seed = j.value("grammar_seed", c.grammar_seed);
  return c;
}

Dataset gen_synthetic(const SynthGrammarConfig& grammar, std::size_t n, std::uint64_t seed) {
  const Grammar g = build_grammar(grammar);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> intent(0, grammar.n_intents - 1);
  std::bernoulli_distribution nest(std::clamp(grammar.nesting_probability, 0.0, 1.0));
  Dataset ds;
  ds.provenance = {"synthetic", "gen_synthetic", json{{"grammar", grammar.to_json()}, {"n", n}}, seed};
  ds.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int root = intent(rng);
    const bool nested = grammar.n_slots > 0 && nest(rng);
    const int inner = nested ? intent(rng) : -1;
    const Node tree = sample_intent(g, root, rng, inner);
    std::string utterance;
    collect_tokens(tree, utterance);
    ds.examples.push_back({utterance, serialize(tree), std::nullopt, grammar.domain});
  }
  return ds;
}

std::vector<std::string> synthetic_ontology(const SynthGrammarConfig& grammar) {
  const Grammar g = build_grammar(grammar);
  std::vector<std::string> out;
  for (const auto& r : g.intents) out.push_back("IN:" + r.name);
  for (const auto& s : g.slots) out.push_back("SL:" + s.name);
  return out;
}

}  // namespace semparse
