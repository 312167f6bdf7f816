#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "semparse/error.hpp"
#include "semparse/datasets.hpp"
#include "semparse/meaning_repr.hpp"

using namespace semparse;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << content;
  return path;
}

std::multiset<std::string> keys(const Dataset& d) {
  std::multiset<std::string> out;
  for (const auto& e : d.examples) out.insert(e.utterance + "\t" + e.meaning);
  return out;
}

// Independent per-label count of a dataset, labels counted once per example.
std::map<std::string, int> label_counts(const Dataset& d) {
  std::map<std::string, int> out;
  for (const auto& e : d.examples) {
    std::set<std::string> seen;
    std::size_t pos = 0;
    while ((pos = e.meaning.find('[', pos)) != std::string::npos) {
      const auto end = e.meaning.find(' ', pos);
      seen.insert(e.meaning.substr(pos + 1, end - pos - 1));
      pos = end;
    }
    for (const auto& l : seen) ++out[l];
  }
  return out;
}

}  // namespace

TEST(Jsonl, LoadsInOrder) {
  const auto path = temp_file("semparse_ds1.jsonl",
                              R"({"utterance":"a","meaning":"[IN:A a ]","domain":"x"})"
                              "\n"
                              R"({"utterance":"b","meaning":"m2","canonical":"c2"})"
                              "\n\n"
                              R"({"utterance":"c","meaning":"m3","domain":"y"})"
                              "\n");
  const auto ds = load_jsonl(path);
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.examples[0].utterance, "a");
  EXPECT_EQ(ds.examples[1].canonical, std::optional<std::string>("c2"));
  EXPECT_EQ(ds.examples[2].domain, "y");
  std::filesystem::remove(path);
}

TEST(Jsonl, MissingFieldCarriesLine) {
  const auto path = temp_file("semparse_ds2.jsonl",
                              R"({"utterance":"a","meaning":"m"})"
                              "\n"
                              R"({"utterance":"b"})"
                              "\n");
  try {
    load_jsonl(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingField);
    EXPECT_EQ(e.where(), std::optional<std::size_t>(2));
  }
  std::filesystem::remove(path);
}

TEST(Jsonl, MalformedLine) {
  const auto path = temp_file("semparse_ds3.jsonl", "{not json\n");
  try {
    load_jsonl(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedRecord);
  }
  std::filesystem::remove(path);
}

TEST(Jsonl, RoundTrip) {
  const auto ds = gen_synthetic(SynthGrammarConfig::reminder(), 300, 4);
  Dataset with_canonical = ds;
  with_canonical.examples[0].canonical = "some canonical \"quoted\" form";
  const auto path = std::filesystem::temp_directory_path() / "semparse_rt.jsonl";
  save_jsonl(with_canonical, path);
  const auto loaded = load_jsonl(path);
  EXPECT_EQ(loaded.examples, with_canonical.examples);
  std::filesystem::remove(path);
}

TEST(TopTsv, ValidAndInvalid) {
  const auto good = temp_file("semparse_good.tsv", "weather in boston\t[IN:GET_WEATHER [SL:LOCATION boston ] ]\tweather\n");
  const auto ds = load_top_tsv(good);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.examples[0].domain, "weather");
  const auto bad = temp_file("semparse_bad.tsv", "ok\t[IN:A ]\nbroken\t[IN:A [SL:B x ]\n");
  try {
    load_top_tsv(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedRecord);
    EXPECT_EQ(e.where(), std::optional<std::size_t>(2));
    EXPECT_NE(std::string(e.what()).find("UnbalancedBrackets"), std::string::npos);
  }
  std::filesystem::remove(good);
  std::filesystem::remove(bad);
}

TEST(TopTsv, PerDomainCounts) {
  std::string content;
  std::map<std::string, int> expected;
  const std::vector<std::string> domains{"weather", "reminder", "alarm"};
  for (int i = 0; i < 90; ++i) {
    const auto& d = domains[static_cast<std::size_t>(i * 7 % 3)];
    content += "utt " + std::to_string(i) + "\t[IN:X w" + std::to_string(i) + " ]\t" + d + "\n";
  }
  const auto path = temp_file("semparse_mixed.tsv", content);
  // Line-count oracle straight from the file.
  std::ifstream in(path);
  for (std::string line; std::getline(in, line);) ++expected[line.substr(line.rfind('\t') + 1)];
  std::map<std::string, int> got;
  for (const auto& e : load_top_tsv(path).examples) ++got[e.domain];
  EXPECT_EQ(got, expected);
  std::filesystem::remove(path);
}

TEST(OvernightSplit, Proportions) {
  const auto ds = gen_synthetic(SynthGrammarConfig::weather(), 1200, 1);
  const auto s = overnight_split(ds, 200, 0.2, 7);
  EXPECT_EQ(s.train.size(), 200u);
  EXPECT_EQ(s.val.size(), 200u);
  EXPECT_EQ(s.test.size(), 800u);
  EXPECT_EQ(s.train.split, "train");
}

TEST(OvernightSplit, PartitionAndDeterminism) {
  const auto ds = gen_synthetic(SynthGrammarConfig::weather(), 500, 2);
  const auto a = overnight_split(ds, 200, 0.2, 3);
  const auto b = overnight_split(ds, 200, 0.2, 3);
  EXPECT_EQ(a.train.examples, b.train.examples);
  EXPECT_EQ(a.test.examples, b.test.examples);
  auto all = keys(a.train);
  for (const auto& k : keys(a.val)) all.insert(k);
  for (const auto& k : keys(a.test)) all.insert(k);
  EXPECT_EQ(all, keys(ds));
  const auto c = overnight_split(ds, 200, 0.2, 4);
  EXPECT_NE(a.train.examples, c.train.examples);
}

TEST(OvernightSplit, TooFewExamples) {
  const auto ds = gen_synthetic(SynthGrammarConfig::weather(), 200, 2);
  try {
    overnight_split(ds, 200, 0.2, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooFewExamples);
  }
}

TEST(Spis, SaturationKeepsEverything) {
  const auto ds = gen_synthetic(SynthGrammarConfig::weather(), 200, 3);
  EXPECT_EQ(spis_sample(ds, 1000, 1).size(), ds.size());
}

TEST(Spis, UniqueLabelPerExample) {
  Dataset ds;
  std::map<std::string, int> available;
  for (int label = 0; label < 6; ++label) {
    for (int i = 0; i < 3 * label + 1; ++i) {
      ds.examples.push_back({"u", "[IN:L" + std::to_string(label) + " w" + std::to_string(i) + " ]", std::nullopt, "d"});
      ++available["IN:L" + std::to_string(label)];
    }
  }
  for (int k : {1, 4, 10}) {
    const auto counts = label_counts(spis_sample(ds, k, 5));
    for (const auto& [label, n] : available) EXPECT_EQ(counts.at(label), std::min(k, n)) << label << " k=" << k;
  }
}

TEST(Spis, CoverageOnSyntheticData) {
  const auto ds = gen_synthetic(SynthGrammarConfig::reminder(), 3000, 6);
  const auto available = label_counts(ds);
  for (int k : {10, 25, 500}) {
    const auto sample = spis_sample(ds, k, 9);
    const auto kept = label_counts(sample);
    for (const auto& [label, n] : available) {
      // Every label reaches min(k, available); co-occurring labels may overshoot.
      EXPECT_GE(kept.at(label), std::min(k, n)) << label;
    }
    EXPECT_EQ(sample.provenance.method, "spis_sample");
  }
}

TEST(Spis, GreedyRuleOracle) {
  // Replays the documented greedy rule over the same shuffle and checks the
  // kept set is exactly what the rule selects.
  const auto ds = gen_synthetic(SynthGrammarConfig::reminder(), 800, 8);
  const auto sample = spis_sample(ds, 10, 2);
  std::map<std::string, int> kept;
  std::size_t next = 0;
  for (const auto& e : sample.examples) {
    Dataset one;
    one.examples.push_back(e);
    bool under = false;
    for (const auto& [label, n] : label_counts(one)) under = under || kept[label] < 10;
    EXPECT_TRUE(under);
    for (const auto& [label, n] : label_counts(one)) kept[label] += n;
    ++next;
  }
  EXPECT_EQ(next, sample.size());
}

TEST(Spis, Deterministic) {
  const auto ds = gen_synthetic(SynthGrammarConfig::reminder(), 500, 8);
  EXPECT_EQ(spis_sample(ds, 10, 2).examples, spis_sample(ds, 10, 2).examples);
}

TEST(Synthetic, WeatherOntologySize) {
  const auto g = SynthGrammarConfig::weather();
  EXPECT_EQ(g.n_intents, 7);
  EXPECT_EQ(g.n_slots, 11);
  const auto ontology = synthetic_ontology(g);
  EXPECT_EQ(std::count_if(ontology.begin(), ontology.end(), [](const std::string& s) { return s.starts_with("IN:"); }), 7);
  EXPECT_EQ(std::count_if(ontology.begin(), ontology.end(), [](const std::string& s) { return s.starts_with("SL:"); }), 11);
}

TEST(Synthetic, FlatWithoutNesting) {
  for (const auto& e : gen_synthetic(SynthGrammarConfig::weather(), 500, 1).examples) {
    EXPECT_LE(depth(parse_top(e.meaning)), 2u);
  }
}

TEST(Synthetic, ParsesWithinOntology) {
  const auto g = SynthGrammarConfig::reminder();
  const auto ontology = synthetic_ontology(g);
  const std::set<std::string> allowed(ontology.begin(), ontology.end());
  std::size_t deep = 0;
  const auto ds = gen_synthetic(g, 2000, 3);
  for (const auto& e : ds.examples) {
    const auto tree = parse_top(e.meaning);
    EXPECT_TRUE(is_valid(tree));
    for (const auto& l : ontology_labels(tree)) EXPECT_TRUE(allowed.count(l.surface())) << l.surface();
    deep += depth(tree) > 2;
    EXPECT_FALSE(e.utterance.empty());
  }
  const double frac = static_cast<double>(deep) / static_cast<double>(ds.size());
  EXPECT_NEAR(frac, 0.21, 0.04);
}

TEST(Synthetic, DeterministicPerSeed) {
  const auto g = SynthGrammarConfig::weather();
  EXPECT_EQ(gen_synthetic(g, 100, 5).examples, gen_synthetic(g, 100, 5).examples);
  EXPECT_NE(gen_synthetic(g, 100, 5).examples, gen_synthetic(g, 100, 6).examples);
}

TEST(Synthetic, ConfigJsonRoundTrip) {
  const auto g = SynthGrammarConfig::reminder();
  const auto back = SynthGrammarConfig::from_json(g.to_json());
  EXPECT_EQ(back.to_json(), g.to_json());
  EXPECT_EQ(SynthGrammarConfig::from_json(nlohmann::json{{"preset", "reminder"}}).n_slots, 32);
}
