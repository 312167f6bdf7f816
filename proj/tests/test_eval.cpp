#include <gtest/gtest.h>

#include <random>

#include "semparse/error.hpp"
#include "semparse/eval.hpp"
#include "test_util.hpp"

using namespace semparse;
using namespace semparse::test_support;

namespace {

const CanonScheme kNone{};
const CanonScheme kInVocab{SchemeVariant::InVocab, false, false};

RunResult run(std::string scheme, std::uint64_t seed, std::size_t matches, std::size_t n = 10) {
  return {"weather", std::move(scheme), "finetune", "constrained", seed, n, matches};
}

}  // namespace

TEST(ExactMatch, IdenticalLists) {
  const std::vector<std::string> golds{"[IN:A x ]", "[IN:B [SL:C y ] ]"};
  const auto r = exact_match(golds, golds, kNone, nullptr);
  EXPECT_EQ(r.accuracy(), 1.0);
  EXPECT_EQ(r.flags, (std::vector<bool>{true, true}));
}

TEST(ExactMatch, GarbageIsAMiss) {
  const std::vector<std::string> preds{"garbage[[[", "[IN:A x ]"};
  const std::vector<std::string> golds{"[IN:A x ]", "[IN:A x ]"};
  const auto r = exact_match(preds, golds, kNone, nullptr);
  EXPECT_EQ(r.matches, 1u);
  EXPECT_EQ(r.flags[0], false);
}

TEST(ExactMatch, WhitespaceNormalized) {
  const std::vector<std::string> preds{"  [IN:A   x ]"};
  const std::vector<std::string> golds{"[IN:A x ]"};
  EXPECT_EQ(exact_match(preds, golds, kNone, nullptr).matches, 1u);
  const std::vector<std::string> opaque_p{"(call  foo )"};
  const std::vector<std::string> opaque_g{"(call foo )"};
  EXPECT_EQ(exact_match(opaque_p, opaque_g, kNone, nullptr).matches, 1u);
}

TEST(ExactMatch, InVocabDecanonicalized) {
  const auto table = LabelTable::build(
      {OntologyLabel::intent("GET_WEATHER"), OntologyLabel::intent("GET_SUNSET"), OntologyLabel::slot("LOCATION")},
      kInVocab);
  const std::vector<std::string> preds{"[in1 [sl0 boston ] ]", "[in7 x ]"};
  const std::vector<std::string> golds{"[IN:GET_WEATHER [SL:LOCATION boston ] ]", "[IN:GET_WEATHER x ]"};
  const auto r = exact_match(preds, golds, kInVocab, &table);
  EXPECT_EQ(r.flags, (std::vector<bool>{true, false}));
}

TEST(ExactMatch, SimplifyComparesInSimplifiedSpace) {
  const CanonScheme s{SchemeVariant::Simplify, false, false};
  const std::vector<std::string> preds{"[IN:A [SL:B v ] ]"};
  const std::vector<std::string> golds{"[IN:A words here [SL:B v ] ]"};
  EXPECT_EQ(exact_match(preds, golds, s, nullptr).matches, 1u);
  EXPECT_EQ(exact_match(preds, golds, kNone, nullptr).matches, 0u);
}

TEST(ExactMatch, LengthMismatch) {
  const std::vector<std::string> a{"x"};
  const std::vector<std::string> b{};
  try {
    exact_match(a, b, kNone, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LengthMismatch);
  }
}

TEST(ExactMatch, SymmetricOnWellFormedLists) {
  std::mt19937_64 rng(1);
  std::vector<std::string> a, b;
  for (int i = 0; i < 200; ++i) {
    const auto t = serialize(random_tree(rng));
    a.push_back(t);
    b.push_back(i % 3 == 0 ? serialize(random_tree(rng)) : t);
  }
  EXPECT_EQ(exact_match(a, b, kNone, nullptr).flags, exact_match(b, a, kNone, nullptr).flags);
}

TEST(ExactMatch, InvariantUnderBijectiveCanonicalization) {
  std::mt19937_64 rng(2);
  TreeGenOptions opts;
  for (auto scheme : {kInVocab, CanonScheme{SchemeVariant::OutOfVocab, false, false}}) {
    std::vector<ParseTree> gold_trees, pred_trees;
    std::set<OntologyLabel> labels;
    for (int i = 0; i < 200; ++i) {
      gold_trees.push_back(random_tree(rng, opts));
      pred_trees.push_back(i % 4 == 0 ? random_tree(rng, opts) : gold_trees.back());
      for (const auto* t : {&gold_trees.back(), &pred_trees.back()})
        for (const auto& l : ontology_labels(*t)) labels.insert(l);
    }
    const auto table = LabelTable::build(labels, scheme);
    std::vector<std::string> golds, preds_meaning, preds_canonical;
    for (std::size_t i = 0; i < gold_trees.size(); ++i) {
      golds.push_back(serialize(gold_trees[i]));
      preds_meaning.push_back(serialize(pred_trees[i]));
      preds_canonical.push_back(apply_scheme(pred_trees[i], scheme, table));
    }
    EXPECT_EQ(exact_match(preds_canonical, golds, scheme, &table).flags,
              exact_match(preds_meaning, golds, kNone, nullptr).flags);
  }
}

TEST(Aggregate, MeanAndSampleStd) {
  const std::vector<RunResult> rs{run("none", 1, 4), run("none", 2, 6)};
  const std::vector<ResultField> by{ResultField::Scheme};
  const auto rows = aggregate(rs, by);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].mean, 0.5);
  ASSERT_TRUE(rows[0].std.has_value());
  EXPECT_NEAR(*rows[0].std, 0.1414, 5e-5);
  EXPECT_EQ(rows[0].n, 2u);
}

TEST(Aggregate, ConstantAndSingle) {
  std::vector<RunResult> rs;
  for (std::uint64_t s = 1; s <= 5; ++s) rs.push_back(run("none", s, 7));
  rs.push_back(run("invocab", 1, 3));
  const std::vector<ResultField> by{ResultField::Scheme};
  const auto rows = aggregate(rs, by);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].key, std::vector<std::string>{"invocab"});
  EXPECT_FALSE(rows[0].std.has_value());
  EXPECT_DOUBLE_EQ(rows[1].mean, 0.7);
  EXPECT_DOUBLE_EQ(*rows[1].std, 0.0);
  EXPECT_EQ(aggregate_csv(rows, by), "scheme,mean,std,n\ninvocab,0.3000,NA,1\nnone,0.7000,0.0000,5\n");
}

TEST(ResultsCsv, SortedFixedFormat) {
  const std::vector<RunResult> rs{run("oov", 2, 1, 3), run("none", 1, 2, 3), run("none", 10, 3, 3)};
  EXPECT_EQ(results_csv(rs),
            "domain,scheme,tuning,decoding,seed,n,accuracy\n"
            "weather,none,finetune,constrained,1,3,0.6667\n"
            "weather,none,finetune,constrained,10,3,1.0000\n"
            "weather,oov,finetune,constrained,2,3,0.3333\n");
}

TEST(RunResult, AccuracyFromCounts) {
  EXPECT_EQ(run("none", 1, 3, 4).accuracy(), 0.75);
  EXPECT_EQ(run("none", 1, 0, 0).accuracy(), 0.0);
}
