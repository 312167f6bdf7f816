#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "semparse/canonicalize.hpp"
#include "semparse/error.hpp"
#include "test_util.hpp"

using namespace semparse;
using namespace semparse::test_support;

namespace {

LabelTable weather_table(const CanonScheme& scheme) {
  return LabelTable::build({OntologyLabel::intent("GET_WEATHER"), OntologyLabel::intent("GET_SUNSET"),
                            OntologyLabel::slot("LOCATION")},
                           scheme);
}

const CanonScheme kInVocab{SchemeVariant::InVocab, false, false};
const CanonScheme kOutOfVocab{SchemeVariant::OutOfVocab, false, false};

}  // namespace

TEST(Simplify, DropsIntentLevelTokens) {
  const auto t = parse_top("[IN:GET_WEATHER whats the weather [SL:LOCATION boston ] ]");
  EXPECT_EQ(serialize(simplify(t)), "[IN:GET_WEATHER [SL:LOCATION boston ] ]");
}

TEST(Simplify, AppliesAtEveryIntentLevel) {
  const auto t = parse_top("[IN:A x [SL:B y [IN:C z ] ] ]");
  EXPECT_EQ(serialize(simplify(t)), "[IN:A [SL:B y [IN:C ] ] ]");
}

TEST(Simplify, FixedPointAndIdempotent) {
  const auto t = parse_top("[IN:A [SL:B y ] ]");
  EXPECT_EQ(simplify(t), t);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto tree = random_tree(rng);
    EXPECT_EQ(simplify(simplify(tree)), simplify(tree));
  }
}

TEST(LabelTable, InVocabLexicographic) {
  const auto table = weather_table(kInVocab);
  EXPECT_EQ(table.surrogate("IN:GET_SUNSET"), "in0");
  EXPECT_EQ(table.surrogate("IN:GET_WEATHER"), "in1");
  EXPECT_EQ(table.surrogate("SL:LOCATION"), "sl0");
  EXPECT_EQ(table.label("in1"), "IN:GET_WEATHER");
  EXPECT_FALSE(table.atomic_surrogates());
}

TEST(LabelTable, OutOfVocabIdentitySurface) {
  const auto table = LabelTable::build({OntologyLabel::intent("GET_WEATHER")}, kOutOfVocab);
  EXPECT_EQ(table.surrogate("IN:GET_WEATHER"), "IN:GET_WEATHER");
  EXPECT_TRUE(table.atomic_surrogates());
}

TEST(LabelTable, ShortenLowercasesAndStripsPrefix) {
  const auto table = weather_table({SchemeVariant::OutOfVocab, true, false});
  EXPECT_EQ(table.surrogate("IN:GET_WEATHER"), "get_weather");
  EXPECT_EQ(table.surrogate("SL:LOCATION"), "location");
}

TEST(LabelTable, ShortenCollisionIsReported) {
  try {
    LabelTable::build({OntologyLabel::intent("A"), OntologyLabel::slot("A")}, {SchemeVariant::OutOfVocab, true, false});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateSurrogate);
  }
}

TEST(LabelTable, EmptyLabelSetRejected) {
  EXPECT_THROW(LabelTable::build({}, kInVocab), Error);
}

TEST(LabelTable, DeterministicForSameLabelSet) {
  std::set<OntologyLabel> a{OntologyLabel::slot("Z"), OntologyLabel::intent("B"), OntologyLabel::intent("A")};
  std::set<OntologyLabel> b{OntologyLabel::intent("A"), OntologyLabel::slot("Z"), OntologyLabel::intent("B")};
  EXPECT_EQ(LabelTable::build(a, kInVocab).entries(), LabelTable::build(b, kInVocab).entries());
}

TEST(LabelTable, TsvRoundTripIsByteExact) {
  const auto table = weather_table(kInVocab);
  const auto path = std::filesystem::temp_directory_path() / "semparse_labels_test.tsv";
  table.save_tsv(path);
  const auto loaded = LabelTable::load_tsv(path);
  EXPECT_EQ(loaded, table);
  EXPECT_EQ(loaded.to_tsv(), "IN:GET_SUNSET\tin0\nIN:GET_WEATHER\tin1\nSL:LOCATION\tsl0\n");
  std::filesystem::remove(path);
}

TEST(ApplyScheme, NoneIsSerialize) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto t = random_tree(rng);
    EXPECT_EQ(apply_scheme(t, CanonScheme{}), serialize(t));
  }
}

TEST(ApplyScheme, InVocabSubstitution) {
  const auto t = parse_top("[IN:GET_WEATHER [SL:LOCATION boston ] ]");
  EXPECT_EQ(apply_scheme(t, kInVocab, weather_table(kInVocab)), "[in1 [sl0 boston ] ]");
}

TEST(ApplyScheme, SimplifyThenSubstitute) {
  const auto t = parse_top("[IN:GET_WEATHER whats it like in [SL:LOCATION boston ] ]");
  const CanonScheme composed{SchemeVariant::InVocab, false, true};
  EXPECT_EQ(apply_scheme(t, composed, weather_table(composed)), "[in1 [sl0 boston ] ]");
}

TEST(ApplyScheme, UnknownLabel) {
  const auto t = parse_top("[IN:PLAY_MUSIC x ]");
  try {
    apply_scheme(t, kInVocab, weather_table(kInVocab));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownLabel);
  }
}

TEST(ApplyScheme, TableRequiredForSubstitution) {
  EXPECT_THROW(apply_scheme(parse_top("[IN:A ]"), kInVocab), Error);
}

TEST(Decanonicalize, InverseOfInVocab) {
  const auto tree = decanonicalize("[in1 [sl0 boston ] ]", kInVocab, weather_table(kInVocab));
  EXPECT_EQ(tree, parse_top("[IN:GET_WEATHER [SL:LOCATION boston ] ]"));
}

TEST(Decanonicalize, UnknownSurrogate) {
  const auto table = LabelTable::build({OntologyLabel::intent("A"), OntologyLabel::slot("B")}, kInVocab);
  try {
    decanonicalize("[in9 x ]", kInVocab, table);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownSurrogate);
  }
}

TEST(Decanonicalize, SurfacesParseErrors) {
  const auto table = weather_table(kInVocab);
  try {
    decanonicalize("[in1 [sl0 boston ]", kInVocab, table);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnbalancedBrackets);
  }
}

TEST(Decanonicalize, SimplifyIsLossy) {
  const auto t = parse_top("[IN:A carrier words [SL:B v ] ]");
  const CanonScheme s{SchemeVariant::Simplify, false, false};
  EXPECT_EQ(decanonicalize(apply_scheme(t, s), s), simplify(t));
}

TEST(Decanonicalize, BijectionOnRandomTrees) {
  std::mt19937_64 rng(21);
  TreeGenOptions flat;
  flat.intent_tokens = false;
  for (auto scheme : {kInVocab, kOutOfVocab}) {
    for (int i = 0; i < 1000; ++i) {
      const auto tree = random_tree(rng, flat);
      const auto table = LabelTable::build(ontology_labels(tree), scheme);
      EXPECT_EQ(decanonicalize(apply_scheme(tree, scheme, table), scheme, table), tree);
    }
  }
}

TEST(Decanonicalize, ComposedSimplifyGivesSimplifiedTree) {
  std::mt19937_64 rng(22);
  const CanonScheme composed{SchemeVariant::InVocab, false, true};
  for (int i = 0; i < 300; ++i) {
    const auto tree = random_tree(rng);
    const auto table = LabelTable::build(ontology_labels(tree), composed);
    EXPECT_EQ(decanonicalize(apply_scheme(tree, composed, table), composed, table), simplify(tree));
  }
}

TEST(CanonScheme, Tags) {
  EXPECT_EQ(CanonScheme{}.tag(), "none");
  EXPECT_EQ((CanonScheme{SchemeVariant::InVocab, true, true}).tag(), "invocab+simplify+short");
  EXPECT_EQ(parse_variant("out-of-vocab"), SchemeVariant::OutOfVocab);
  EXPECT_THROW(parse_variant("bogus"), Error);
}
