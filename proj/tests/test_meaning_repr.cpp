#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "semparse/error.hpp"
#include "semparse/meaning_repr.hpp"
#include "test_util.hpp"

using namespace semparse;
using namespace semparse::test_support;

namespace {

Errc parse_error(std::string_view text) {
  try {
    parse_top(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a parse error for: " << text;
  return Errc::Io;
}

}  // namespace

TEST(ParseTop, WeatherExample) {
  const auto tree = parse_top("[IN:GET_WEATHER [SL:LOCATION boston ] ]");
  const ParseTree expected{Node::intent("GET_WEATHER", {Node::slot("LOCATION", {Node::token("boston")})})};
  EXPECT_EQ(tree, expected);
  EXPECT_EQ(serialize(tree), "[IN:GET_WEATHER [SL:LOCATION boston ] ]");
}

TEST(ParseTop, MinimalIntent) {
  EXPECT_EQ(parse_top("[IN:A x ]"), ParseTree{Node::intent("A", {Node::token("x")})});
}

TEST(ParseTop, NamedErrors) {
  EXPECT_EQ(parse_error("[SL:LOCATION boston ]"), Errc::RootNotIntent);
  EXPECT_EQ(parse_error("boston"), Errc::RootNotIntent);
  EXPECT_EQ(parse_error(""), Errc::RootNotIntent);
  EXPECT_EQ(parse_error("[IN:A x"), Errc::UnbalancedBrackets);
  EXPECT_EQ(parse_error("] [IN:A ]"), Errc::UnbalancedBrackets);
  EXPECT_EQ(parse_error("[ x ]"), Errc::EmptyLabel);
  EXPECT_EQ(parse_error("[IN: x ]"), Errc::EmptyLabel);
  EXPECT_EQ(parse_error("[IN:A ] extra"), Errc::TrailingContent);
  EXPECT_EQ(parse_error("[IN:A ] [IN:B ]"), Errc::TrailingContent);
  EXPECT_EQ(parse_error("[XX:A ]"), Errc::InvalidLabel);
  EXPECT_EQ(parse_error("[IN:A [IN:B ] ]"), Errc::InvalidNesting);
  EXPECT_EQ(parse_error("[IN:A [SL:B [SL:C ] ] ]"), Errc::InvalidNesting);
}

TEST(ParseTop, ErrorOffsets) {
  try {
    parse_top("[IN:A x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.where(), 7u);
  }
  try {
    parse_top("[IN:A ]  tail");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.where(), 9u);
  }
}

TEST(ParseTop, LabelsAreCaseSensitive) {
  EXPECT_EQ(parse_error("[in:a x ]"), Errc::InvalidLabel);
  EXPECT_NE(parse_top("[IN:a x ]"), parse_top("[IN:A x ]"));
}

TEST(Serialize, NestedDepthThree) {
  const ParseTree tree{Node::intent(
      "A", {Node::slot("B", {Node::intent("C", {Node::token("z")})})})};
  const auto s = serialize(tree);
  EXPECT_EQ(s, "[IN:A [SL:B [IN:C z ] ] ]");
  EXPECT_EQ(parse_top(s), tree);
}

TEST(Serialize, RoundTripOnRandomTrees) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto tree = random_tree(rng);
    ASSERT_TRUE(is_valid(tree));
    const auto s = serialize(tree);
    EXPECT_EQ(parse_top(s), tree);
    EXPECT_EQ(serialize(parse_top(s)), normalize_ws(s));
  }
}

TEST(Serialize, RoundTripNormalizesWhitespace) {
  const std::string messy = "  [IN:A\tfoo \n [SL:B   bar ]\n]  ";
  EXPECT_EQ(serialize(parse_top(messy)), normalize_ws(messy));
}

TEST(Depth, ByDefinition) {
  EXPECT_EQ(depth(parse_top("[IN:A x ]")), 1u);
  EXPECT_EQ(depth(parse_top("[IN:A [SL:B x ] ]")), 2u);
  EXPECT_EQ(depth(parse_top("[IN:A [SL:B [IN:C [SL:D x ] ] ] ]")), 4u);
  EXPECT_EQ(depth(parse_top("[IN:A [SL:B x ] [SL:C [IN:D ] ] ]")), 3u);
}

TEST(Depth, BoundedByNodeCount) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto tree = random_tree(rng);
    EXPECT_GE(depth(tree), 1u);
    EXPECT_LE(depth(tree), node_count(tree));
  }
}

TEST(OntologyLabels, Basic) {
  EXPECT_EQ(ontology_labels(parse_top("[IN:A x ]")), (std::set<OntologyLabel>{OntologyLabel::intent("A")}));
  EXPECT_EQ(ontology_labels(parse_top("[IN:A [SL:B x ] [SL:B y ] ]")),
            (std::set<OntologyLabel>{OntologyLabel::intent("A"), OntologyLabel::slot("B")}));
}

TEST(OntologyLabels, AgreesWithRegexScan) {
  const std::regex label_re(R"(\[((IN|SL):[^\s\[\]]+))");
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto s = serialize(random_tree(rng));
    std::set<std::string> expected;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), label_re); it != std::sregex_iterator(); ++it) {
      expected.insert((*it)[1].str());
    }
    std::set<std::string> got;
    for (const auto& l : ontology_labels(parse_top(s))) got.insert(l.surface());
    EXPECT_EQ(got, expected) << s;
  }
}

TEST(ParseTop, FuzzNeverCrashes) {
  std::mt19937_64 rng(2024);
  const std::string alphabet = "[]  IN:SL:ab\t\n";
  std::uniform_int_distribution<int> len(0, 24);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::size_t> from_alpha(0, alphabet.size() - 1);
  std::bernoulli_distribution raw(0.3);
  int parsed = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string s;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) s += raw(rng) ? static_cast<char>(byte(rng)) : alphabet[from_alpha(rng)];
    try {
      const auto tree = parse_top(s);
      EXPECT_TRUE(is_valid(tree));
      ++parsed;
    } catch (const Error&) {
      // every failure must be one of the named parse errors
    } catch (...) {
      FAIL() << "unexpected exception type";
    }
  }
  EXPECT_GT(parsed, 0);
}
