#include "hopwise/core.hpp"
#include "hopwise/error.hpp"
#include "hopwise/rng.hpp"
#include "hopwise/text.hpp"

#include <gtest/gtest.h>

#include <set>

namespace hopwise {
namespace {

TEST(Text, TrimAndCasefold) {
    EXPECT_EQ(text::trim("  a b \n"), "a b");
    EXPECT_EQ(text::trim(" \t\n"), "");
    EXPECT_EQ(text::casefold("AbC \xc3\x89"), "abc \xc3\x89");
}

TEST(Text, CollapseWhitespaceAndNormalize) {
    EXPECT_EQ(text::collapse_whitespace("  a \t\n b  c "), "a b c");
    EXPECT_EQ(text::normalize_name("  New   YORK "), "new york");
}

TEST(Text, WordCount) {
    EXPECT_EQ(text::word_count(""), 0u);
    EXPECT_EQ(text::word_count("  one  two\nthree "), 3u);
}

TEST(Text, WordBoundedSearch) {
    EXPECT_TRUE(text::contains_word_bounded("we met in vienna.", "vienna"));
    EXPECT_FALSE(text::contains_word_bounded("viennas are many", "vienna"));
    EXPECT_FALSE(text::contains_word_bounded("xvienna", "vienna"));
    EXPECT_TRUE(text::contains_word_bounded("new york city", "new york"));
    EXPECT_FALSE(text::contains_word_bounded("anything", ""));
}

TEST(Text, CaseInsensitiveFind) {
    EXPECT_EQ(text::ifind("Hello World", "WORLD"), 6u);
    EXPECT_EQ(text::irfind("ab AB ab", "Ab"), 6u);
    EXPECT_EQ(text::ifind("abc", "zz"), std::string::npos);
}

TEST(Text, FillTemplateLeavesUnknownPlaceholders) {
    EXPECT_EQ(text::fill_template("{a} and {b}", {{"a", "x"}}), "x and {b}");
}

TEST(Chain, ParsesBothArrowSpellings) {
    const ReasoningPath p = parse_gt_chain("(A)-[r1]->(B)-[r2]-(C)");
    EXPECT_EQ(p.nodes, (std::vector<std::string>{"A", "B", "C"}));
    EXPECT_EQ(p.relations, (std::vector<std::string>{"r1", "r2"}));
    EXPECT_EQ(p.hops(), 2u);
    EXPECT_TRUE(p.well_formed());
}

TEST(Chain, EntityNamesMayContainParentheses) {
    const ReasoningPath p = parse_gt_chain("(Prague (novel))-[set in]->(Budapest)");
    EXPECT_EQ(p.nodes.front(), "Prague (novel)");
}

TEST(Chain, RenderRoundTrips) {
    const std::string s = "(A)-[r1]->(B)-[r2]->(C)";
    EXPECT_EQ(render_gt_chain(parse_gt_chain(s)), s);
}

TEST(Chain, RejectsMalformed) {
    for (const char* bad : {"", "(A)", "(A)-[r]->", "A-[r]->(B)", "(A)-[r->(B)", "(A)-[r]->(B"}) {
        try {
            parse_gt_chain(bad);
            ADD_FAILURE() << "accepted: " << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::MalformedChain) << bad;
        }
    }
}

TEST(Chain, SimplePathCheck) {
    EXPECT_TRUE(parse_gt_chain("(A)-[r]->(B)").is_simple());
    EXPECT_FALSE(parse_gt_chain("(A)-[r]->(B)-[s]->(A)").is_simple());
}

TEST(Core, EstimateTokensRoundsUp) {
    EXPECT_EQ(estimate_tokens(""), 0u);
    EXPECT_EQ(estimate_tokens("abcde"), 2u);
    EXPECT_EQ(estimate_tokens("abcd"), 1u);
}

TEST(Core, ParadigmNamesRoundTrip) {
    for (Paradigm p : {Paradigm::MultiHop, Paradigm::Temporal, Paradigm::Causal, Paradigm::Hypothetical}) {
        EXPECT_EQ(paradigm_from_string(to_string(p)), p);
    }
}

TEST(Rng, ReproducibleAndBounded) {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t x = a.index(7);
        EXPECT_EQ(x, b.index(7));
        EXPECT_LT(x, 7u);
        const double u = a.unit();
        EXPECT_EQ(u, b.unit());
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Rng, ShuffleIsAPermutation) {
    Rng rng(3);
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    rng.shuffle(v);
    EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 50u);
}

TEST(Rng, DerivedSeedsDiffer) {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 100; ++s) seeds.insert(derive_seed(7, s));
    EXPECT_EQ(seeds.size(), 100u);
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

} // namespace
} // namespace hopwise
