#include "fixtures.hpp"

#include "hopwise/error.hpp"
#include "hopwise/kgraph.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

namespace hopwise {
namespace {

template <typename F>
void expect_code(F&& f, ErrorCode code) {
    try {
        f();
        ADD_FAILURE() << "no error thrown";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

TEST(BuildGraph, TrimsDeduplicatesAndMergesSpellings) {
    const KnowledgeGraph g = build_graph({{" Vienna ", "capital of", "Austria", "d1"},
                                          {"vienna", "capital of", "AUSTRIA", "d1"},
                                          {"Vienna", "capital of", "Austria", "d1"},
                                          {"", "x", "y", "d2"}});
    EXPECT_EQ(g.entities(), (std::set<std::string>{"Austria", "Vienna"}));
    EXPECT_EQ(g.edges().size(), 1u);
    EXPECT_EQ(g.num_documents(), 1u);
    EXPECT_EQ(g.find_entity("  VIENNA"), std::optional<std::string>("Vienna"));
}

TEST(BuildGraph, AliasChainsResolve) {
    const KnowledgeGraph g = build_graph({{"Wien", "in", "Österreich", "d"}},
                                         {{"Wien", "Vienne"}, {"Vienne", "Vienna"}, {"Österreich", "Austria"}});
    EXPECT_TRUE(g.contains("Vienna"));
    EXPECT_TRUE(g.contains("Austria"));
    EXPECT_FALSE(g.contains("Wien"));
}

TEST(BuildGraph, AliasCycleRejected) {
    expect_code([] { build_graph({{"a", "r", "b", "d"}}, {{"a", "b"}, {"b", "a"}}); }, ErrorCode::AliasCycle);
}

TEST(BuildGraph, Idempotent) {
    const testing::SyntheticCorpus c = testing::synthetic_corpus(6, 1);
    const KnowledgeGraph g = build_graph(c.triples);
    EXPECT_EQ(build_graph(g.edges()), g);
}

TEST(Aggregate, UnionOfGraphs) {
    const KnowledgeGraph a = build_graph({{"A", "r", "B", "d1"}});
    const KnowledgeGraph b = build_graph({{"b", "s", "C", "d2"}});
    const KnowledgeGraph u = aggregate_domain({a, b});
    EXPECT_EQ(u.entities().size(), 3u);
    EXPECT_EQ(u.edges().size(), 2u);
}

TEST(Subgraph, RadiusAndRelationFilter) {
    const KnowledgeGraph g = build_graph({{"A", "r", "B", "d"}, {"B", "r", "C", "d"}, {"C", "s", "D", "d"}});
    EXPECT_EQ(sample_subgraph(g, {"A"}, 1).entities(), (std::set<std::string>{"A", "B"}));
    EXPECT_EQ(sample_subgraph(g, {"A"}, 3, std::set<std::string>{"r"}).entities(),
              (std::set<std::string>{"A", "B", "C"}));
    expect_code([&] { sample_subgraph(g, {"Z"}, 1); }, ErrorCode::UnknownSeed);
    expect_code([&] { sample_subgraph(g, {"A"}, 0); }, ErrorCode::InvalidArgument);
}

TEST(PathSampler, DefaultMinDocs) {
    EXPECT_EQ(default_min_docs(2), 2u);
    EXPECT_EQ(default_min_docs(6), 2u);
    EXPECT_EQ(default_min_docs(7), 3u);
    EXPECT_EQ(default_min_docs(30), 10u);
}

TEST(PathSampler, PropertiesHoldOnRingLattice) {
    const KnowledgeGraph g = testing::ring_lattice(60, 2, 12);
    for (PathStrategy strategy : {PathStrategy::RandomWalk, PathStrategy::BFS}) {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            PathOptions po;
            po.strategy = strategy;
            po.hops = 2 + seed % 6;
            po.seed = seed;
            const ReasoningPath p = sample_path(g, po);
            EXPECT_EQ(p.hops(), po.hops);
            EXPECT_TRUE(p.is_simple());
            EXPECT_TRUE(p.well_formed());
            EXPECT_GE(std::set<std::string>(p.doc_ids.begin(), p.doc_ids.end()).size(), default_min_docs(po.hops));
            EXPECT_EQ(sample_path(g, po), p);
        }
    }
}

TEST(PathSampler, BoundsAndFailures) {
    const KnowledgeGraph g = build_graph({{"A", "r", "B", "d1"}, {"B", "r", "C", "d1"}});
    PathOptions po;
    po.hops = 1;
    expect_code([&] { sample_path(g, po); }, ErrorCode::InvalidArgument);
    po.hops = 31;
    expect_code([&] { sample_path(g, po); }, ErrorCode::InvalidArgument);
    po.hops = 2;
    // Only one document: min_docs = 2 cannot be met.
    expect_code([&] { sample_path(g, po); }, ErrorCode::NoPathFound);
    po.min_docs = 1;
    EXPECT_EQ(sample_path(g, po).hops(), 2u);
    po.hops = 5;
    expect_code([&] { sample_path(g, po); }, ErrorCode::NoPathFound);
}

TEST(PathSampler, WalksEdgesInEitherDirection) {
    const KnowledgeGraph g = build_graph({{"A", "r", "B", "d1"}, {"C", "s", "B", "d2"}});
    PathOptions po;
    po.hops = 2;
    bool saw_reversed = false;
    for (std::uint64_t s = 0; s < 20; ++s) {
        po.seed = s;
        const ReasoningPath p = sample_path(g, po);
        for (bool r : p.reversed) saw_reversed |= r;
    }
    EXPECT_TRUE(saw_reversed);
}

TEST(Obfuscation, TemporalHeuristic) {
    EXPECT_TRUE(looks_temporal("1815"));
    EXPECT_TRUE(looks_temporal("March 3, 1999"));
    EXPECT_TRUE(looks_temporal("1990s"));
    EXPECT_TRUE(looks_temporal("44 BC"));
    EXPECT_FALSE(looks_temporal("Vienna"));
    EXPECT_FALSE(looks_temporal("Route 66"));
}

TEST(Obfuscation, PlanCountAndOrder) {
    const ReasoningPath p = parse_gt_chain("(A)-[r]->(1815)-[s]->(C)-[t]->(D)");
    const ObfuscationPlan plan = plan_obfuscations(p, {{"C", ObfuscationCategory::Location}}, 0.5, 7);
    EXPECT_EQ(plan.targets.size(), 2u);
    const ObfuscationPlan all = plan_obfuscations(p, {{"C", ObfuscationCategory::Location}}, 1.0, 7);
    ASSERT_EQ(all.targets.size(), 3u);
    std::size_t last = 0;
    for (const auto& t : all.targets) {
        const auto pos = static_cast<std::size_t>(std::find(p.nodes.begin(), p.nodes.end(), t.node) - p.nodes.begin());
        EXPECT_GE(pos, last);
        last = pos;
        if (t.node == "1815") EXPECT_EQ(t.category, ObfuscationCategory::Temporal);
        if (t.node == "C") EXPECT_EQ(t.category, ObfuscationCategory::Location);
    }
    EXPECT_TRUE(plan_obfuscations(p, {}, 0.0, 1).targets.empty());
    EXPECT_THROW(plan_obfuscations(p, {}, 1.5, 1), Error);
}

} // namespace
} // namespace hopwise
