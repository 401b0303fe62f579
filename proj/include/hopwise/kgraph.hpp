#pragma once

// Knowledge graph built from extracted triples, plus reasoning-path sampling and obfuscation
// planning.

#include "hopwise/core.hpp"
#include "hopwise/prompts.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hopwise {

/// Surface form -> canonical name. Chains are followed; cycles are rejected.
using AliasTable = std::map<std::string, std::string>;

class KnowledgeGraph {
public:
    struct Adjacent {
        std::string relation;
        std::string object;
        std::string doc_id;
    };

    /// One undirected traversal option from a node.
    struct Hop {
        std::size_t neighbor = 0;
        std::size_t edge = 0;
        bool reversed = false;
    };

    KnowledgeGraph() = default;

    const std::set<std::string>& entities() const { return entities_; }
    /// Sorted, duplicate-free.
    const std::vector<Triple>& edges() const { return edges_; }
    std::size_t num_documents() const { return doc_index_.size(); }
    bool empty() const { return entities_.empty(); }

    bool contains(const std::string& entity) const { return entities_.count(entity) > 0; }
    /// Canonical spelling of `name` matched by normalised form.
    std::optional<std::string> find_entity(std::string_view name) const;

    const std::vector<Adjacent>& outgoing(const std::string& entity) const;
    /// doc_id -> indices into edges().
    const std::map<std::string, std::vector<std::size_t>>& doc_index() const { return doc_index_; }

    // Dense view used by the samplers; node ids index node_names().
    const std::vector<std::string>& node_names() const { return node_names_; }
    const std::vector<Hop>& hops_from(std::size_t node) const { return undirected_[node]; }

    bool operator==(const KnowledgeGraph& other) const {
        return entities_ == other.entities_ && edges_ == other.edges_;
    }

    /// Builds from already canonical edges; extra isolated entities may be supplied.
    static KnowledgeGraph from_canonical(std::vector<Triple> edges, const std::vector<std::string>& extra_entities = {});

private:
    void index();

    std::set<std::string> entities_;
    std::vector<Triple> edges_;
    std::map<std::string, std::vector<Adjacent>> adjacency_;
    std::map<std::string, std::vector<std::size_t>> doc_index_;
    std::map<std::string, std::string> by_normalized_;
    std::vector<std::string> node_names_;
    std::vector<std::vector<Hop>> undirected_;
};

/// Trims fields, maps aliases, merges names that normalise equally onto their first-seen
/// spelling and drops exact duplicates. Triples with an empty field are skipped.
/// Throws Error{AliasCycle}.
KnowledgeGraph build_graph(const std::vector<Triple>& triples, const AliasTable& aliases = {});

/// Union of several graphs under one alias table. Throws Error{AliasCycle}.
KnowledgeGraph aggregate_domain(const std::vector<KnowledgeGraph>& graphs, const AliasTable& aliases = {});

/// Every node within `radius` undirected hops of a seed, following only edges whose relation
/// passes the filter. Throws Error{UnknownSeed}, Error{InvalidArgument}.
KnowledgeGraph sample_subgraph(const KnowledgeGraph& graph, const std::vector<std::string>& seeds,
                               int radius, const std::optional<std::set<std::string>>& relation_filter = std::nullopt);

enum class PathStrategy { RandomWalk, BFS };

std::string_view to_string(PathStrategy s);
PathStrategy path_strategy_from_string(std::string_view s);

/// max(2, ceil(hops / 3))
std::size_t default_min_docs(std::size_t hops);

struct PathOptions {
    PathStrategy strategy = PathStrategy::RandomWalk;
    std::size_t hops = 3;
    /// Defaults to default_min_docs(hops).
    std::optional<std::size_t> min_docs;
    std::uint64_t seed = 0;
    std::size_t max_attempts = 10'000;
    std::size_t min_hops = 2;
    std::size_t max_hops = 30;
};

/// A simple path with exactly `hops` edges spanning at least `min_docs` documents. Edges are
/// walked in either direction; `reversed` records which. Deterministic in the options.
/// Throws Error{InvalidArgument}, Error{NoPathFound}.
ReasoningPath sample_path(const KnowledgeGraph& graph, const PathOptions& opts);

struct ObfuscationTarget {
    std::string node;
    ObfuscationCategory category = ObfuscationCategory::Generic;
    std::string rewrite;
};

struct ObfuscationPlan {
    std::vector<ObfuscationTarget> targets;
};

/// True for names that look like a year or a date (e.g. "1815", "March 3, 1999", "1990s").
bool looks_temporal(std::string_view name);

/// Picks ceil(density * (hops + 1)) nodes, capped at hops so that one endpoint always stays
/// literal. Categories come from `tags` (keyed by entity name), else a year/date heuristic,
/// else Generic. Targets are listed in path order. Throws Error{InvalidArgument}.
ObfuscationPlan plan_obfuscations(const ReasoningPath& path,
                                  const std::map<std::string, ObfuscationCategory>& tags,
                                  double density, std::uint64_t seed);

} // namespace hopwise
