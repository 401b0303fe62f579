#include "hopwise/kgraph.hpp"

#include "hopwise/error.hpp"
#include "hopwise/rng.hpp"
#include "hopwise/text.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <deque>

namespace hopwise {

namespace {

const std::vector<KnowledgeGraph::Adjacent> kNoAdjacent;

// Normalised alias key -> fully resolved canonical spelling.
std::map<std::string, std::string> resolve_aliases(const AliasTable& aliases) {
    std::map<std::string, std::string> direct;
    for (const auto& [from, to] : aliases) {
        direct[text::normalize_name(from)] = std::string(text::trim(to));
    }
    std::map<std::string, std::string> resolved;
    for (const auto& [key, first_target] : direct) {
        std::set<std::string> visited{key};
        std::string current = first_target;
        std::string current_norm = text::normalize_name(current);
        // A name mapped onto its own normalised form only fixes the spelling.
        while (current_norm != key) {
            if (!visited.insert(current_norm).second) {
                throw Error(ErrorCode::AliasCycle, "alias cycle through '" + current + "'");
            }
            auto next = direct.find(current_norm);
            if (next == direct.end()) break;
            const std::string next_norm = text::normalize_name(next->second);
            current = next->second;
            if (next_norm == current_norm) break;
            current_norm = next_norm;
        }
        if (current_norm == key && visited.size() > 1) {
            throw Error(ErrorCode::AliasCycle, "alias cycle through '" + current + "'");
        }
        resolved[key] = current;
    }
    return resolved;
}

class Canonicalizer {
public:
    explicit Canonicalizer(const AliasTable& aliases) : aliases_(resolve_aliases(aliases)) {}

    std::string operator()(std::string_view raw) {
        std::string name(text::trim(raw));
        auto alias = aliases_.find(text::normalize_name(name));
        if (alias != aliases_.end()) name = alias->second;
        const std::string norm = text::normalize_name(name);
        auto [it, inserted] = spelling_.emplace(norm, name);
        return it->second;
    }

private:
    std::map<std::string, std::string> aliases_;
    std::map<std::string, std::string> spelling_;
};

} // namespace

std::optional<std::string> KnowledgeGraph::find_entity(std::string_view name) const {
    if (entities_.count(std::string(name))) return std::string(name);
    auto it = by_normalized_.find(text::normalize_name(name));
    if (it == by_normalized_.end()) return std::nullopt;
    return it->second;
}

const std::vector<KnowledgeGraph::Adjacent>& KnowledgeGraph::outgoing(const std::string& entity) const {
    auto it = adjacency_.find(entity);
    return it == adjacency_.end() ? kNoAdjacent : it->second;
}

KnowledgeGraph KnowledgeGraph::from_canonical(std::vector<Triple> edges,
                                              const std::vector<std::string>& extra_entities) {
    KnowledgeGraph g;
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    g.edges_ = std::move(edges);
    for (const auto& e : g.edges_) {
        g.entities_.insert(e.subject);
        g.entities_.insert(e.object);
    }
    for (const auto& e : extra_entities) g.entities_.insert(e);
    g.index();
    return g;
}

void KnowledgeGraph::index() {
    adjacency_.clear();
    doc_index_.clear();
    by_normalized_.clear();
    for (const auto& name : entities_) by_normalized_.emplace(text::normalize_name(name), name);

    node_names_.assign(entities_.begin(), entities_.end());
    std::map<std::string, std::size_t> id;
    for (std::size_t i = 0; i < node_names_.size(); ++i) id[node_names_[i]] = i;
    undirected_.assign(node_names_.size(), {});

    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const auto& e = edges_[i];
        adjacency_[e.subject].push_back({e.relation, e.object, e.doc_id});
        doc_index_[e.doc_id].push_back(i);
        if (e.subject == e.object) continue;
        const std::size_t s = id.at(e.subject);
        const std::size_t o = id.at(e.object);
        undirected_[s].push_back({o, i, false});
        undirected_[o].push_back({s, i, true});
    }
}

KnowledgeGraph build_graph(const std::vector<Triple>& triples, const AliasTable& aliases) {
    Canonicalizer canon(aliases);
    std::vector<Triple> edges;
    edges.reserve(triples.size());
    for (const auto& t : triples) {
        if (!t.well_formed()) continue;
        Triple c;
        c.subject = canon(t.subject);
        c.relation = std::string(text::trim(t.relation));
        c.object = canon(t.object);
        c.doc_id = std::string(text::trim(t.doc_id));
        edges.push_back(std::move(c));
    }
    return KnowledgeGraph::from_canonical(std::move(edges));
}

KnowledgeGraph aggregate_domain(const std::vector<KnowledgeGraph>& graphs, const AliasTable& aliases) {
    std::vector<Triple> all;
    for (const auto& g : graphs) all.insert(all.end(), g.edges().begin(), g.edges().end());
    return build_graph(all, aliases);
}

KnowledgeGraph sample_subgraph(const KnowledgeGraph& graph, const std::vector<std::string>& seeds,
                               int radius, const std::optional<std::set<std::string>>& relation_filter) {
    if (radius < 1) throw Error(ErrorCode::InvalidArgument, "radius must be at least 1");
    if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "at least one seed entity is required");

    const auto& names = graph.node_names();
    std::map<std::string, std::size_t> id;
    for (std::size_t i = 0; i < names.size(); ++i) id[names[i]] = i;

    auto passes = [&](std::size_t edge) {
        return !relation_filter || relation_filter->count(graph.edges()[edge].relation) > 0;
    };

    std::vector<int> depth(names.size(), -1);
    std::deque<std::size_t> queue;
    for (const auto& seed : seeds) {
        auto found = graph.find_entity(seed);
        if (!found) throw Error(ErrorCode::UnknownSeed, "seed entity not in graph: " + seed);
        const std::size_t s = id.at(*found);
        if (depth[s] < 0) {
            depth[s] = 0;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        if (depth[u] >= radius) continue;
        for (const auto& hop : graph.hops_from(u)) {
            if (!passes(hop.edge) || depth[hop.neighbor] >= 0) continue;
            depth[hop.neighbor] = depth[u] + 1;
            queue.push_back(hop.neighbor);
        }
    }

    std::vector<std::string> nodes;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (depth[i] >= 0) nodes.push_back(names[i]);
    }
    std::set<std::string> keep(nodes.begin(), nodes.end());
    std::vector<Triple> edges;
    for (std::size_t i = 0; i < graph.edges().size(); ++i) {
        const auto& e = graph.edges()[i];
        if (passes(i) && keep.count(e.subject) && keep.count(e.object)) edges.push_back(e);
    }
    return KnowledgeGraph::from_canonical(std::move(edges), nodes);
}

std::string_view to_string(PathStrategy s) {
    return s == PathStrategy::RandomWalk ? "random_walk" : "bfs";
}

PathStrategy path_strategy_from_string(std::string_view s) {
    const std::string n = text::casefold(s);
    if (n == "random_walk" || n == "randomwalk" || n == "random-walk") return PathStrategy::RandomWalk;
    if (n == "bfs") return PathStrategy::BFS;
    throw Error(ErrorCode::InvalidArgument, "unknown path strategy: " + std::string(s));
}

std::size_t default_min_docs(std::size_t hops) {
    return std::max<std::size_t>(2, (hops + 2) / 3);
}

namespace {

using HopList = std::vector<KnowledgeGraph::Hop>;

std::size_t distinct_docs(const KnowledgeGraph& graph, const HopList& hops) {
    std::set<std::string_view> docs;
    for (const auto& h : hops) docs.insert(graph.edges()[h.edge].doc_id);
    return docs.size();
}

ReasoningPath make_path(const KnowledgeGraph& graph, std::size_t start, const HopList& hops) {
    ReasoningPath p;
    p.nodes.push_back(graph.node_names()[start]);
    for (const auto& h : hops) {
        const auto& e = graph.edges()[h.edge];
        p.nodes.push_back(graph.node_names()[h.neighbor]);
        p.relations.push_back(e.relation);
        p.doc_ids.push_back(e.doc_id);
        p.reversed.push_back(h.reversed);
    }
    return p;
}

std::optional<ReasoningPath> random_walk_attempt(const KnowledgeGraph& graph, std::size_t hops,
                                                 std::size_t min_docs, Rng& rng, std::vector<char>& visited) {
    const std::size_t n = graph.node_names().size();
    const std::size_t start = rng.index(n);
    std::vector<std::size_t> touched{start};
    visited[start] = 1;
    HopList walk;
    std::size_t current = start;
    HopList options;
    bool ok = true;
    while (walk.size() < hops) {
        options.clear();
        for (const auto& h : graph.hops_from(current)) {
            if (!visited[h.neighbor]) options.push_back(h);
        }
        if (options.empty()) {
            ok = false;
            break;
        }
        const auto& pick = options[rng.index(options.size())];
        walk.push_back(pick);
        current = pick.neighbor;
        visited[current] = 1;
        touched.push_back(current);
    }
    for (std::size_t t : touched) visited[t] = 0;
    if (!ok || distinct_docs(graph, walk) < min_docs) return std::nullopt;
    return make_path(graph, start, walk);
}

std::optional<ReasoningPath> bfs_attempt(const KnowledgeGraph& graph, std::size_t hops, std::size_t min_docs,
                                         Rng& rng) {
    const std::size_t n = graph.node_names().size();
    const std::size_t root = rng.index(n);
    std::vector<long> depth(n, -1);
    std::vector<KnowledgeGraph::Hop> via(n);
    std::vector<std::size_t> parent(n, 0);
    std::vector<std::size_t> frontier_at_target;
    std::deque<std::size_t> queue{root};
    depth[root] = 0;
    HopList options;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        if (static_cast<std::size_t>(depth[u]) == hops) {
            frontier_at_target.push_back(u);
            continue;
        }
        options = graph.hops_from(u);
        rng.shuffle(options);
        for (const auto& h : options) {
            if (depth[h.neighbor] >= 0) continue;
            depth[h.neighbor] = depth[u] + 1;
            via[h.neighbor] = h;
            parent[h.neighbor] = u;
            queue.push_back(h.neighbor);
        }
    }

    std::vector<HopList> qualifying;
    for (std::size_t leaf : frontier_at_target) {
        HopList hops_rev;
        for (std::size_t v = leaf; v != root; v = parent[v]) hops_rev.push_back(via[v]);
        std::reverse(hops_rev.begin(), hops_rev.end());
        if (distinct_docs(graph, hops_rev) >= min_docs) qualifying.push_back(std::move(hops_rev));
    }
    if (qualifying.empty()) return std::nullopt;
    return make_path(graph, root, qualifying[rng.index(qualifying.size())]);
}

} // namespace

ReasoningPath sample_path(const KnowledgeGraph& graph, const PathOptions& opts) {
    if (opts.hops < opts.min_hops || opts.hops > opts.max_hops) {
        throw Error(ErrorCode::InvalidArgument, "hops must lie in [" + std::to_string(opts.min_hops) + ", " +
                                                    std::to_string(opts.max_hops) + "], got " +
                                                    std::to_string(opts.hops));
    }
    const std::size_t min_docs = opts.min_docs.value_or(default_min_docs(opts.hops));
    if (min_docs == 0) throw Error(ErrorCode::InvalidArgument, "min_docs must be at least 1");
    if (opts.max_attempts == 0) throw Error(ErrorCode::InvalidArgument, "max_attempts must be positive");

    const std::size_t n = graph.node_names().size();
    if (n < opts.hops + 1) {
        throw Error(ErrorCode::NoPathFound, "graph has " + std::to_string(n) + " entities; a simple " +
                                                std::to_string(opts.hops) + "-hop path needs " +
                                                std::to_string(opts.hops + 1));
    }
    if (min_docs > graph.num_documents() || min_docs > opts.hops) {
        throw Error(ErrorCode::NoPathFound, "cannot span " + std::to_string(min_docs) + " documents");
    }

    std::vector<char> visited(n, 0);
    for (std::size_t attempt = 0; attempt < opts.max_attempts; ++attempt) {
        Rng rng(derive_seed(opts.seed, attempt));
        std::optional<ReasoningPath> path;
        if (opts.strategy == PathStrategy::RandomWalk) {
            path = random_walk_attempt(graph, opts.hops, min_docs, rng, visited);
        } else {
            path = bfs_attempt(graph, opts.hops, min_docs, rng);
        }
        if (path) return *path;
    }
    throw Error(ErrorCode::NoPathFound, "no " + std::to_string(opts.hops) + "-hop path found in " +
                                            std::to_string(opts.max_attempts) + " attempts");
}

bool looks_temporal(std::string_view name) {
    static const std::vector<std::string> months = {
        "january", "february", "march", "april", "may", "june", "july", "august", "september", "october",
        "november", "december", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct",
        "nov", "dec"};
    static const std::set<std::string> eras = {"bc", "bce", "ad", "ce"};

    std::vector<std::string> tokens;
    std::string cur;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    if (tokens.empty()) return false;

    auto all_digits = [](const std::string& t) {
        return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    bool has_month = false;
    bool has_digits = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (all_digits(t)) {
            has_digits = true;
            if (t.size() == 4) {
                const int v = std::stoi(t);
                if (v >= 1000 && v <= 2199) return true;
            }
            if (i + 1 < tokens.size() && eras.count(tokens[i + 1])) return true;
        } else if (t.size() == 5 && t.back() == 's' && all_digits(t.substr(0, 4))) {
            return true;
        } else if (std::find(months.begin(), months.end(), t) != months.end()) {
            has_month = true;
        }
    }
    return has_month && has_digits;
}

ObfuscationPlan plan_obfuscations(const ReasoningPath& path,
                                  const std::map<std::string, ObfuscationCategory>& tags,
                                  double density, std::uint64_t seed) {
    if (!(density >= 0.0 && density <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "obfuscation density must lie in [0, 1]");
    }
    if (!path.well_formed() || path.empty()) {
        throw Error(ErrorCode::InvalidArgument, "obfuscation needs a well-formed, non-empty path");
    }
    const std::size_t hops = path.hops();
    std::size_t count = static_cast<std::size_t>(std::ceil(density * static_cast<double>(hops + 1) - 1e-9));
    count = std::min(count, hops);
    ObfuscationPlan plan;
    if (count == 0) return plan;

    std::map<std::string, ObfuscationCategory> tags_norm;
    for (const auto& [name, cat] : tags) tags_norm.emplace(text::normalize_name(name), cat);

    Rng rng(seed);
    const std::size_t exempt = rng.index(2) == 0 ? 0 : hops;
    const std::string exempt_norm = text::normalize_name(path.nodes[exempt]);
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i <= hops; ++i) {
        if (i != exempt) positions.push_back(i);
    }
    rng.shuffle(positions);
    positions.resize(count);
    std::sort(positions.begin(), positions.end());

    std::set<std::string> chosen;
    for (std::size_t pos : positions) {
        const std::string& node = path.nodes[pos];
        const std::string norm = text::normalize_name(node);
        if (norm == exempt_norm || !chosen.insert(norm).second) continue;
        ObfuscationTarget t;
        t.node = node;
        if (auto it = tags_norm.find(norm); it != tags_norm.end()) {
            t.category = it->second;
        } else if (looks_temporal(node)) {
            t.category = ObfuscationCategory::Temporal;
        }
        plan.targets.push_back(std::move(t));
    }
    return plan;
}

} // namespace hopwise
