#pragma once

// Shared domain types and the textual reasoning-chain format.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hopwise {

struct Triple {
    std::string subject;
    std::string relation;
    std::string object;
    std::string doc_id;

    /// True when subject, relation and object are non-empty after trimming.
    bool well_formed() const;

    auto operator<=>(const Triple&) const = default;
};

struct Document {
    std::string doc_id;
    std::string title;
    std::string body;
    std::size_t token_count = 0;
};

/// Fallback token estimate when no tokenizer count is supplied: characters / 4, rounded up.
std::size_t estimate_tokens(std::string_view text);

/// An ordered chain of entities linked by relations.
///
/// `doc_ids` holds one source document id per hop when known and is empty for chains parsed from
/// text. `reversed[i]` is set when hop i walks its stored edge object -> subject; it is empty
/// when the orientation is unknown.
struct ReasoningPath {
    std::vector<std::string> nodes;
    std::vector<std::string> relations;
    std::vector<std::string> doc_ids;
    std::vector<bool> reversed;

    std::size_t hops() const { return relations.size(); }
    bool empty() const { return relations.empty(); }

    /// Structural checks: nodes == hops + 1, doc_ids/reversed empty or sized to hops.
    bool well_formed() const;
    /// No node repeats.
    bool is_simple() const;

    bool operator==(const ReasoningPath&) const = default;
};

enum class Paradigm { MultiHop, Temporal, Causal, Hypothetical };

std::string_view to_string(Paradigm p);
Paradigm paradigm_from_string(std::string_view s);

struct QAItem {
    std::string id;
    std::string question;
    std::string answer;
    std::string explanation;
    Paradigm paradigm = Paradigm::MultiHop;
    std::vector<std::string> doc_ids;
    ReasoningPath gt_chain;
    std::size_t hops = 0;
    std::size_t token_count = 0;
};

/// Parses `(E)-[R]->(E)-[R]-(E)...`. Entity names may contain balanced parentheses; both the
/// `-[r]->` and `-[r]-` arrow spellings are accepted. Throws Error{MalformedChain}.
ReasoningPath parse_gt_chain(std::string_view text);

/// Canonical `(A)-[r]->(B)` rendering.
std::string render_gt_chain(const ReasoningPath& path);

} // namespace hopwise
