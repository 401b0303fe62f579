#pragma once

// JSON representations of the on-disk records and their validation.

#include "hopwise/core.hpp"
#include "hopwise/kgraph.hpp"
#include "hopwise/segmenter.hpp"
#include "hopwise/shaping.hpp"
#include "hopwise/synthesis.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hopwise {

using json = nlohmann::json;

json triple_to_json(const Triple& t);
/// Throws Error{DataError}.
Triple triple_from_json(const json& j);

json document_to_json(const Document& d);
Document document_from_json(const json& j);

struct PathRecord {
    ReasoningPath path;
    std::uint64_t seed = 0;
    PathStrategy strategy = PathStrategy::RandomWalk;
};

json path_to_json(const PathRecord& r);
PathRecord path_from_json(const json& j);

json qc_verdict_to_json(const QCVerdict& v);
QCVerdict qc_verdict_from_json(const json& j);

json qa_to_json(const SynthesizedItem& item);
SynthesizedItem qa_from_json(const json& j);

json kg_to_json(const KnowledgeGraph& g);
KnowledgeGraph kg_from_json(const json& j);

json stats_to_json(const PipelineStats& s);

struct TrajectoryRecord {
    std::string text;
    std::optional<int> reward;
    std::optional<std::vector<double>> logp_new;
    std::optional<std::vector<double>> logp_old;
    std::optional<std::vector<std::pair<std::size_t, std::size_t>>> token_offsets;
    /// Precomputed step signals; when absent they are computed from the reference.
    std::optional<std::vector<StepSignal>> signals;
};

struct RolloutRecord {
    std::string group_id;
    std::string question_id;
    std::string question;
    std::string gold;
    std::optional<std::string> reference_text;
    std::optional<std::string> gt_chain;
    std::optional<ModelKind> model_kind;
    std::vector<TrajectoryRecord> trajectories;
};

json rollout_to_json(const RolloutRecord& r);
RolloutRecord rollout_from_json(const json& j);

/// Record kinds understood by validate_record.
enum class RecordKind { Triples, Paths, QA, Rollouts, Advantages, Predictions, Rewards, KGSnapshot, Stats };

std::string_view to_string(RecordKind k);
RecordKind record_kind_from_string(std::string_view s);

/// Problems found in one record; empty when valid.
std::vector<std::string> validate_record(RecordKind kind, const json& j);

} // namespace hopwise
