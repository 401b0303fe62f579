#pragma once

// Generators, independent reference implementations and fixtures shared by the unit tests and
// the acceptance binary.

#include "hopwise/core.hpp"
#include "hopwise/coverage.hpp"
#include "hopwise/kgraph.hpp"
#include "hopwise/mock_clients.hpp"
#include "hopwise/rng.hpp"
#include "hopwise/segmenter.hpp"
#include "hopwise/shaping.hpp"
#include "hopwise/synthesis.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace hopwise::testing {

// ---------------------------------------------------------------------------------------------
// Trajectory generators

struct TrajectoryShape {
    std::size_t thought_steps = 3;
    std::size_t solution_steps = 1;
    bool think = false;
    bool preamble = false;
    std::string answer = "answer";
};

/// Thought/Solution formatted output with the requested number of steps.
std::string trajectory_text(Rng& rng, const TrajectoryShape& shape);

/// Segmented trajectory with whitespace tokens.
Trajectory tokenized(const std::string& text, ModelKind kind);

/// Trajectory with `steps` steps and no text; enough for step-level shaping.
Trajectory bare_trajectory(std::size_t steps);

std::vector<StepSignal> random_signals(Rng& rng, std::size_t n);

// ---------------------------------------------------------------------------------------------
// Reference implementations

std::vector<double> oracle_group_advantages(const std::vector<int>& rewards, bool sample_std = false,
                                            double floor = 1e-6);

/// A_i * (1 - [r_i == 0] * valid_ij * sim_ij)
std::vector<std::vector<double>> oracle_step_advantages(const std::vector<int>& rewards,
                                                        const std::vector<std::vector<StepSignal>>& signals);

struct OracleTrajectory {
    Trajectory trajectory;
    std::vector<std::pair<std::size_t, std::size_t>> offsets;
    std::vector<double> token_advantages;
    std::vector<double> logp_new;
    std::vector<double> logp_old;
};

/// Objective computed token by token from character offsets, without the library's unit builder.
double oracle_objective(const std::vector<std::vector<OracleTrajectory>>& groups, RatioGranularity granularity,
                        double epsilon, double beta);

/// Ratio of path entities whose name or alias appears as a whole word sequence in the text.
double oracle_entity_coverage(const std::string& text, const std::vector<std::string>& nodes,
                              const AliasMap& aliases);

// ---------------------------------------------------------------------------------------------
// Graphs and corpora

/// n nodes; node i links forward to i+1 .. i+k (mod n). Edge source documents cycle over
/// `documents` ids.
KnowledgeGraph ring_lattice(std::size_t n, std::size_t k, std::size_t documents);

struct SyntheticCorpus {
    std::vector<Document> documents;
    std::vector<Triple> triples;
};

/// Documents that each state a handful of facts; every fact is also a triple.
SyntheticCorpus synthetic_corpus(std::size_t documents, std::uint64_t seed);

void write_corpus(const std::filesystem::path& dir, const SyntheticCorpus& corpus);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

// ---------------------------------------------------------------------------------------------
// Fixture trajectories in the Thought/Solution layout

/// Thinking-model output: a <think> block, five thought steps and the answer "80".
extern const std::string kFixtureAgeCorrect;
/// Thinking-model output: seven thought steps ending in the answer "11 years".
extern const std::string kFixtureAgeWrong;
/// Instruct-model output walking a seven-hop chain to "Vienna".
extern const std::string kFixtureChain;
/// The chain walked by kFixtureChain.
extern const std::string kFixtureChainGt;

// ---------------------------------------------------------------------------------------------
// Scripted quality-control run

/// Every item's planned outcome, keyed by generation order.
struct GauntletPlan {
    /// "align", "ground", "length", "robust" or "pass-<m>" (m of 8 policy rollouts succeed).
    std::vector<std::string> fates;
};

/// The default 20-item plan.
GauntletPlan default_gauntlet_plan();

struct GauntletRun {
    PipelineResult result;
    std::size_t alignment_calls = 0;
    std::size_t verifier_calls = 0;
    std::size_t grounding_calls = 0;
    std::size_t robustness_calls = 0;
    std::size_t policy_calls = 0;
    /// Responder calls per (fate, phase) where phase is align/ground/robust.
    std::map<std::string, std::size_t> per_fate_phase;
};

/// Runs run_pipeline with role-specific scripted mocks that follow `plan`.
GauntletRun run_gauntlet(const GauntletPlan& plan);

} // namespace hopwise::testing
