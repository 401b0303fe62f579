#pragma once

// Step-wise advantage shaping on top of group-relative advantages.
//
// For a group of N rollouts with binary rewards r_i, the group-relative advantage is
//     A_i = (r_i - mean(r)) / max(std(r), std_floor)        (all zeros when std(r) == 0)
// and each reasoning step j of rollout i gets
//     A_ij = A_i * c_ij,    c_ij = 1 - [r_i == 0] * [valid_ij] * sim_ij
// so steps of failed rollouts that the judge finds in the reference trajectory, and that are
// semantically close to it, stop being penalised. Rollouts with reward 1 are left untouched.

#include "hopwise/clients.hpp"
#include "hopwise/core.hpp"
#include "hopwise/prompts.hpp"
#include "hopwise/reward.hpp"
#include "hopwise/segmenter.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hopwise {

enum class StdMode { Population, Sample };
enum class RatioGranularity { Token, Step };
enum class SimMode { MaxOverSteps, WholeReference };

std::string_view to_string(StdMode m);
std::string_view to_string(RatioGranularity g);
std::string_view to_string(SimMode m);
StdMode std_mode_from_string(std::string_view s);
RatioGranularity granularity_from_string(std::string_view s);
SimMode sim_mode_from_string(std::string_view s);

struct ObjectiveConfig {
    double epsilon = 0.2;
    double beta = 0.0;
    RatioGranularity granularity = RatioGranularity::Token;
    StdMode std_mode = StdMode::Population;
    double std_floor = 1e-6;

    void validate() const;
};

/// Validity and relevance of one step relative to the reference trajectory.
class StepSignal {
public:
    /// Throws Error{InvalidArgument} unless 0 <= sim <= 1.
    StepSignal(bool valid, double sim);

    bool valid() const { return valid_; }
    double sim() const { return sim_; }

private:
    bool valid_;
    double sim_;
};

struct RolloutGroup {
    std::string question_id;
    std::vector<Trajectory> trajectories;
    std::vector<int> rewards;
    std::optional<Trajectory> reference;
    /// Empty, or one entry per trajectory; positives may leave theirs unset.
    std::vector<std::optional<std::vector<StepSignal>>> signals;

    void validate() const;
};

struct ShapedAdvantages {
    std::vector<double> group_advantages;
    std::vector<std::vector<double>> coefficients;
    std::vector<std::vector<double>> step_advantages;
    /// Present when every trajectory carries token spans.
    std::optional<std::vector<std::vector<double>>> token_advantages;
};

/// Throws Error{EmptyGroup}.
std::vector<double> group_advantages(std::span<const double> rewards, const ObjectiveConfig& cfg = {});

struct ReferenceOptions {
    std::string model;
    DecodeParams decode = kReferenceDecode;
    ModelKind model_kind = ModelKind::Instruct;
};

/// Samples the GT-chain guided reference trajectory. Throws Error{EmptyChain}, ClientError.
Trajectory collect_reference_trajectory(ChatClient& client, const PromptSet& prompts,
                                        std::string_view question,
                                        const std::vector<Document>& context_docs,
                                        const ReasoningPath& gt_chain,
                                        const ReferenceOptions& opts = {});

struct SignalOptions {
    SimMode sim_mode = SimMode::MaxOverSteps;
    JudgeOptions judge;
    /// Upper bound on judge calls in flight for one trajectory.
    int max_concurrency = 4;
};

/// Judge verdict and clamped cosine similarity for every step of `trajectory`.
std::vector<StepSignal> step_signals(const Trajectory& trajectory, const Trajectory& reference,
                                     ChatClient& judge, EmbedClient& embedder,
                                     const PromptSet& prompts, const SignalOptions& opts = {});

/// Fills signals for every reward-0 trajectory that has none yet. Requires a reference.
void compute_group_signals(RolloutGroup& group, ChatClient& judge, EmbedClient& embedder,
                           const PromptSet& prompts, const SignalOptions& opts = {});

/// c_ij per trajectory and step. Throws Error{MissingSignals}.
std::vector<std::vector<double>> step_coefficients(const RolloutGroup& group);

ShapedAdvantages shaped_step_advantages(const RolloutGroup& group, const ObjectiveConfig& cfg = {});

/// Per-token advantages: step tokens get their step's value, tokens before the first step get
/// step 1's value, remaining tokens get the group advantage, and tokens of a <think> segment
/// get the mean of all other tokens. Throws Error{NoTokenSpans}, Error{LengthMismatch}.
std::vector<double> broadcast_to_tokens(const Trajectory& trajectory,
                                        const std::vector<double>& step_advantages,
                                        double group_advantage);

/// Plain GRPO: every token carries the group advantage.
std::vector<double> grpo_token_advantages(const Trajectory& trajectory, double group_advantage);

// ---------------------------------------------------------------------------------------------
// Clipped surrogate objective

/// f_eps(ratio, A) = min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)
double clipped_term(double ratio, double advantage, double epsilon);

/// A contiguous run of tokens sharing one probability ratio and one advantage.
struct AdvantageUnit {
    std::size_t begin = 0;
    std::size_t end = 0;
    double advantage = 0.0;
};

struct PolicyTrajectory {
    std::vector<double> logp_new;
    std::vector<double> logp_old;
    /// Must tile [0, logp_new.size()).
    std::vector<AdvantageUnit> units;
};

using PolicyGroup = std::vector<PolicyTrajectory>;

struct GroupObjective {
    double surrogate = 0.0;
    double kl = 0.0;
    double objective = 0.0;
};

struct ObjectiveResult {
    double J = 0.0;
    std::vector<GroupObjective> per_group;
};

/// One unit per token.
std::vector<AdvantageUnit> token_units(const std::vector<double>& token_advantages);

/// One unit per step, plus one per maximal run of non-step tokens within a segment.
std::vector<AdvantageUnit> step_units(const Trajectory& trajectory,
                                      const std::vector<double>& token_advantages);

/// Units for the configured granularity.
std::vector<AdvantageUnit> advantage_units(const Trajectory& trajectory,
                                           const std::vector<double>& token_advantages,
                                           RatioGranularity granularity);

/// Unit ratio = exp(sum of token log-ratios); trajectory score = mean clipped term over its
/// units; group score = mean over trajectories; J = mean over groups of (score - beta * KL)
/// with KL the per-token estimate exp(d) - d - 1, d = logp_old - logp_new, averaged over each
/// trajectory's tokens and then over trajectories. Throws Error{LengthMismatch}.
ObjectiveResult surrogate_objective(const std::vector<PolicyGroup>& groups, const ObjectiveConfig& cfg);

} // namespace hopwise
