#include "hopwise/shaping.hpp"

#include "hopwise/error.hpp"
#include "hopwise/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace hopwise {

std::string_view to_string(StdMode m) {
    return m == StdMode::Population ? "population" : "sample";
}

std::string_view to_string(RatioGranularity g) {
    return g == RatioGranularity::Token ? "token" : "step";
}

std::string_view to_string(SimMode m) {
    return m == SimMode::MaxOverSteps ? "max_over_steps" : "whole_reference";
}

StdMode std_mode_from_string(std::string_view s) {
    const std::string n = text::casefold(s);
    if (n == "population") return StdMode::Population;
    if (n == "sample") return StdMode::Sample;
    throw Error(ErrorCode::InvalidArgument, "unknown std mode: " + std::string(s));
}

RatioGranularity granularity_from_string(std::string_view s) {
    const std::string n = text::casefold(s);
    if (n == "token") return RatioGranularity::Token;
    if (n == "step") return RatioGranularity::Step;
    throw Error(ErrorCode::InvalidArgument, "unknown ratio granularity: " + std::string(s));
}

SimMode sim_mode_from_string(std::string_view s) {
    const std::string n = text::casefold(s);
    if (n == "max_over_steps" || n == "max") return SimMode::MaxOverSteps;
    if (n == "whole_reference" || n == "whole") return SimMode::WholeReference;
    throw Error(ErrorCode::InvalidArgument, "unknown sim mode: " + std::string(s));
}

void ObjectiveConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    }
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw Error(ErrorCode::InvalidArgument, "beta must be non-negative");
    }
    if (!(std_floor > 0.0) || !std::isfinite(std_floor)) {
        throw Error(ErrorCode::InvalidArgument, "std_floor must be positive");
    }
}

StepSignal::StepSignal(bool valid, double sim) : valid_(valid), sim_(sim) {
    if (!(sim >= 0.0 && sim <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "step similarity outside [0, 1]");
    }
}

void RolloutGroup::validate() const {
    if (trajectories.empty()) throw Error(ErrorCode::EmptyGroup, "group " + question_id + " is empty");
    if (rewards.size() != trajectories.size()) {
        throw Error(ErrorCode::LengthMismatch, "group " + question_id + ": rewards and trajectories differ in length");
    }
    for (int r : rewards) {
        if (r != 0 && r != 1) throw Error(ErrorCode::InvalidArgument, "rewards must be 0 or 1");
    }
    if (!signals.empty() && signals.size() != trajectories.size()) {
        throw Error(ErrorCode::LengthMismatch, "group " + question_id + ": signals and trajectories differ in length");
    }
}

std::vector<double> group_advantages(std::span<const double> rewards, const ObjectiveConfig& cfg) {
    if (rewards.empty()) throw Error(ErrorCode::EmptyGroup, "cannot normalise an empty group");
    const auto n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double ss = 0.0;
    for (double r : rewards) ss += (r - mean) * (r - mean);

    std::vector<double> out(rewards.size(), 0.0);
    if (ss == 0.0) return out;
    double denom = n;
    if (cfg.std_mode == StdMode::Sample) denom = n - 1.0;
    const double sd = denom > 0.0 ? std::sqrt(ss / denom) : 0.0;
    const double scale = std::max(sd, cfg.std_floor);
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / scale;
    return out;
}

Trajectory collect_reference_trajectory(ChatClient& client, const PromptSet& prompts,
                                        std::string_view question,
                                        const std::vector<Document>& context_docs,
                                        const ReasoningPath& gt_chain,
                                        const ReferenceOptions& opts) {
    if (gt_chain.empty()) throw Error(ErrorCode::EmptyChain, "reference requires a non-empty GT chain");
    ChatRequest req;
    req.model = opts.model;
    req.temperature = opts.decode.temperature;
    req.top_p = opts.decode.top_p;
    req.max_tokens = opts.decode.max_tokens;
    req.messages = prompts.training_messages(context_docs, question, render_gt_chain(gt_chain));
    return segment_trajectory(client.chat(req), opts.model_kind);
}

namespace {

std::string reference_text(const Trajectory& reference) {
    std::vector<std::string> parts;
    parts.reserve(reference.steps.size());
    for (const auto& s : reference.steps) parts.emplace_back(text::trim(s.text));
    return text::join(parts, "\n");
}

bool judge_step(ChatClient& judge, const PromptSet& prompts, const std::string& gt_text,
                const std::string& step_text, const JudgeOptions& opts) {
    ChatRequest req;
    req.model = opts.model;
    req.temperature = opts.temperature;
    req.top_p = 1.0;
    req.max_tokens = opts.max_tokens;
    req.messages = {{"user", prompts.substep_judge(gt_text, step_text)}};
    const std::string response = judge.chat(req);
    try {
        return parse_verdict(response) == Verdict::Yes;
    } catch (const Error&) {
        if (!opts.unparseable_is_zero) throw;
        spdlog::warn("substep verdict unparseable, treating as invalid");
        return false;
    }
}

} // namespace

std::vector<StepSignal> step_signals(const Trajectory& trajectory, const Trajectory& reference,
                                     ChatClient& judge, EmbedClient& embedder,
                                     const PromptSet& prompts, const SignalOptions& opts) {
    if (trajectory.steps.empty()) return {};
    if (reference.steps.empty()) {
        throw Error(ErrorCode::InvalidArgument, "reference trajectory has no steps");
    }
    const std::string gt_text = reference_text(reference);
    const std::size_t k = trajectory.steps.size();

    std::vector<char> valid(k, 0);
    const std::size_t width = static_cast<std::size_t>(std::max(1, opts.max_concurrency));
    for (std::size_t start = 0; start < k; start += width) {
        const std::size_t stop = std::min(k, start + width);
        std::vector<std::future<bool>> pending;
        for (std::size_t j = start; j < stop; ++j) {
            pending.push_back(std::async(std::launch::async, [&, j] {
                return judge_step(judge, prompts, gt_text, std::string(text::trim(trajectory.steps[j].text)), opts.judge);
            }));
        }
        for (auto& f : pending) f.wait();
        for (std::size_t j = start; j < stop; ++j) valid[j] = pending[j - start].get() ? 1 : 0;
    }

    std::vector<std::string> texts;
    for (const auto& s : trajectory.steps) texts.emplace_back(text::trim(s.text));
    if (opts.sim_mode == SimMode::MaxOverSteps) {
        for (const auto& s : reference.steps) texts.emplace_back(text::trim(s.text));
    } else {
        texts.push_back(gt_text);
    }
    const auto vecs = embedder.embed(texts);
    if (vecs.size() != texts.size()) {
        throw Error(ErrorCode::DimensionMismatch, "embedder returned the wrong number of vectors");
    }

    std::vector<StepSignal> out;
    out.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t r = k; r < vecs.size(); ++r) best = std::max(best, cosine_similarity(vecs[j], vecs[r]));
        out.emplace_back(valid[j] != 0, std::clamp(best, 0.0, 1.0));
    }
    return out;
}

void compute_group_signals(RolloutGroup& group, ChatClient& judge, EmbedClient& embedder,
                           const PromptSet& prompts, const SignalOptions& opts) {
    group.validate();
    if (group.signals.empty()) group.signals.resize(group.trajectories.size());
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        if (group.rewards[i] != 0 || group.signals[i]) continue;
        if (group.trajectories[i].steps.empty()) {
            group.signals[i] = std::vector<StepSignal>{};
            continue;
        }
        if (!group.reference) {
            throw Error(ErrorCode::MissingSignals, "group " + group.question_id + " has no reference trajectory");
        }
        group.signals[i] = step_signals(group.trajectories[i], *group.reference, judge, embedder, prompts, opts);
    }
}

std::vector<std::vector<double>> step_coefficients(const RolloutGroup& group) {
    group.validate();
    std::vector<std::vector<double>> out(group.trajectories.size());
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        const std::size_t k = group.trajectories[i].steps.size();
        out[i].assign(k, 1.0);
        if (group.rewards[i] != 0 || k == 0) continue;
        if (group.signals.empty() || !group.signals[i]) {
            throw Error(ErrorCode::MissingSignals,
                        "group " + group.question_id + ": trajectory " + std::to_string(i) + " has no step signals");
        }
        const auto& sig = *group.signals[i];
        if (sig.size() != k) {
            throw Error(ErrorCode::MissingSignals,
                        "group " + group.question_id + ": trajectory " + std::to_string(i) +
                            " has " + std::to_string(sig.size()) + " signals for " + std::to_string(k) + " steps");
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (sig[j].valid()) out[i][j] = 1.0 - sig[j].sim();
        }
    }
    return out;
}

ShapedAdvantages shaped_step_advantages(const RolloutGroup& group, const ObjectiveConfig& cfg) {
    group.validate();
    ShapedAdvantages out;
    std::vector<double> rewards(group.rewards.begin(), group.rewards.end());
    out.group_advantages = group_advantages(rewards, cfg);
    out.coefficients = step_coefficients(group);
    out.step_advantages.resize(group.trajectories.size());
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        for (double c : out.coefficients[i]) out.step_advantages[i].push_back(out.group_advantages[i] * c);
    }

    const bool have_tokens = std::all_of(group.trajectories.begin(), group.trajectories.end(),
                                         [](const Trajectory& t) { return t.num_tokens.has_value(); });
    if (have_tokens) {
        std::vector<std::vector<double>> tokens;
        for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
            tokens.push_back(broadcast_to_tokens(group.trajectories[i], out.step_advantages[i],
                                                 out.group_advantages[i]));
        }
        out.token_advantages = std::move(tokens);
    }
    return out;
}

namespace {

void require_token_spans(const Trajectory& t) {
    if (!t.num_tokens) throw Error(ErrorCode::NoTokenSpans, "trajectory has no token spans");
    for (const auto& s : t.steps) {
        if (!s.token_span) throw Error(ErrorCode::NoTokenSpans, "step has no token span");
    }
    for (const auto& s : t.segments) {
        if (!s.token_span) throw Error(ErrorCode::NoTokenSpans, "segment has no token span");
    }
}

} // namespace

std::vector<double> broadcast_to_tokens(const Trajectory& trajectory,
                                        const std::vector<double>& step_advantages,
                                        double group_advantage) {
    require_token_spans(trajectory);
    if (step_advantages.size() != trajectory.steps.size()) {
        throw Error(ErrorCode::LengthMismatch, "one advantage per step is required");
    }
    const std::size_t n = *trajectory.num_tokens;
    std::vector<double> adv(n, group_advantage);
    if (!trajectory.steps.empty()) {
        const std::size_t first = std::min(trajectory.steps.front().token_span->begin, n);
        std::fill(adv.begin(), adv.begin() + static_cast<std::ptrdiff_t>(first), step_advantages.front());
        for (std::size_t j = 0; j < trajectory.steps.size(); ++j) {
            const auto& span = *trajectory.steps[j].token_span;
            for (std::size_t t = span.begin; t < std::min(span.end, n); ++t) adv[t] = step_advantages[j];
        }
    }

    std::vector<char> in_think(n, 0);
    bool any_think = false;
    for (const auto& seg : trajectory.segments) {
        if (seg.kind != SegmentKind::Think) continue;
        for (std::size_t t = seg.token_span->begin; t < std::min(seg.token_span->end, n); ++t) {
            in_think[t] = 1;
            any_think = true;
        }
    }
    if (!any_think) return adv;

    // Uniform values are propagated exactly so untouched rollouts stay bit-identical.
    std::optional<double> first_value;
    bool uniform = true;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (in_think[t]) continue;
        if (!first_value) first_value = adv[t];
        else if (adv[t] != *first_value) uniform = false;
        sum += adv[t];
        ++count;
    }
    double think_value = group_advantage;
    if (count > 0) think_value = uniform ? *first_value : sum / static_cast<double>(count);
    for (std::size_t t = 0; t < n; ++t) {
        if (in_think[t]) adv[t] = think_value;
    }
    return adv;
}

std::vector<double> grpo_token_advantages(const Trajectory& trajectory, double group_advantage) {
    if (!trajectory.num_tokens) throw Error(ErrorCode::NoTokenSpans, "trajectory has no token spans");
    return std::vector<double>(*trajectory.num_tokens, group_advantage);
}

double clipped_term(double ratio, double advantage, double epsilon) {
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

std::vector<AdvantageUnit> token_units(const std::vector<double>& token_advantages) {
    std::vector<AdvantageUnit> units;
    units.reserve(token_advantages.size());
    for (std::size_t t = 0; t < token_advantages.size(); ++t) units.push_back({t, t + 1, token_advantages[t]});
    return units;
}

std::vector<AdvantageUnit> step_units(const Trajectory& trajectory,
                                      const std::vector<double>& token_advantages) {
    require_token_spans(trajectory);
    const std::size_t n = *trajectory.num_tokens;
    if (token_advantages.size() != n) {
        throw Error(ErrorCode::LengthMismatch, "token advantages do not match the token count");
    }
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> seg_of(n, kNone);
    std::vector<std::size_t> step_of(n, kNone);
    for (std::size_t s = 0; s < trajectory.segments.size(); ++s) {
        const auto& span = *trajectory.segments[s].token_span;
        for (std::size_t t = span.begin; t < std::min(span.end, n); ++t) seg_of[t] = s;
    }
    for (std::size_t j = 0; j < trajectory.steps.size(); ++j) {
        const auto& span = *trajectory.steps[j].token_span;
        for (std::size_t t = span.begin; t < std::min(span.end, n); ++t) step_of[t] = j;
    }

    std::vector<AdvantageUnit> units;
    std::size_t begin = 0;
    for (std::size_t t = 1; t <= n; ++t) {
        if (t == n || seg_of[t] != seg_of[begin] || step_of[t] != step_of[begin]) {
            units.push_back({begin, t, token_advantages[begin]});
            begin = t;
        }
    }
    return units;
}

std::vector<AdvantageUnit> advantage_units(const Trajectory& trajectory,
                                           const std::vector<double>& token_advantages,
                                           RatioGranularity granularity) {
    if (granularity == RatioGranularity::Token) return token_units(token_advantages);
    return step_units(trajectory, token_advantages);
}

namespace {

void check_policy_trajectory(const PolicyTrajectory& p) {
    const std::size_t n = p.logp_new.size();
    if (n == 0) throw Error(ErrorCode::LengthMismatch, "trajectory has no tokens");
    if (p.logp_old.size() != n) {
        throw Error(ErrorCode::LengthMismatch, "logp_new and logp_old differ in length");
    }
    std::size_t cursor = 0;
    for (const auto& u : p.units) {
        if (u.begin != cursor || u.end <= u.begin || u.end > n) {
            throw Error(ErrorCode::LengthMismatch, "advantage units must tile the token range");
        }
        cursor = u.end;
    }
    if (cursor != n) throw Error(ErrorCode::LengthMismatch, "advantage units must tile the token range");
}

} // namespace

ObjectiveResult surrogate_objective(const std::vector<PolicyGroup>& groups, const ObjectiveConfig& cfg) {
    cfg.validate();
    if (groups.empty()) throw Error(ErrorCode::EmptyGroup, "no groups given");
    ObjectiveResult result;
    double total = 0.0;
    for (const auto& group : groups) {
        if (group.empty()) throw Error(ErrorCode::EmptyGroup, "group has no trajectories");
        GroupObjective g;
        for (const auto& p : group) {
            check_policy_trajectory(p);
            double score = 0.0;
            for (const auto& u : p.units) {
                double log_ratio = 0.0;
                for (std::size_t t = u.begin; t < u.end; ++t) log_ratio += p.logp_new[t] - p.logp_old[t];
                score += clipped_term(std::exp(log_ratio), u.advantage, cfg.epsilon);
            }
            g.surrogate += score / static_cast<double>(p.units.size());

            double kl = 0.0;
            for (std::size_t t = 0; t < p.logp_new.size(); ++t) {
                const double d = p.logp_old[t] - p.logp_new[t];
                kl += std::exp(d) - d - 1.0;
            }
            g.kl += kl / static_cast<double>(p.logp_new.size());
        }
        g.surrogate /= static_cast<double>(group.size());
        g.kl /= static_cast<double>(group.size());
        g.objective = g.surrogate - cfg.beta * g.kl;
        total += g.objective;
        result.per_group.push_back(g);
    }
    result.J = total / static_cast<double>(groups.size());
    return result;
}

} // namespace hopwise
