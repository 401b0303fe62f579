#include "hopwise/coverage.hpp"

#include "hopwise/error.hpp"
#include "hopwise/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <set>

namespace hopwise {

EntityMatch match_entities(std::string_view trajectory_text, const ReasoningPath& path,
                           const AliasMap& aliases) {
    if (path.nodes.empty()) throw Error(ErrorCode::EmptyPath, "entity coverage needs a non-empty path");

    std::map<std::string, std::vector<std::string>> alias_by_norm;
    for (const auto& [name, forms] : aliases) {
        auto& bucket = alias_by_norm[text::normalize_name(name)];
        for (const auto& f : forms) bucket.push_back(text::normalize_name(f));
    }

    const std::string haystack = text::normalize_name(trajectory_text);
    EntityMatch out;
    std::set<std::string> seen;
    for (const auto& node : path.nodes) {
        const std::string norm = text::normalize_name(node);
        if (!seen.insert(norm).second) continue;
        bool hit = text::contains_word_bounded(haystack, norm);
        if (!hit) {
            auto it = alias_by_norm.find(norm);
            if (it != alias_by_norm.end()) {
                hit = std::any_of(it->second.begin(), it->second.end(), [&](const std::string& a) {
                    return text::contains_word_bounded(haystack, a);
                });
            }
        }
        if (hit) out.matched.push_back(node);
    }
    out.coverage = static_cast<double>(out.matched.size()) / static_cast<double>(seen.size());
    return out;
}

double entity_coverage(std::string_view trajectory_text, const ReasoningPath& path, const AliasMap& aliases) {
    return match_entities(trajectory_text, path, aliases).coverage;
}

namespace {

Verdict judge_one(ChatClient& judge, const std::string& prompt, const std::string& model) {
    ChatRequest req;
    req.model = model;
    req.temperature = 0.0;
    req.top_p = 1.0;
    req.max_tokens = 1024;
    req.messages = {{"user", prompt}};
    const std::string response = judge.chat(req);
    try {
        return parse_verdict(response);
    } catch (const Error&) {
        spdlog::warn("substep verdict unparseable, counting as NO");
        return Verdict::No;
    }
}

} // namespace

TripletJudgement judge_triplets(const Trajectory& trajectory, const ReasoningPath& path,
                                ChatClient& judge, const PromptSet& prompts, const TripletOptions& opts) {
    if (path.empty()) throw Error(ErrorCode::EmptyPath, "triplet coverage needs a non-empty path");
    TripletJudgement out;
    const std::string rendered = render_gt_chain(path);
    const std::size_t k = trajectory.steps.size();
    const std::size_t width = static_cast<std::size_t>(std::max(1, opts.max_concurrency));

    std::size_t yes = 0;
    for (std::size_t start = 0; start < k; start += width) {
        const std::size_t stop = std::min(k, start + width);
        std::vector<std::future<Verdict>> pending;
        for (std::size_t j = start; j < stop; ++j) {
            std::string prompt = prompts.substep_judge(rendered, text::trim(trajectory.steps[j].text));
            pending.push_back(std::async(std::launch::async, [&judge, &opts, p = std::move(prompt)] {
                return judge_one(judge, p, opts.model);
            }));
        }
        for (auto& f : pending) f.wait();
        for (std::size_t j = start; j < stop; ++j) {
            const Verdict v = pending[j - start].get();
            if (v == Verdict::Yes) ++yes;
            out.verdicts.emplace_back(trajectory.steps[j].index, v);
        }
    }
    out.coverage = static_cast<double>(yes) / static_cast<double>(path.hops());
    return out;
}

double triplet_coverage(const Trajectory& trajectory, const ReasoningPath& path, ChatClient& judge,
                        const PromptSet& prompts, const TripletOptions& opts) {
    return judge_triplets(trajectory, path, judge, prompts, opts).coverage;
}

std::vector<RatioBucket> bucket_by_positive_ratio(const std::vector<GroupCoverage>& groups, double bin_width) {
    if (!(bin_width > 0.0 && bin_width <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "bin width must lie in (0, 1]");
    }
    struct Acc {
        double entity = 0.0;
        double triplet = 0.0;
        double clamped = 0.0;
        std::size_t over = 0;
        std::size_t count = 0;
    };
    std::map<long, Acc> bins;
    for (const auto& g : groups) {
        if (g.rewards.empty()) throw Error(ErrorCode::EmptyGroup, "group without rewards");
        std::size_t positives = 0;
        for (int r : g.rewards) {
            if (r != 0 && r != 1) throw Error(ErrorCode::InvalidArgument, "rewards must be 0 or 1");
            positives += static_cast<std::size_t>(r);
        }
        const std::size_t negatives = g.rewards.size() - positives;
        if (g.negative_records.size() != negatives) {
            throw Error(ErrorCode::LengthMismatch, "one coverage record per negative rollout is required");
        }
        if (negatives == 0) continue;
        const double ratio = static_cast<double>(positives) / static_cast<double>(g.rewards.size());
        // Exact ratios on a bin edge belong to that bin despite rounding in the division.
        const long bin = static_cast<long>(std::floor(ratio / bin_width + 1e-9));
        auto& acc = bins[bin];
        for (const auto& rec : g.negative_records) {
            acc.entity += rec.entity_coverage;
            acc.triplet += rec.triplet_coverage;
            acc.clamped += std::min(rec.triplet_coverage, 1.0);
            if (rec.triplet_coverage > 1.0) ++acc.over;
            ++acc.count;
        }
    }
    std::vector<RatioBucket> out;
    for (const auto& [bin, acc] : bins) {
        RatioBucket b;
        b.positive_ratio = static_cast<double>(bin) * bin_width;
        const auto n = static_cast<double>(acc.count);
        b.mean_entity_cov = acc.entity / n;
        b.mean_triplet_cov = acc.triplet / n;
        b.mean_triplet_cov_clamped = acc.clamped / n;
        b.raw_over_one = acc.over;
        b.count = acc.count;
        out.push_back(b);
    }
    return out;
}

std::string coverage_report_csv(const std::vector<RatioBucket>& buckets) {
    std::string out = "ratio_bucket,mean_entity_cov,mean_triplet_cov,count,mean_triplet_cov_clamped,raw_over_one\n";
    char line[256];
    for (const auto& b : buckets) {
        std::snprintf(line, sizeof line, "%.4f,%.6f,%.6f,%zu,%.6f,%zu\n", b.positive_ratio, b.mean_entity_cov,
                      b.mean_triplet_cov, b.count, b.mean_triplet_cov_clamped, b.raw_over_one);
        out += line;
    }
    return out;
}

} // namespace hopwise
