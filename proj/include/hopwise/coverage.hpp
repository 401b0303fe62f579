#pragma once

// Diagnostics for failed rollouts: how much of the ground-truth chain they already reached.

#include "hopwise/clients.hpp"
#include "hopwise/core.hpp"
#include "hopwise/prompts.hpp"
#include "hopwise/segmenter.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hopwise {

/// Entity name -> alternative surface forms.
using AliasMap = std::map<std::string, std::vector<std::string>>;

struct EntityMatch {
    double coverage = 0.0;
    /// Deduplicated path entities found in the text, in path order.
    std::vector<std::string> matched;
};

/// An entity matches when its normalised name or an alias occurs case-insensitively on word
/// boundaries in the text. The denominator is the deduplicated node set. Throws Error{EmptyPath}.
EntityMatch match_entities(std::string_view trajectory_text, const ReasoningPath& path,
                           const AliasMap& aliases = {});

double entity_coverage(std::string_view trajectory_text, const ReasoningPath& path,
                       const AliasMap& aliases = {});

struct TripletJudgement {
    double coverage = 0.0;
    /// (1-based step index, verdict); unparseable verdicts are recorded as No.
    std::vector<std::pair<std::size_t, Verdict>> verdicts;
};

struct TripletOptions {
    std::string model;
    int max_concurrency = 4;
};

/// YES count over path hops. May exceed 1 when a trajectory has more steps than the path has
/// hops. Throws Error{EmptyPath}, ClientError.
TripletJudgement judge_triplets(const Trajectory& trajectory, const ReasoningPath& path,
                                ChatClient& judge, const PromptSet& prompts,
                                const TripletOptions& opts = {});

double triplet_coverage(const Trajectory& trajectory, const ReasoningPath& path, ChatClient& judge,
                        const PromptSet& prompts, const TripletOptions& opts = {});

struct CoverageRecord {
    double entity_coverage = 0.0;
    double triplet_coverage = 0.0;
    std::vector<std::string> matched_entities;
    std::vector<std::pair<std::size_t, Verdict>> judged_steps;
};

/// Rewards of one group plus a coverage record for each reward-0 rollout, in rollout order.
struct GroupCoverage {
    std::vector<int> rewards;
    std::vector<CoverageRecord> negative_records;
};

struct RatioBucket {
    /// Lower edge of the bucket.
    double positive_ratio = 0.0;
    double mean_entity_cov = 0.0;
    double mean_triplet_cov = 0.0;
    double mean_triplet_cov_clamped = 0.0;
    /// Rollouts in the bucket whose raw triplet coverage exceeded 1.
    std::size_t raw_over_one = 0;
    /// Contributing negative rollouts.
    std::size_t count = 0;
};

/// Buckets negative-rollout coverage by group positive ratio; a ratio r lands in bucket
/// floor(r / bin_width) * bin_width. Only non-empty buckets are returned, ascending.
/// Throws Error{InvalidArgument}, Error{LengthMismatch}.
std::vector<RatioBucket> bucket_by_positive_ratio(const std::vector<GroupCoverage>& groups,
                                                  double bin_width = 0.125);

/// CSV with header ratio_bucket,mean_entity_cov,mean_triplet_cov,count,mean_triplet_cov_clamped,raw_over_one
std::string coverage_report_csv(const std::vector<RatioBucket>& buckets);

} // namespace hopwise
