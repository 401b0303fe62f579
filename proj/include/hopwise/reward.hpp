#pragma once

// Hybrid outcome reward: max(rule match, judge verdict).

#include "hopwise/clients.hpp"
#include "hopwise/prompts.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace hopwise {

enum class MatchPolicy {
    /// Byte-for-byte comparison.
    Exact,
    /// Trim, ASCII casefold, collapse internal whitespace, strip trailing `.?!`.
    Normalized,
};

std::string normalize_answer(std::string_view s, MatchPolicy policy);

int rule_reward(std::string_view pred, std::string_view gt, MatchPolicy policy = MatchPolicy::Normalized);

struct JudgeOptions {
    std::string model;
    double temperature = 0.0;
    int max_tokens = 1024;
    /// When set, an unparseable verdict scores 0 (with a warning) instead of throwing.
    bool unparseable_is_zero = true;
};

struct RewardRecord {
    int rule = 0;
    std::optional<int> judge;
    int hybrid = 0;
    std::optional<std::string> judge_raw;
};

/// Throws Error{JudgeUnparseable} (unless the fallback is enabled) and ClientError.
int judge_reward(ChatClient& client, const PromptSet& prompts, std::string_view question,
                 std::string_view pred, std::string_view gt, const JudgeOptions& opts = {},
                 std::string* raw_response = nullptr);

/// The judge is only consulted when the rule reward is 0.
RewardRecord hybrid_reward(std::string_view pred, std::string_view gt, std::string_view question,
                           ChatClient& client, const PromptSet& prompts,
                           const JudgeOptions& opts = {},
                           MatchPolicy policy = MatchPolicy::Normalized);

} // namespace hopwise
