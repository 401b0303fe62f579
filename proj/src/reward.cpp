#include "hopwise/reward.hpp"

#include "hopwise/error.hpp"
#include "hopwise/text.hpp"

#include <spdlog/spdlog.h>

namespace hopwise {

std::string normalize_answer(std::string_view s, MatchPolicy policy) {
    if (policy == MatchPolicy::Exact) return std::string(s);
    std::string out = text::normalize_name(s);
    while (!out.empty() && (out.back() == '.' || out.back() == '?' || out.back() == '!' ||
                            out.back() == ' ')) {
        out.pop_back();
    }
    return out;
}

int rule_reward(std::string_view pred, std::string_view gt, MatchPolicy policy) {
    return normalize_answer(pred, policy) == normalize_answer(gt, policy) ? 1 : 0;
}

int judge_reward(ChatClient& client, const PromptSet& prompts, std::string_view question,
                 std::string_view pred, std::string_view gt, const JudgeOptions& opts,
                 std::string* raw_response) {
    ChatRequest req;
    req.model = opts.model;
    req.temperature = opts.temperature;
    req.top_p = 1.0;
    req.max_tokens = opts.max_tokens;
    req.messages = {{"user", prompts.answer_judge(question, pred, gt)}};
    const std::string response = client.chat(req);
    if (raw_response) *raw_response = response;
    try {
        return parse_verdict(response) == Verdict::Yes ? 1 : 0;
    } catch (const Error& e) {
        if (!opts.unparseable_is_zero) throw;
        spdlog::warn("judge verdict unparseable, scoring 0: {}", response.substr(0, 120));
        return 0;
    }
}

RewardRecord hybrid_reward(std::string_view pred, std::string_view gt, std::string_view question,
                           ChatClient& client, const PromptSet& prompts, const JudgeOptions& opts,
                           MatchPolicy policy) {
    RewardRecord rec;
    rec.rule = rule_reward(pred, gt, policy);
    if (rec.rule == 1) {
        rec.hybrid = 1;
        return rec;
    }
    std::string raw;
    rec.judge = judge_reward(client, prompts, question, pred, gt, opts, &raw);
    rec.judge_raw = std::move(raw);
    rec.hybrid = std::max(rec.rule, *rec.judge);
    return rec;
}

} // namespace hopwise
