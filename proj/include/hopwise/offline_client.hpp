#pragma once

// Deterministic stand-in for every chat role, used by offline (--mock) runs.
//
// Requests are classified by the marker phrases of the built-in prompts:
//   answer judge     -> [[YES]] iff the two answers match after normalisation
//   substep judge    -> [[YES]] iff the substep shares at least two content words with the
//                       ground-truth text
//   obfuscation      -> "[<category> descriptor of <entity>]"
//   generation       -> a question over the supplied chain whose answer is its last entity;
//                       the question carries a "(target: ...)" suffix so later offline
//                       responders can reproduce a known success rate
//   policy prompt    -> a Thought/Solution trajectory. With a reference chain it walks the
//                       chain. With documents, question q succeeds on its k-th identical
//                       request iff (h(q) + k) mod 4 < level(q), level(q) = h'(q) mod 5, so
//                       the success rate over 8 rollouts is level/4. Without documents it
//                       answers "unknown" except for one question in ten.

#include "hopwise/clients.hpp"

#include <cstdint>
#include <map>
#include <mutex>

namespace hopwise {

class OfflineChatClient : public ChatClient {
public:
    explicit OfflineChatClient(std::uint64_t seed = 0) : seed_(seed) {}

    std::string chat(const ChatRequest& request) override;

    std::size_t call_count() const;

private:
    std::string answer_judge(const std::string& content) const;
    std::string substep_judge(const std::string& content) const;
    std::string obfuscate(const std::string& content) const;
    std::string generate(const std::string& content) const;
    std::string respond(const std::string& content);

    std::uint64_t seed_;
    mutable std::mutex mu_;
    std::map<std::uint64_t, std::size_t> repeats_;
    std::size_t calls_ = 0;
};

} // namespace hopwise
