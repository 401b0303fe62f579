#include "hopwise/mock_clients.hpp"

#include "hopwise/error.hpp"
#include "hopwise/text.hpp"

namespace hopwise {

MockChatClient::MockChatClient(MockChatClient&& other) noexcept {
    std::lock_guard lock(other.mu_);
    rules_ = std::move(other.rules_);
    fallback_ = std::move(other.fallback_);
    strict_ = other.strict_;
    calls_ = std::move(other.calls_);
}

MockChatClient MockChatClient::sequence(std::vector<std::string> responses) {
    MockChatClient m;
    for (std::size_t i = 0; i < responses.size(); ++i) m.at_call(i, std::move(responses[i]));
    return m;
}

MockChatClient& MockChatClient::on(std::string substring, std::string response) {
    return on_sequence(std::move(substring), {std::move(response)});
}

MockChatClient& MockChatClient::on_sequence(std::string substring,
                                            std::vector<std::string> responses) {
    std::lock_guard lock(mu_);
    Rule r;
    r.kind = MatchKind::Substring;
    r.substring = std::move(substring);
    r.responses = std::move(responses);
    rules_.push_back(std::move(r));
    return *this;
}

MockChatClient& MockChatClient::at_call(std::size_t position, std::string response) {
    std::lock_guard lock(mu_);
    Rule r;
    r.kind = MatchKind::Position;
    r.position = position;
    r.responses = {std::move(response)};
    rules_.push_back(std::move(r));
    return *this;
}

MockChatClient& MockChatClient::on_request(Responder responder) {
    std::lock_guard lock(mu_);
    Rule r;
    r.kind = MatchKind::Predicate;
    r.responder = std::move(responder);
    rules_.push_back(std::move(r));
    return *this;
}

MockChatClient& MockChatClient::fallback(std::string response) {
    std::lock_guard lock(mu_);
    fallback_ = std::move(response);
    return *this;
}

MockChatClient& MockChatClient::strict(bool enabled) {
    std::lock_guard lock(mu_);
    strict_ = enabled;
    return *this;
}

MockChatClient& MockChatClient::fail_on(std::string substring, ClientErrorKind kind) {
    std::lock_guard lock(mu_);
    Rule r;
    r.kind = MatchKind::Failure;
    r.substring = std::move(substring);
    r.failure = kind;
    rules_.push_back(std::move(r));
    return *this;
}

std::string MockChatClient::chat(const ChatRequest& request) {
    std::lock_guard lock(mu_);
    const std::size_t position = calls_.size();
    calls_.push_back(request);
    const std::string content = request.joined_content();

    for (auto& rule : rules_) {
        switch (rule.kind) {
        case MatchKind::Failure:
            if (content.find(rule.substring) != std::string::npos) {
                throw ClientError(rule.failure, "scripted failure for '" + rule.substring + "'");
            }
            break;
        case MatchKind::Predicate:
            if (auto out = rule.responder(request)) return *out;
            break;
        case MatchKind::Position:
            if (rule.position == position) return rule.responses.front();
            break;
        case MatchKind::Substring:
            if (content.find(rule.substring) != std::string::npos && !rule.responses.empty()) {
                const std::size_t idx = std::min(rule.next, rule.responses.size() - 1);
                ++rule.next;
                return rule.responses[idx];
            }
            break;
        }
    }
    if (fallback_ && !strict_) return *fallback_;
    throw Error(ErrorCode::UnscriptedRequest,
                "no scripted response for call " + std::to_string(position));
}

std::vector<ChatRequest> MockChatClient::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::size_t MockChatClient::call_count() const {
    std::lock_guard lock(mu_);
    return calls_.size();
}

std::size_t MockChatClient::count_containing(std::string_view substring) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& c : calls_) {
        if (c.joined_content().find(substring) != std::string::npos) ++n;
    }
    return n;
}

MockEmbedClient& MockEmbedClient::set(std::string text, std::vector<double> vec) {
    std::lock_guard lock(mu_);
    overrides_[std::move(text)] = std::move(vec);
    return *this;
}

MockEmbedClient& MockEmbedClient::fail_dimensions(bool enabled) {
    std::lock_guard lock(mu_);
    mixed_dims_ = enabled;
    return *this;
}

std::vector<double> MockEmbedClient::hashed_vector(std::string_view text, std::size_t dim) {
    // splitmix64 stream seeded by the FNV-1a hash of the text.
    std::uint64_t state = text::fnv1a(text);
    std::vector<double> v(dim);
    for (auto& x : v) {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        x = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
    }
    return l2_normalize(std::move(v));
}

std::vector<std::vector<double>> MockEmbedClient::embed(const std::vector<std::string>& texts) {
    std::lock_guard lock(mu_);
    ++calls_;
    if (texts.empty()) throw Error(ErrorCode::InvalidArgument, "embed called with no texts");
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto it = overrides_.find(t);
        out.push_back(it != overrides_.end() ? it->second : hashed_vector(t, dim_));
    }
    if (mixed_dims_ && out.size() > 1) out.back().push_back(0.0);
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].size() != out[0].size()) {
            throw Error(ErrorCode::DimensionMismatch, "embedding dims differ within batch");
        }
    }
    for (auto& v : out) v = l2_normalize(std::move(v));
    return out;
}

std::size_t MockEmbedClient::call_count() const {
    std::lock_guard lock(mu_);
    return calls_;
}

} // namespace hopwise
