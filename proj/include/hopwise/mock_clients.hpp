#pragma once

// Deterministic in-memory clients for tests and offline runs. Every call is recorded.

#include "hopwise/clients.hpp"
#include "hopwise/error.hpp"

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace hopwise {

/// Scripted chat client.
///
/// Rules are tried in insertion order. A rule matches by substring of the joined request
/// content, by call position, or by predicate; each rule replays its responses in order and
/// then repeats the last one. Unmatched requests get the fallback response, or throw
/// Error{UnscriptedRequest} in strict mode.
class MockChatClient : public ChatClient {
public:
    using Responder = std::function<std::optional<std::string>(const ChatRequest&)>;

    MockChatClient() = default;
    MockChatClient(MockChatClient&& other) noexcept;

    /// Responses returned for call 0, 1, 2, ... in order.
    static MockChatClient sequence(std::vector<std::string> responses);

    MockChatClient& on(std::string substring, std::string response);
    MockChatClient& on_sequence(std::string substring, std::vector<std::string> responses);
    MockChatClient& at_call(std::size_t position, std::string response);
    /// A responder returning nullopt declines and lets later rules try.
    MockChatClient& on_request(Responder responder);
    MockChatClient& fallback(std::string response);
    MockChatClient& strict(bool enabled = true);
    /// Make matching calls throw ClientError instead of answering.
    MockChatClient& fail_on(std::string substring, ClientErrorKind kind = ClientErrorKind::Transport);

    std::string chat(const ChatRequest& request) override;

    std::vector<ChatRequest> calls() const;
    std::size_t call_count() const;
    /// Number of recorded calls whose joined content contains `substring`.
    std::size_t count_containing(std::string_view substring) const;

private:
    enum class MatchKind { Substring, Position, Predicate, Failure };
    struct Rule {
        MatchKind kind = MatchKind::Substring;
        std::string substring;
        std::size_t position = 0;
        Responder responder;
        std::vector<std::string> responses;
        std::size_t next = 0;
        ClientErrorKind failure = ClientErrorKind::Transport;
    };

    mutable std::mutex mu_;
    std::vector<Rule> rules_;
    std::optional<std::string> fallback_;
    bool strict_ = false;
    std::vector<ChatRequest> calls_;
};

/// Maps each text to a reproducible pseudo-random unit vector derived from its hash, unless
/// an override is registered for that exact text.
class MockEmbedClient : public EmbedClient {
public:
    explicit MockEmbedClient(std::size_t dim = 64) : dim_(dim) {}

    MockEmbedClient& set(std::string text, std::vector<double> vec);
    /// Forces the next batch to return vectors of mixed dimensions.
    MockEmbedClient& fail_dimensions(bool enabled = true);

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

    std::size_t call_count() const;

    /// The hash-derived vector for `text` (before overrides), normalised.
    static std::vector<double> hashed_vector(std::string_view text, std::size_t dim);

private:
    mutable std::mutex mu_;
    std::size_t dim_;
    std::map<std::string, std::vector<double>> overrides_;
    bool mixed_dims_ = false;
    std::size_t calls_ = 0;
};

} // namespace hopwise
