#pragma once

// Chat-completion and embedding client interfaces, the HTTP implementations, and the shared
// judge-verdict parser.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace hopwise {

struct Message {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::vector<Message> messages;
    std::string model;
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 2048;

    /// Concatenation of all message contents, used by mocks for matching.
    std::string joined_content() const;
};

/// Decoding parameters carried into a ChatRequest.
struct DecodeParams {
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 2048;
};

/// Rollout sampling used for the difficulty filter and policy rollouts.
inline constexpr DecodeParams kRolloutDecode{0.7, 0.95, 2048};
/// GT-chain guided reference sampling is greedy.
inline constexpr DecodeParams kReferenceDecode{0.0, 1.0, 2048};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Returns the assistant text. Throws ClientError.
    virtual std::string chat(const ChatRequest& request) = 0;
};

class EmbedClient {
public:
    virtual ~EmbedClient() = default;
    /// One L2-normalised vector per input text. Throws ClientError or Error{DimensionMismatch}.
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

enum class Verdict { Yes, No };

/// Last `[[YES]]` / `[[NO]]` marker wins (inner word case-insensitive).
/// Throws Error{JudgeUnparseable} when neither marker is present.
Verdict parse_verdict(std::string_view text);

/// Scales to unit L2 norm. A zero vector is returned unchanged.
std::vector<double> l2_normalize(std::vector<double> v);
/// Throws Error{DimensionMismatch} on size mismatch; 0 when either vector is zero.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

struct ClientConfig {
    std::string base_url = "http://127.0.0.1:8000/v1";
    /// Read from the environment by the CLI; never from config files.
    std::string api_key;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{500};
    std::chrono::milliseconds backoff_max{30'000};
    int max_concurrency = 8;
    std::string embedding_model = "embedding";

    void validate() const;
};

struct ClientStats {
    std::size_t requests = 0;
    std::size_t retries = 0;
    std::size_t failures = 0;
};

/// Process-wide switch set by offline runs; HTTP clients refuse to construct while it is on.
void set_network_forbidden(bool forbidden);
bool network_forbidden();

/// Shared retry/concurrency machinery for the HTTP clients.
class HttpTransport {
public:
    explicit HttpTransport(ClientConfig cfg);

    /// POSTs `body` to base_url + path and returns the 2xx response body.
    std::string post_json(const std::string& path, const std::string& body);

    ClientStats stats() const;
    const ClientConfig& config() const { return cfg_; }

private:
    std::chrono::milliseconds backoff_delay(int attempt);

    ClientConfig cfg_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    std::counting_semaphore<> in_flight_;
    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> retries_{0};
    std::atomic<std::size_t> failures_{0};
    std::atomic<std::uint64_t> jitter_state_;
};

/// Chat-completions over HTTP: POST {base_url}/chat/completions.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(ClientConfig cfg);
    std::string chat(const ChatRequest& request) override;
    ClientStats stats() const { return transport_.stats(); }

private:
    HttpTransport transport_;
};

/// Embeddings over HTTP: POST {base_url}/embeddings.
class HttpEmbedClient : public EmbedClient {
public:
    explicit HttpEmbedClient(ClientConfig cfg);
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    ClientStats stats() const { return transport_.stats(); }

private:
    HttpTransport transport_;
};

} // namespace hopwise
