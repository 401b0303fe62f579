#include "hopwise/clients.hpp"
#include "hopwise/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <thread>

namespace hopwise {

using json = nlohmann::json;

namespace {

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

// Splits "http://host:port/v1" into ("http://host:port", "/v1").
std::pair<std::string, std::string> split_base_url(const std::string& url) {
    const std::size_t scheme = url.find("://");
    const std::size_t host_begin = scheme == std::string::npos ? 0 : scheme + 3;
    const std::size_t slash = url.find('/', host_begin);
    if (slash == std::string::npos) return {url, ""};
    std::string prefix = url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, slash), prefix};
}

} // namespace

HttpTransport::HttpTransport(ClientConfig cfg)
    : cfg_(std::move(cfg)), in_flight_(std::max(1, cfg_.max_concurrency)),
      jitter_state_(0x9e3779b97f4a7c15ULL) {
    if (network_forbidden()) {
        throw ClientError(ClientErrorKind::NetworkForbidden,
                          "network access is disabled in offline mode (endpoint " + cfg_.base_url +
                              ")");
    }
    cfg_.validate();
    std::tie(scheme_host_port_, path_prefix_) = split_base_url(cfg_.base_url);
}

ClientStats HttpTransport::stats() const {
    return {requests_.load(), retries_.load(), failures_.load()};
}

std::chrono::milliseconds HttpTransport::backoff_delay(int attempt) {
    // Exponential backoff with jitter in [0.5, 1.0) of the nominal delay.
    const double nominal = std::min<double>(
        static_cast<double>(cfg_.backoff_base.count()) * std::pow(2.0, attempt),
        static_cast<double>(cfg_.backoff_max.count()));
    std::uint64_t x = jitter_state_.fetch_add(0x9e3779b97f4a7c15ULL);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    const double u = static_cast<double>(x >> 11) * 0x1.0p-53;
    return std::chrono::milliseconds(static_cast<long long>(nominal * (0.5 + 0.5 * u)));
}

std::string HttpTransport::post_json(const std::string& path, const std::string& body) {
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    const std::string full_path = path_prefix_ + path;

    ClientErrorKind last_kind = ClientErrorKind::Transport;
    std::string last_message;
    int last_status = 0;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            retries_.fetch_add(1);
            std::this_thread::sleep_for(backoff_delay(attempt - 1));
        }
        requests_.fetch_add(1);
        httplib::Result res;
        {
            in_flight_.acquire();
            httplib::Client client(scheme_host_port_);
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
            const auto usecs =
                std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
            client.set_connection_timeout(secs.count(), usecs.count());
            client.set_read_timeout(secs.count(), usecs.count());
            client.set_write_timeout(secs.count(), usecs.count());
            res = client.Post(full_path, headers, body, "application/json");
            in_flight_.release();
        }
        if (!res) {
            const auto err = res.error();
            last_kind = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                            ? ClientErrorKind::Timeout
                            : ClientErrorKind::Transport;
            last_message = "transport error: " + httplib::to_string(err);
            last_status = 0;
            spdlog::debug("POST {} attempt {} failed: {}", full_path, attempt, last_message);
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        last_status = res->status;
        last_kind = ClientErrorKind::HttpStatus;
        last_message = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        if (!retryable_status(res->status)) {
            failures_.fetch_add(1);
            throw ClientError(ClientErrorKind::HttpStatus, last_message, last_status);
        }
        spdlog::debug("POST {} attempt {} got HTTP {}", full_path, attempt, res->status);
    }
    failures_.fetch_add(1);
    if (cfg_.max_retries > 0) {
        throw ClientError(ClientErrorKind::ExhaustedRetries,
                          "gave up after " + std::to_string(cfg_.max_retries) +
                              " retries; last error: " + last_message,
                          last_status);
    }
    throw ClientError(last_kind, last_message, last_status);
}

HttpChatClient::HttpChatClient(ClientConfig cfg) : transport_(std::move(cfg)) {}

std::string HttpChatClient::chat(const ChatRequest& request) {
    json body;
    body["model"] = request.model;
    body["temperature"] = request.temperature;
    body["top_p"] = request.top_p;
    body["max_tokens"] = request.max_tokens;
    body["messages"] = json::array();
    for (const auto& m : request.messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    const std::string raw = transport_.post_json("/chat/completions", body.dump());
    try {
        const json resp = json::parse(raw);
        const auto& content = resp.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) {
            throw ClientError(ClientErrorKind::MalformedResponse, "message content is not a string");
        }
        return content.get<std::string>();
    } catch (const json::exception& e) {
        throw ClientError(ClientErrorKind::MalformedResponse,
                          std::string("unexpected chat response: ") + e.what());
    }
}

HttpEmbedClient::HttpEmbedClient(ClientConfig cfg) : transport_(std::move(cfg)) {}

std::vector<std::vector<double>> HttpEmbedClient::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw Error(ErrorCode::InvalidArgument, "embed called with no texts");
    json body;
    body["model"] = transport_.config().embedding_model;
    body["input"] = texts;
    const std::string raw = transport_.post_json("/embeddings", body.dump());
    std::vector<std::vector<double>> out(texts.size());
    try {
        const json resp = json::parse(raw);
        const auto& data = resp.at("data");
        if (!data.is_array() || data.size() != texts.size()) {
            throw ClientError(ClientErrorKind::MalformedResponse,
                              "embedding count does not match input count");
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            const std::size_t slot = data[i].contains("index") ? data[i]["index"].get<std::size_t>() : i;
            if (slot >= out.size()) {
                throw ClientError(ClientErrorKind::MalformedResponse, "embedding index out of range");
            }
            out[slot] = data[i].at("embedding").get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw ClientError(ClientErrorKind::MalformedResponse,
                          std::string("unexpected embedding response: ") + e.what());
    }
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].size() != out[0].size()) {
            throw Error(ErrorCode::DimensionMismatch,
                        "embedding dims differ within batch: " + std::to_string(out[0].size()) +
                            " vs " + std::to_string(out[i].size()));
        }
    }
    for (auto& v : out) v = l2_normalize(std::move(v));
    return out;
}

} // namespace hopwise
