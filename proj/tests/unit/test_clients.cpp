#include "hopwise/clients.hpp"
#include "hopwise/error.hpp"
#include "hopwise/mock_clients.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <thread>

namespace hopwise {
namespace {

ChatRequest request(std::string content) {
    ChatRequest r;
    r.messages.push_back({"user", std::move(content)});
    return r;
}

TEST(MockChat, RulesInOrderThenFallback) {
    MockChatClient m;
    m.on("apple", "A").on_sequence("pear", {"P1", "P2"}).fallback("F");
    EXPECT_EQ(m.chat(request("an apple and a pear")), "A");
    EXPECT_EQ(m.chat(request("pear")), "P1");
    EXPECT_EQ(m.chat(request("pear")), "P2");
    EXPECT_EQ(m.chat(request("pear")), "P2");
    EXPECT_EQ(m.chat(request("plum")), "F");
    EXPECT_EQ(m.call_count(), 5u);
    EXPECT_EQ(m.count_containing("pear"), 4u);
}

TEST(MockChat, PositionPredicateAndStrict) {
    MockChatClient m;
    m.at_call(1, "second")
        .on_request([](const ChatRequest& r) -> std::optional<std::string> {
            if (r.temperature > 0.5) return "hot";
            return std::nullopt;
        })
        .strict();
    ChatRequest hot = request("x");
    hot.temperature = 0.7;
    EXPECT_EQ(m.chat(hot), "hot");
    EXPECT_EQ(m.chat(request("x")), "second");
    try {
        m.chat(request("x"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnscriptedRequest);
    }
}

TEST(MockChat, SequenceAndFailures) {
    MockChatClient s = MockChatClient::sequence({"a", "b"});
    EXPECT_EQ(s.chat(request("")), "a");
    EXPECT_EQ(s.chat(request("")), "b");
    MockChatClient f;
    f.fail_on("boom", ClientErrorKind::Timeout).fallback("ok");
    EXPECT_EQ(f.chat(request("fine")), "ok");
    try {
        f.chat(request("boom"));
        FAIL();
    } catch (const ClientError& e) {
        EXPECT_EQ(e.kind(), ClientErrorKind::Timeout);
    }
}

TEST(MockEmbed, DeterministicUnitVectors) {
    MockEmbedClient m(16);
    m.set("fixed", {3.0, 4.0});
    const auto v = m.embed({"hello", "hello"});
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0], v[1]);
    EXPECT_EQ(v[0].size(), 16u);
    double norm = 0;
    for (double x : v[0]) norm += x * x;
    EXPECT_NEAR(norm, 1.0, 1e-12);
    EXPECT_EQ(v[0], MockEmbedClient::hashed_vector("hello", 16));
    const auto fixed = m.embed({"fixed"});
    EXPECT_NEAR(fixed[0][0], 0.6, 1e-12);
    EXPECT_NEAR(fixed[0][1], 0.8, 1e-12);
    m.fail_dimensions();
    EXPECT_THROW(m.embed({"a", "b"}), Error);
}

TEST(Vectors, CosineAndNormalize) {
    EXPECT_DOUBLE_EQ(cosine_similarity({1, 0}, {0, 1}), 0.0);
    EXPECT_DOUBLE_EQ(cosine_similarity({2, 0}, {5, 0}), 1.0);
    EXPECT_DOUBLE_EQ(cosine_similarity({0, 0}, {1, 0}), 0.0);
    EXPECT_THROW(cosine_similarity({1}, {1, 2}), Error);
    const auto n = l2_normalize({3, 4});
    EXPECT_DOUBLE_EQ(n[0], 0.6);
    EXPECT_EQ(l2_normalize({0, 0}), (std::vector<double>{0, 0}));
}

TEST(ClientConfig, Validation) {
    ClientConfig c;
    EXPECT_NO_THROW(c.validate());
    c.max_concurrency = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.max_retries = -1;
    EXPECT_THROW(c.validate(), Error);
}

// A local chat-completions server whose replies are scripted per request index.
class LocalServer {
public:
    using Handler = std::function<void(int call, const httplib::Request&, httplib::Response&)>;

    explicit LocalServer(Handler handler) : handler_(std::move(handler)) {
        auto route = [this](const httplib::Request& req, httplib::Response& res) {
            const int call = calls_.fetch_add(1);
            {
                std::lock_guard lock(mu_);
                last_auth_ = req.get_header_value("Authorization");
                last_body_ = req.body;
            }
            handler_(call, req, res);
        };
        server_.Post("/v1/chat/completions", route);
        server_.Post("/v1/embeddings", route);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~LocalServer() {
        server_.stop();
        thread_.join();
    }

    ClientConfig config() const {
        ClientConfig c;
        c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
        c.timeout = std::chrono::milliseconds(2000);
        c.backoff_base = std::chrono::milliseconds(1);
        c.backoff_max = std::chrono::milliseconds(5);
        c.max_retries = 3;
        return c;
    }

    int calls() const { return calls_.load(); }
    std::string last_auth() const {
        std::lock_guard lock(mu_);
        return last_auth_;
    }
    std::string last_body() const {
        std::lock_guard lock(mu_);
        return last_body_;
    }

private:
    Handler handler_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> calls_{0};
    mutable std::mutex mu_;
    std::string last_auth_;
    std::string last_body_;
};

std::string completion(const std::string& text) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
}

TEST(HttpChat, RetriesTransientStatusesThenSucceeds) {
    LocalServer server([](int call, const httplib::Request&, httplib::Response& res) {
        if (call == 0) {
            res.status = 503;
        } else if (call == 1) {
            res.status = 429;
        } else {
            res.set_content(completion("hi"), "application/json");
        }
    });
    ClientConfig cfg = server.config();
    cfg.api_key = "secret";
    HttpChatClient client(cfg);
    ChatRequest r = request("hello");
    r.model = "m1";
    r.temperature = 0.7;
    EXPECT_EQ(client.chat(r), "hi");
    EXPECT_EQ(server.calls(), 3);
    EXPECT_EQ(client.stats().retries, 2u);
    EXPECT_EQ(server.last_auth(), "Bearer secret");
    const auto body = nlohmann::json::parse(server.last_body());
    EXPECT_EQ(body["model"], "m1");
    EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.7);
    EXPECT_EQ(body["messages"][0]["content"], "hello");
}

TEST(HttpChat, ClientErrorsAreNotRetried) {
    LocalServer server([](int, const httplib::Request&, httplib::Response& res) { res.status = 400; });
    HttpChatClient client(server.config());
    try {
        client.chat(request("x"));
        FAIL();
    } catch (const ClientError& e) {
        EXPECT_EQ(e.kind(), ClientErrorKind::HttpStatus);
        EXPECT_EQ(e.http_status(), 400);
    }
    EXPECT_EQ(server.calls(), 1);
}

TEST(HttpChat, GivesUpAfterMaxRetries) {
    LocalServer server([](int, const httplib::Request&, httplib::Response& res) { res.status = 500; });
    ClientConfig cfg = server.config();
    cfg.max_retries = 2;
    HttpChatClient client(cfg);
    try {
        client.chat(request("x"));
        FAIL();
    } catch (const ClientError& e) {
        EXPECT_EQ(e.kind(), ClientErrorKind::ExhaustedRetries);
    }
    EXPECT_EQ(server.calls(), 3);
}

TEST(HttpChat, NoAuthHeaderWithoutKey) {
    LocalServer server([](int, const httplib::Request&, httplib::Response& res) {
        res.set_content(completion("ok"), "application/json");
    });
    HttpChatClient client(server.config());
    EXPECT_EQ(client.chat(request("x")), "ok");
    EXPECT_EQ(server.last_auth(), "");
}

TEST(HttpChat, MalformedResponse) {
    LocalServer server([](int, const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"choices\": []}", "application/json");
    });
    HttpChatClient client(server.config());
    try {
        client.chat(request("x"));
        FAIL();
    } catch (const ClientError& e) {
        EXPECT_EQ(e.kind(), ClientErrorKind::MalformedResponse);
    }
}

TEST(HttpEmbed, ParsesAndNormalizes) {
    LocalServer server([](int, const httplib::Request&, httplib::Response& res) {
        nlohmann::json j;
        j["data"] = {{{"index", 1}, {"embedding", {0.0, 2.0}}}, {{"index", 0}, {"embedding", {3.0, 4.0}}}};
        res.set_content(j.dump(), "application/json");
    });
    HttpEmbedClient client(server.config());
    const auto v = client.embed({"a", "b"});
    ASSERT_EQ(v.size(), 2u);
    EXPECT_NEAR(v[0][0], 0.6, 1e-12);
    EXPECT_NEAR(v[1][1], 1.0, 1e-12);
}

TEST(HttpClients, RefusedWhenNetworkForbidden) {
    set_network_forbidden(true);
    try {
        HttpChatClient client(ClientConfig{});
        ADD_FAILURE();
    } catch (const ClientError& e) {
        EXPECT_EQ(e.kind(), ClientErrorKind::NetworkForbidden);
    }
    set_network_forbidden(false);
}

} // namespace
} // namespace hopwise
