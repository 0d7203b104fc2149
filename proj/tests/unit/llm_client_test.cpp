#include <doctest.h>

#include <atomic>
#include <chrono>
#include <deque>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "polalign/error.hpp"
#include "polalign/http_client.hpp"
#include "polalign/llm_client.hpp"
#include "polalign/search.hpp"

using namespace polalign;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

llm::CompletionRequest request(std::string tag, std::string prompt = "Say A") {
    llm::CompletionRequest r;
    r.model_id = "m";
    r.prompt_text = std::move(prompt);
    r.request_tag = std::move(tag);
    return r;
}

std::string chat_body(const std::string& text) {
    return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})}}.dump();
}

// Replays a fixed status sequence; a status of 0 simulates a dropped connection.
class ScriptedTransport final : public http::HttpTransport {
public:
    explicit ScriptedTransport(std::deque<http::HttpResponse> replies) : replies_(std::move(replies)) {}
    http::HttpResponse post_json(const std::string& url, const std::string& body, const http::Headers& headers,
                                 std::chrono::milliseconds) override {
        std::lock_guard lock(mutex_);
        urls.push_back(url);
        bodies.push_back(body);
        last_headers = headers;
        if (replies_.empty()) throw TransportError("script exhausted");
        auto r = replies_.front();
        replies_.pop_front();
        if (r.status == 0) throw TransportError("connection reset");
        return r;
    }
    std::vector<std::string> urls;
    std::vector<std::string> bodies;
    http::Headers last_headers;

private:
    std::mutex mutex_;
    std::deque<http::HttpResponse> replies_;
};

struct SleepLog {
    std::vector<std::chrono::milliseconds> delays;
    http::Sleeper sleeper() {
        return [this](std::chrono::milliseconds d) { delays.push_back(d); };
    }
};

http::ChatEndpoint endpoint(std::string url = "http://host:1/v1") {
    http::ChatEndpoint e;
    e.url = std::move(url);
    e.model_name = "wire-model";
    e.api_key = "secret";
    e.retry.max_attempts = 4;
    e.retry.base_delay = 100ms;
    e.retry.max_delay = 1000ms;
    return e;
}

class Server {
public:
    Server() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~Server() {
        server_.stop();
        thread_.join();
    }
    httplib::Server& raw() { return server_; }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace

TEST_CASE("request validation") {
    auto r = request("t");
    CHECK_NOTHROW(r.validate());
    r.prompt_text.clear();
    CHECK_THROWS_AS(r.validate(), ValidationError);
    r = request("t");
    r.temperature = -1;
    CHECK_THROWS_AS(r.validate(), ValidationError);
    r = request("t");
    r.max_tokens = 0;
    CHECK_THROWS_AS(r.validate(), ValidationError);
}

TEST_CASE("mock scripts: tags, prompt hashes, failures and defaults") {
    const json script = {{"t1", "A"},
                         {llm::prompt_hash_key("hashed prompt"), "B"},
                         {"t3", {{"error", "overloaded"}, {"status", 503}}}};
    auto mock = llm::MockClient::from_json(script);
    CHECK(mock.complete(request("t1")).raw_text == "A");
    CHECK(mock.complete(request("other", "hashed prompt")).raw_text == "B");
    try {
        mock.complete(request("t3"));
        FAIL("no failure");
    } catch (const TransportError& e) {
        CHECK(e.last_status() == 503);
    }
    CHECK_THROWS_AS(mock.complete(request("unknown")), TransportError);
    auto with_default = llm::MockClient::from_json({{"*", "fallback"}, {"t1", "A"}});
    CHECK(with_default.complete(request("unknown")).raw_text == "fallback");
    CHECK(with_default.complete(request("t1")).raw_text == "A");
    CHECK_THROWS(llm::MockClient::from_json(json::array()));
}

TEST_CASE("recording captures replies for replay") {
    llm::MockClient inner;
    inner.set("a", "first");
    inner.set("b", "second");
    llm::RecordingClient rec(inner);
    rec.complete(request("a"));
    rec.complete(request("b"));
    auto replay = llm::MockClient::from_json(rec.script());
    CHECK(replay.complete(request("b")).raw_text == "second");
}

TEST_CASE("batch keeps order, isolates failures and bounds concurrency") {
    class Slow final : public llm::CompletionClient {
    public:
        std::atomic<int> in_flight{0}, peak{0};
        llm::CompletionResult complete(const llm::CompletionRequest& r) override {
            const int now = ++in_flight;
            int p = peak.load();
            while (now > p && !peak.compare_exchange_weak(p, now)) {
            }
            std::this_thread::sleep_for(5ms);
            --in_flight;
            if (r.request_tag == "t7") throw RetriesExhaustedError("nope", 503, 5);
            return {r.request_tag, "reply " + r.request_tag, 5ms, 1};
        }
    } slow;
    std::vector<llm::CompletionRequest> reqs;
    for (int i = 0; i < 24; ++i) reqs.push_back(request("t" + std::to_string(i)));
    const auto items = llm::complete_batch(slow, reqs, 3);
    REQUIRE(items.size() == 24);
    for (int i = 0; i < 24; ++i) {
        if (i == 7) {
            REQUIRE_FALSE(items[i].ok());
            CHECK(items[i].failure->kind == llm::FailureKind::retries_exhausted);
            CHECK(items[i].failure->last_status == 503);
            CHECK(items[i].failure->request_tag == "t7");
        } else {
            REQUIRE(items[i].ok());
            CHECK(items[i].result->raw_text == "reply t" + std::to_string(i));
        }
    }
    CHECK(slow.peak.load() <= 3);
    CHECK(slow.peak.load() >= 2);
    CHECK(llm::complete_batch(slow, std::vector<llm::CompletionRequest>{}, 3).empty());
}

TEST_CASE("retry policy delays") {
    http::RetryPolicy p;
    p.base_delay = 100ms;
    p.max_delay = 1000ms;
    std::mt19937_64 rng(1);
    for (int k = 1; k <= 8; ++k) {
        const long long d = std::min<long long>(1000, 100LL << (k - 1));
        for (int i = 0; i < 20; ++i) {
            const auto got = p.delay_for(k, rng).count();
            CHECK(got >= d / 2);
            CHECK(got <= d);
        }
    }
    p.jitter = false;
    CHECK(p.delay_for(3, rng) == 400ms);
    CHECK(p.delay_for(9, rng) == 1000ms);
    CHECK(http::is_retryable_status(429));
    CHECK(http::is_retryable_status(502));
    CHECK_FALSE(http::is_retryable_status(404));
}

TEST_CASE("chat wire format") {
    auto r = request("t", "hello");
    r.temperature = 0.0;
    r.max_tokens = 16;
    const auto body = http::chat_request_body(r, "wire");
    CHECK(body["model"] == "wire");
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"] == "hello");
    CHECK(body["temperature"] == 0.0);
    CHECK(body["max_tokens"] == 16);
    CHECK(http::parse_chat_response(chat_body("B")) == "B");
    CHECK(http::parse_chat_response(R"({"choices":[{"text":"legacy"}]})") == "legacy");
    CHECK_THROWS_AS(http::parse_chat_response("not json"), MalformedResponseError);
    CHECK_THROWS_AS(http::parse_chat_response(R"({"choices":[]})"), MalformedResponseError);
    CHECK(http::split_url("http://h:8/v1/chat") == std::pair<std::string, std::string>{"http://h:8", "/v1/chat"});
}

TEST_CASE("chat client retries transient failures and gives up on client errors") {
    {
        auto t = std::make_shared<ScriptedTransport>(
            std::deque<http::HttpResponse>{{429, ""}, {0, ""}, {503, ""}, {200, chat_body("A")}});
        SleepLog sleeps;
        http::ChatCompletionClient c(endpoint(), t, sleeps.sleeper());
        const auto res = c.complete(request("t"));
        CHECK(res.raw_text == "A");
        CHECK(res.attempt_count == 4);
        CHECK(sleeps.delays.size() == 3);
        CHECK(t->urls.front() == "http://host:1/v1/chat/completions");
        CHECK(json::parse(t->bodies.front())["model"] == "wire-model");
        const auto auth = t->last_headers.find("Authorization");
        REQUIRE(auth != t->last_headers.end());
        CHECK(auth->second == "Bearer secret");
    }
    {
        auto t = std::make_shared<ScriptedTransport>(std::deque<http::HttpResponse>(6, {500, "err"}));
        SleepLog sleeps;
        http::ChatCompletionClient c(endpoint(), t, sleeps.sleeper());
        try {
            c.complete(request("t"));
            FAIL("no error");
        } catch (const RetriesExhaustedError& e) {
            CHECK(e.attempts() == 4);
            CHECK(e.last_status() == 500);
        }
        CHECK(t->urls.size() == 4);
    }
    for (int status : {401, 403}) {
        auto t = std::make_shared<ScriptedTransport>(std::deque<http::HttpResponse>{{status, ""}, {200, chat_body("A")}});
        http::ChatCompletionClient c(endpoint(), t, SleepLog{}.sleeper());
        CHECK_THROWS_AS(c.complete(request("t")), AuthenticationError);
        CHECK(t->urls.size() == 1);
    }
    {
        auto t = std::make_shared<ScriptedTransport>(std::deque<http::HttpResponse>{{400, "bad"}});
        http::ChatCompletionClient c(endpoint(), t, SleepLog{}.sleeper());
        CHECK_THROWS_AS(c.complete(request("t")), ClientRequestError);
    }
    {
        auto t = std::make_shared<ScriptedTransport>(std::deque<http::HttpResponse>{{200, "{}"}});
        http::ChatCompletionClient c(endpoint(), t, SleepLog{}.sleeper());
        CHECK_THROWS_AS(c.complete(request("t")), MalformedResponseError);
    }
}

TEST_CASE("chat client against a local HTTP server") {
    Server server;
    std::atomic<int> calls{0};
    std::string seen_auth;
    std::mutex m;
    server.raw().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        if (++calls == 1) {
            res.status = 429;
            return;
        }
        {
            std::lock_guard lock(m);
            seen_auth = req.get_header_value("Authorization");
        }
        const auto body = json::parse(req.body);
        res.set_content(chat_body("echo " + body["messages"][0]["content"].get<std::string>()), "application/json");
    });
    server.raw().Post("/denied/chat/completions",
                      [](const httplib::Request&, httplib::Response& res) { res.status = 401; });

    SleepLog sleeps;
    http::ChatCompletionClient c(endpoint(server.url("/v1")), nullptr, sleeps.sleeper());
    const auto r = c.complete(request("t", "ping"));
    CHECK(r.raw_text == "echo ping");
    CHECK(r.attempt_count == 2);
    CHECK(seen_auth == "Bearer secret");

    http::ChatCompletionClient denied(endpoint(server.url("/denied")), nullptr, sleeps.sleeper());
    CHECK_THROWS_AS(denied.complete(request("t")), AuthenticationError);

    auto dead = endpoint("http://127.0.0.1:1/v1");
    dead.retry.max_attempts = 2;
    dead.timeout = 500ms;
    http::ChatCompletionClient unreachable(dead, nullptr, sleeps.sleeper());
    CHECK_THROWS_AS(unreachable.complete(request("t")), RetriesExhaustedError);
}

TEST_CASE("search client against a local HTTP server") {
    Server server;
    search::FixtureIndex index({{"d1", "third party ballots", 3, "u1"}, {"d2", "other things", 2, "u2"}});
    std::atomic<int> calls{0};
    server.raw().Post("/search", [&](const httplib::Request& req, httplib::Response& res) {
        if (++calls == 1) {
            res.status = 503;
            return;
        }
        res.set_content(index.handle(json::parse(req.body)).dump(), "application/json");
    });
    server.raw().Post("/bad", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"documents\": 7}", "application/json");
    });
    server.raw().Post("/forbidden", [](const httplib::Request&, httplib::Response& res) { res.status = 403; });

    search::SearchEndpoint ep;
    ep.url = server.url("/search");
    ep.retry.base_delay = 1ms;
    SleepLog sleeps;
    search::HttpSearchClient client(ep, nullptr, sleeps.sleeper());
    const auto r = client.search({{"third party"}, 4000, 10});
    REQUIRE(r.hits.size() == 1);
    CHECK(r.hits[0].doc_id == "d1");
    CHECK(r.matched == std::optional<std::size_t>(1));
    CHECK(sleeps.delays.size() == 1);

    ep.url = server.url("/bad");
    search::HttpSearchClient bad(ep, nullptr, sleeps.sleeper());
    CHECK_THROWS_AS(bad.search({{"x"}, 10, 10}), MalformedResponseError);
    ep.url = server.url("/forbidden");
    search::HttpSearchClient forbidden(ep, nullptr, sleeps.sleeper());
    CHECK_THROWS_AS(forbidden.search({{"x"}, 10, 10}), AuthenticationError);
}
