#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>

#include <json.hpp>

#include "polalign/llm_client.hpp"

namespace polalign::http {

struct HttpResponse {
    int status = 0;
    std::string body;
};

using Headers = std::multimap<std::string, std::string>;

/// POST transport. Connection failures and timeouts throw TransportError
/// with last_status 0; any HTTP status is returned, not thrown.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post_json(const std::string& url, const std::string& body, const Headers& headers,
                                   std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport. A fresh connection per call keeps it
/// thread-safe. https URLs require a build with OpenSSL.
std::shared_ptr<HttpTransport> make_default_transport();

/// Splits "http://host:port/path" into ("http://host:port", "/path").
std::pair<std::string, std::string> split_url(const std::string& url);

/// Exponential backoff with equal jitter:
/// delay_k = d/2 + U[0, d/2], d = min(cap, base * multiplier^(k-1)).
struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    std::chrono::milliseconds max_delay{30000};
    double multiplier = 2.0;
    bool jitter = true;

    /// Delay before retry number `retry` (1-based).
    std::chrono::milliseconds delay_for(int retry, std::mt19937_64& rng) const;
};

/// 429 and 5xx.
bool is_retryable_status(int status);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct ChatEndpoint {
    /// Base URL ("http://localhost:8000/v1") or the full ".../chat/completions" URL.
    std::string url;
    /// Model name sent on the wire; when empty the request's model_id is sent.
    std::string model_name;
    /// Sent as a bearer token when non-empty. Read from the environment by the
    /// caller, never from configuration files.
    std::string api_key;
    std::chrono::milliseconds timeout{120000};
    RetryPolicy retry;
    std::uint64_t jitter_seed = 0x5eed;
};

/// OpenAI-compatible chat-completion request body.
nlohmann::json chat_request_body(const llm::CompletionRequest& request, const std::string& model_name);

/// Extracts choices[0].message.content (or choices[0].text); throws
/// MalformedResponseError otherwise.
std::string parse_chat_response(const std::string& body);

/// Chat-completion client with retry on 429/5xx/timeouts. 401/403 raise
/// AuthenticationError and other 4xx raise ClientRequestError, both without
/// retrying. Exhausting the attempt budget raises RetriesExhaustedError.
class ChatCompletionClient final : public llm::CompletionClient {
public:
    explicit ChatCompletionClient(ChatEndpoint endpoint, std::shared_ptr<HttpTransport> transport = nullptr,
                                  Sleeper sleeper = nullptr);

    llm::CompletionResult complete(const llm::CompletionRequest& request) override;

    const ChatEndpoint& endpoint() const noexcept { return endpoint_; }

private:
    std::chrono::milliseconds next_delay(int retry);

    ChatEndpoint endpoint_;
    std::string post_url_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleeper_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
};

}  // namespace polalign::http
