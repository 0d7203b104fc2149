#include "polalign/http_client.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "polalign/error.hpp"

namespace polalign::http {

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("URL must include a scheme: '" + url + "'", {}, "url");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::chrono::milliseconds RetryPolicy::delay_for(int retry, std::mt19937_64& rng) const {
    const double base = static_cast<double>(base_delay.count());
    const double cap = static_cast<double>(max_delay.count());
    const double d = std::min(cap, base * std::pow(multiplier, std::max(0, retry - 1)));
    if (!jitter) return std::chrono::milliseconds(static_cast<long long>(d));
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::chrono::milliseconds(static_cast<long long>(d / 2.0 + u * d / 2.0));
}

bool is_retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

nlohmann::json chat_request_body(const llm::CompletionRequest& request, const std::string& model_name) {
    return {{"model", model_name.empty() ? request.model_id : model_name},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt_text}}})},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
}

std::string parse_chat_response(const std::string& body) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedResponseError(std::string("response is not JSON: ") + e.what(), 200);
    }
    const auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty())
        throw MalformedResponseError("response has no choices", 200);
    const auto& first = (*choices)[0];
    if (first.contains("message") && first["message"].is_object()) {
        const auto& content = first["message"].value("content", nlohmann::json());
        if (content.is_string()) return content.get<std::string>();
    }
    if (first.contains("text") && first["text"].is_string()) return first["text"].get<std::string>();
    throw MalformedResponseError("choices[0] has no message content", 200);
}

ChatCompletionClient::ChatCompletionClient(ChatEndpoint endpoint, std::shared_ptr<HttpTransport> transport,
                                           Sleeper sleeper)
    : endpoint_(std::move(endpoint)),
      transport_(transport ? std::move(transport) : make_default_transport()),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      rng_(endpoint_.jitter_seed) {
    if (endpoint_.url.empty()) throw ValidationError("endpoint URL is empty", {}, "url");
    if (endpoint_.retry.max_attempts < 1) throw ValidationError("max_attempts must be >= 1", {}, "retry.max_attempts");
    post_url_ = endpoint_.url;
    const std::string suffix = "/chat/completions";
    if (post_url_.size() < suffix.size() || post_url_.compare(post_url_.size() - suffix.size(), suffix.size(), suffix) != 0) {
        while (!post_url_.empty() && post_url_.back() == '/') post_url_.pop_back();
        post_url_ += suffix;
    }
}

std::chrono::milliseconds ChatCompletionClient::next_delay(int retry) {
    std::lock_guard lock(rng_mutex_);
    return endpoint_.retry.delay_for(retry, rng_);
}

llm::CompletionResult ChatCompletionClient::complete(const llm::CompletionRequest& request) {
    request.validate();
    const std::string body = chat_request_body(request, endpoint_.model_name).dump();
    Headers headers{{"Content-Type", "application/json"}};
    if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

    const auto started = std::chrono::steady_clock::now();
    int last_status = 0;
    std::string last_error;
    const int attempts = endpoint_.retry.max_attempts;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) sleeper_(next_delay(attempt - 1));
        HttpResponse response;
        try {
            response = transport_->post_json(post_url_, body, headers, endpoint_.timeout);
        } catch (const TransportError& e) {
            last_status = e.last_status();
            last_error = e.what();
            continue;
        }
        last_status = response.status;
        if (response.status >= 200 && response.status < 300) {
            try {
                std::string text = parse_chat_response(response.body);
                const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - started);
                return {request.request_tag, std::move(text), latency, attempt};
            } catch (const MalformedResponseError& e) {
                throw MalformedResponseError(e.what(), response.status, attempt);
            }
        }
        if (response.status == 401 || response.status == 403)
            throw AuthenticationError("endpoint rejected credentials (HTTP " + std::to_string(response.status) + ")",
                                      response.status, attempt);
        if (!is_retryable_status(response.status))
            throw ClientRequestError("endpoint returned HTTP " + std::to_string(response.status) + ": " +
                                         response.body.substr(0, 200),
                                     response.status, attempt);
        last_error = "HTTP " + std::to_string(response.status);
    }
    throw RetriesExhaustedError("gave up after " + std::to_string(attempts) + " attempts, last error: " + last_error,
                                last_status, attempts);
}

}  // namespace polalign::http
