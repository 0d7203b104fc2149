#include "polalign/llm_client.hpp"

#include <atomic>
#include <thread>

#include "polalign/error.hpp"
#include "polalign/io.hpp"

namespace polalign::llm {

void CompletionRequest::validate() const {
    if (prompt_text.empty()) throw ValidationError("prompt_text must be non-empty", {}, "prompt_text");
    if (!(temperature >= 0.0)) throw ValidationError("temperature must be >= 0", {}, "temperature");
    if (max_tokens <= 0) throw ValidationError("max_tokens must be positive", {}, "max_tokens");
}

std::string_view to_string(FailureKind kind) {
    switch (kind) {
        case FailureKind::transport: return "transport";
        case FailureKind::retries_exhausted: return "retries_exhausted";
        case FailureKind::authentication: return "authentication";
        case FailureKind::client_request: return "client_request";
        case FailureKind::malformed_response: return "malformed_response";
        case FailureKind::script: return "script";
        case FailureKind::other: return "other";
    }
    return "other";
}

namespace {

CompletionFailure describe_current_exception(const CompletionRequest& request) {
    CompletionFailure f;
    f.request_tag = request.request_tag;
    try {
        throw;
    } catch (const RetriesExhaustedError& e) {
        f = {request.request_tag, FailureKind::retries_exhausted, e.what(), e.last_status(), e.attempts()};
    } catch (const AuthenticationError& e) {
        f = {request.request_tag, FailureKind::authentication, e.what(), e.last_status(), e.attempts()};
    } catch (const ClientRequestError& e) {
        f = {request.request_tag, FailureKind::client_request, e.what(), e.last_status(), e.attempts()};
    } catch (const MalformedResponseError& e) {
        f = {request.request_tag, FailureKind::malformed_response, e.what(), e.last_status(), e.attempts()};
    } catch (const TransportError& e) {
        f = {request.request_tag, FailureKind::transport, e.what(), e.last_status(), e.attempts()};
    } catch (const std::exception& e) {
        f = {request.request_tag, FailureKind::other, e.what(), 0, 0};
    }
    return f;
}

}  // namespace

std::vector<BatchItem> complete_batch(CompletionClient& client, std::span<const CompletionRequest> requests,
                                      std::size_t max_in_flight) {
    if (max_in_flight == 0) throw ValidationError("max_in_flight must be at least 1", {}, "max_in_flight");
    std::vector<BatchItem> out(requests.size());
    if (requests.empty()) return out;

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
            const auto& request = requests[i];
            try {
                request.validate();
                out[i].result = client.complete(request);
            } catch (...) {
                out[i].failure = describe_current_exception(request);
            }
        }
    };

    // Each worker holds at most one request, so the worker count bounds the
    // number in flight.
    const std::size_t workers = std::min(max_in_flight, requests.size());
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    return out;
}

std::string prompt_hash_key(std::string_view prompt_text) { return "prompt:" + hex64(fnv1a64(prompt_text)); }

MockClient::MockClient(std::map<std::string, Reply> script, std::optional<std::string> default_reply)
    : script_(std::move(script)), default_reply_(std::move(default_reply)) {}

MockClient MockClient::from_json(const nlohmann::json& script) {
    if (!script.is_object()) throw ParseError("mock script must be a JSON object");
    MockClient client;
    for (const auto& [key, value] : script.items()) {
        if (key == "*" && value.is_string()) {
            client.set_default(value.get<std::string>());
        } else if (value.is_string()) {
            client.set(key, value.get<std::string>());
        } else if (value.is_object() && value.contains("error")) {
            client.set_failure(key, value.at("error").get<std::string>(), value.value("status", 500));
        } else {
            throw ParseError("mock script entry '" + key + "' must be a string or {\"error\": ...}");
        }
    }
    return client;
}

MockClient MockClient::from_file(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

void MockClient::set(std::string key, std::string text) { script_[std::move(key)] = Reply{std::move(text), false, 0}; }

void MockClient::set_failure(std::string key, std::string message, int status) {
    script_[std::move(key)] = Reply{std::move(message), true, status};
}

CompletionResult MockClient::complete(const CompletionRequest& request) {
    request.validate();
    auto it = script_.find(request.request_tag);
    if (it == script_.end()) it = script_.find(prompt_hash_key(request.prompt_text));

    const Reply* reply = it == script_.end() ? nullptr : &it->second;
    if (!reply) {
        if (!default_reply_)
            throw TransportError("mock script has no reply for tag '" + request.request_tag + "'", 404);
        return {request.request_tag, *default_reply_, std::chrono::milliseconds{0}, 1};
    }
    if (reply->fails) throw TransportError("scripted failure: " + reply->text, reply->status);
    return {request.request_tag, reply->text, std::chrono::milliseconds{0}, 1};
}

CompletionResult RecordingClient::complete(const CompletionRequest& request) {
    CompletionResult result = inner_.complete(request);
    std::lock_guard lock(mutex_);
    recorded_[request.request_tag.empty() ? prompt_hash_key(request.prompt_text) : request.request_tag] =
        result.raw_text;
    return result;
}

nlohmann::json RecordingClient::script() const {
    std::lock_guard lock(mutex_);
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [key, text] : recorded_) out[key] = text;
    return out;
}

void RecordingClient::save(const std::filesystem::path& path) const { write_json_file(path, script()); }

}  // namespace polalign::llm
