#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace polalign::llm {

inline constexpr std::size_t kDefaultMaxInFlight = 4;

struct CompletionRequest {
    std::string model_id;
    std::string prompt_text;
    double temperature = 1.0;
    int max_tokens = 64;
    /// Caller-supplied correlation id; mock scripts are keyed by it.
    std::string request_tag;

    /// Throws ValidationError on empty prompt, negative temperature or
    /// non-positive max_tokens.
    void validate() const;
};

struct CompletionResult {
    std::string request_tag;
    std::string raw_text;
    std::chrono::milliseconds latency{0};
    int attempt_count = 1;
};

enum class FailureKind { transport, retries_exhausted, authentication, client_request, malformed_response, script, other };

std::string_view to_string(FailureKind kind);

struct CompletionFailure {
    std::string request_tag;
    FailureKind kind = FailureKind::other;
    std::string message;
    int last_status = 0;
    int attempt_count = 0;
};

/// Exactly one of result / failure is set.
struct BatchItem {
    std::optional<CompletionResult> result;
    std::optional<CompletionFailure> failure;

    bool ok() const noexcept { return result.has_value(); }
};

/// Anything that turns a prompt into text. Implementations must be safe to
/// call concurrently.
class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    /// Throws TransportError (or a subclass) / ValidationError on failure.
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

/// Runs every request through `client` with at most `max_in_flight`
/// outstanding at once. Output is aligned with input; a failing item is
/// reported in place and does not abort the batch.
std::vector<BatchItem> complete_batch(CompletionClient& client, std::span<const CompletionRequest> requests,
                                      std::size_t max_in_flight = kDefaultMaxInFlight);

/// Fallback mock-script key for requests whose tag is not scripted.
std::string prompt_hash_key(std::string_view prompt_text);

/// Scripted replies for offline runs. A script is a JSON object mapping a
/// request tag (or "prompt:<fnv1a-64 hex>") to either the reply text or
/// {"error": "...", "status": N} to simulate a failure. The key "*" sets a
/// reply for every unscripted request.
class MockClient final : public CompletionClient {
public:
    struct Reply {
        std::string text;
        bool fails = false;
        int status = 0;
    };

    MockClient() = default;
    explicit MockClient(std::map<std::string, Reply> script, std::optional<std::string> default_reply = std::nullopt);

    static MockClient from_json(const nlohmann::json& script);
    static MockClient from_file(const std::filesystem::path& path);

    void set(std::string key, std::string text);
    void set_failure(std::string key, std::string message, int status = 500);
    void set_default(std::string text) { default_reply_ = std::move(text); }

    CompletionResult complete(const CompletionRequest& request) override;

private:
    std::map<std::string, Reply> script_;
    std::optional<std::string> default_reply_;
};

/// Wraps a live client and captures every successful reply into a mock
/// script keyed by request tag, so the run can be replayed offline.
class RecordingClient final : public CompletionClient {
public:
    explicit RecordingClient(CompletionClient& inner) : inner_(inner) {}

    CompletionResult complete(const CompletionRequest& request) override;

    nlohmann::json script() const;
    void save(const std::filesystem::path& path) const;

private:
    CompletionClient& inner_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> recorded_;
};

}  // namespace polalign::llm
