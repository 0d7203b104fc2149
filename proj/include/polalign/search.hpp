#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polalign/http_client.hpp"

namespace polalign::search {

inline constexpr int kDefaultWordLimit = 4000;
inline constexpr int kDefaultResultLimit = 10000;

/// Wire request: {"query": [keywords], "max_words": int, "limit": int}.
struct SearchQuery {
    std::vector<std::string> keywords;
    int max_words = kDefaultWordLimit;
    int limit = kDefaultResultLimit;
};

/// Wire hit: {"doc_id", "text", "word_count", "source_uri"}.
struct SearchHit {
    std::string doc_id;
    std::string text;
    int word_count = 0;
    std::string source_uri;

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Either a bare array of hits, or {"matched": N, "documents": [...]} where
/// `matched` counts every matching document before the word filter.
struct SearchResponse {
    std::vector<SearchHit> hits;
    std::optional<std::size_t> matched;
};

nlohmann::json to_json(const SearchQuery& query);
SearchQuery query_from_json(const nlohmann::json& body);
nlohmann::json to_json(const SearchHit& hit);
SearchHit hit_from_json(const nlohmann::json& body);
nlohmann::json to_json(const SearchResponse& response);
/// Accepts both response shapes. Throws MalformedResponseError.
SearchResponse response_from_json(const nlohmann::json& body);

class SearchClient {
public:
    virtual ~SearchClient() = default;
    /// Throws TransportError (or a subclass) on failure.
    virtual SearchResponse search(const SearchQuery& query) = 0;
};

enum class MatchMode { any, all };

std::string_view to_string(MatchMode mode);
MatchMode match_mode_from_string(std::string_view text);

/// Lower-case ASCII alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

struct IndexedDocument {
    std::string doc_id;
    std::string text;
    /// Declared length; when absent from the source file the token count of
    /// `text` is used.
    int word_count = 0;
    std::string source_uri;
};

/// In-memory inverted index speaking the search protocol. Each keyword is a
/// phrase: its tokens must appear contiguously. `any` matches a document
/// containing at least one keyword phrase, `all` requires every phrase.
/// Hits are ordered by doc_id.
class FixtureIndex final : public SearchClient {
public:
    FixtureIndex() = default;
    explicit FixtureIndex(std::vector<IndexedDocument> documents, MatchMode mode = MatchMode::any);

    static FixtureIndex from_json(const nlohmann::json& document, MatchMode mode = MatchMode::any);
    static FixtureIndex load(const std::filesystem::path& path, MatchMode mode = MatchMode::any);
    nlohmann::json to_json() const;
    void save(const std::filesystem::path& path) const;

    SearchResponse search(const SearchQuery& query) override;
    /// Request body in, response body out; for serving the index over HTTP.
    nlohmann::json handle(const nlohmann::json& request_body);

    std::size_t size() const noexcept { return documents_.size(); }
    const std::vector<IndexedDocument>& documents() const noexcept { return documents_; }
    MatchMode mode() const noexcept { return mode_; }

private:
    bool contains_phrase(std::size_t doc, const std::vector<std::string>& phrase) const;

    std::vector<IndexedDocument> documents_;
    std::vector<std::vector<std::string>> tokens_;
    std::map<std::string, std::vector<std::size_t>, std::less<>> postings_;
    MatchMode mode_ = MatchMode::any;
};

struct SearchEndpoint {
    std::string url;
    /// Sent as a bearer token when non-empty.
    std::string api_key;
    std::chrono::milliseconds timeout{60000};
    http::RetryPolicy retry;
    std::uint64_t jitter_seed = 0x5eed;
};

/// Search over HTTP with the same retry policy as the chat client.
class HttpSearchClient final : public SearchClient {
public:
    explicit HttpSearchClient(SearchEndpoint endpoint, std::shared_ptr<http::HttpTransport> transport = nullptr,
                              http::Sleeper sleeper = nullptr);

    SearchResponse search(const SearchQuery& query) override;

private:
    SearchEndpoint endpoint_;
    std::shared_ptr<http::HttpTransport> transport_;
    http::Sleeper sleeper_;
    std::mt19937_64 rng_;
    std::mutex rng_mutex_;
};

}  // namespace polalign::search
