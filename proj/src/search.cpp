#include "polalign/search.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <thread>

#include "polalign/error.hpp"
#include "polalign/io.hpp"

namespace polalign::search {

using nlohmann::json;

json to_json(const SearchQuery& query) {
    return {{"query", query.keywords}, {"max_words", query.max_words}, {"limit", query.limit}};
}

SearchQuery query_from_json(const json& body) {
    if (!body.is_object() || !body.contains("query") || !body["query"].is_array())
        throw ParseError("search request needs a 'query' array");
    SearchQuery q;
    for (const auto& k : body["query"]) {
        if (!k.is_string()) throw ParseError("search keywords must be strings");
        q.keywords.push_back(k.get<std::string>());
    }
    q.max_words = body.value("max_words", kDefaultWordLimit);
    q.limit = body.value("limit", kDefaultResultLimit);
    return q;
}

json to_json(const SearchHit& hit) {
    return {{"doc_id", hit.doc_id}, {"text", hit.text}, {"word_count", hit.word_count}, {"source_uri", hit.source_uri}};
}

SearchHit hit_from_json(const json& body) {
    if (!body.is_object()) throw MalformedResponseError("search hit is not an object", 200);
    try {
        SearchHit hit;
        hit.doc_id = body.at("doc_id").get<std::string>();
        hit.text = body.at("text").get<std::string>();
        hit.word_count = body.at("word_count").get<int>();
        if (const auto it = body.find("source_uri"); it != body.end() && it->is_string())
            hit.source_uri = it->get<std::string>();
        return hit;
    } catch (const json::exception& e) {
        throw MalformedResponseError(std::string("malformed search hit: ") + e.what(), 200);
    }
}

json to_json(const SearchResponse& response) {
    json docs = json::array();
    for (const auto& h : response.hits) docs.push_back(to_json(h));
    if (!response.matched) return docs;
    return {{"matched", *response.matched}, {"documents", std::move(docs)}};
}

SearchResponse response_from_json(const json& body) {
    SearchResponse out;
    const json* docs = &body;
    if (body.is_object()) {
        if (!body.contains("documents") || !body["documents"].is_array())
            throw MalformedResponseError("search response object lacks a 'documents' array", 200);
        docs = &body["documents"];
        if (const auto it = body.find("matched"); it != body.end()) {
            if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
                throw MalformedResponseError("search response 'matched' must be a non-negative integer", 200);
            out.matched = it->get<std::size_t>();
        }
    } else if (!body.is_array()) {
        throw MalformedResponseError("search response must be an array or an object", 200);
    }
    out.hits.reserve(docs->size());
    for (const auto& d : *docs) out.hits.push_back(hit_from_json(d));
    return out;
}

std::string_view to_string(MatchMode mode) { return mode == MatchMode::any ? "any" : "all"; }

MatchMode match_mode_from_string(std::string_view text) {
    if (text == "any" || text == "or") return MatchMode::any;
    if (text == "all" || text == "and") return MatchMode::all;
    throw ParseError("unknown match mode '" + std::string(text) + "'");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isalnum(c)) {
            current += static_cast<char>(std::tolower(c));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

// ---- FixtureIndex ------------------------------------------------------

FixtureIndex::FixtureIndex(std::vector<IndexedDocument> documents, MatchMode mode)
    : documents_(std::move(documents)), mode_(mode) {
    std::sort(documents_.begin(), documents_.end(),
              [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
    for (std::size_t i = 0; i + 1 < documents_.size(); ++i)
        if (documents_[i].doc_id == documents_[i + 1].doc_id)
            throw ValidationError("duplicate document id '" + documents_[i].doc_id + "' in index", {}, "doc_id");
    tokens_.reserve(documents_.size());
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        auto toks = tokenize(documents_[i].text);
        for (const auto& t : std::set<std::string>(toks.begin(), toks.end())) postings_[t].push_back(i);
        tokens_.push_back(std::move(toks));
    }
}

FixtureIndex FixtureIndex::from_json(const json& document, MatchMode mode) {
    const json* docs = &document;
    if (document.is_object()) {
        if (!document.contains("documents")) throw ParseError("index file lacks 'documents'");
        docs = &document["documents"];
    }
    if (!docs->is_array()) throw ParseError("index 'documents' must be an array");
    std::vector<IndexedDocument> out;
    out.reserve(docs->size());
    for (const auto& d : *docs) {
        try {
            IndexedDocument doc;
            doc.doc_id = d.at("doc_id").get<std::string>();
            doc.text = d.at("text").get<std::string>();
            doc.word_count = d.contains("word_count") ? d["word_count"].get<int>()
                                                      : static_cast<int>(tokenize(doc.text).size());
            doc.source_uri = d.value("source_uri", std::string());
            if (doc.text.empty()) throw ValidationError("document text is empty", {}, doc.doc_id);
            if (doc.word_count < 1) throw ValidationError("word_count must be positive", {}, doc.doc_id);
            out.push_back(std::move(doc));
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed index document: ") + e.what());
        }
    }
    return FixtureIndex(std::move(out), mode);
}

FixtureIndex FixtureIndex::load(const std::filesystem::path& path, MatchMode mode) {
    return from_json(read_json_file(path), mode);
}

json FixtureIndex::to_json() const {
    json docs = json::array();
    for (const auto& d : documents_)
        docs.push_back({{"doc_id", d.doc_id}, {"text", d.text}, {"word_count", d.word_count}, {"source_uri", d.source_uri}});
    return {{"documents", std::move(docs)}};
}

void FixtureIndex::save(const std::filesystem::path& path) const { write_text_file(path, to_json().dump() + "\n"); }

bool FixtureIndex::contains_phrase(std::size_t doc, const std::vector<std::string>& phrase) const {
    const auto& toks = tokens_[doc];
    if (phrase.empty() || phrase.size() > toks.size()) return false;
    for (std::size_t i = 0; i + phrase.size() <= toks.size(); ++i)
        if (std::equal(phrase.begin(), phrase.end(), toks.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    return false;
}

SearchResponse FixtureIndex::search(const SearchQuery& query) {
    std::vector<std::vector<std::string>> phrases;
    for (const auto& k : query.keywords)
        if (auto p = tokenize(k); !p.empty() && std::find(phrases.begin(), phrases.end(), p) == phrases.end())
            phrases.push_back(std::move(p));

    std::vector<std::size_t> matched_docs;
    if (!phrases.empty()) {
        std::vector<std::size_t> phrase_hits(documents_.size(), 0);
        for (const auto& phrase : phrases) {
            // Candidates: documents holding the phrase's rarest token.
            const std::vector<std::size_t>* best = nullptr;
            for (const auto& t : phrase) {
                const auto it = postings_.find(t);
                if (it == postings_.end()) {
                    best = nullptr;
                    break;
                }
                if (!best || it->second.size() < best->size()) best = &it->second;
            }
            if (!best) continue;
            for (std::size_t d : *best)
                if (contains_phrase(d, phrase)) ++phrase_hits[d];
        }
        for (std::size_t d = 0; d < documents_.size(); ++d) {
            const bool ok = mode_ == MatchMode::any ? phrase_hits[d] > 0 : phrase_hits[d] == phrases.size();
            if (ok) matched_docs.push_back(d);
        }
    }

    SearchResponse out;
    out.matched = matched_docs.size();
    for (std::size_t d : matched_docs) {
        if (query.limit > 0 && out.hits.size() >= static_cast<std::size_t>(query.limit)) break;
        const auto& doc = documents_[d];
        if (query.max_words > 0 && doc.word_count >= query.max_words) continue;
        out.hits.push_back({doc.doc_id, doc.text, doc.word_count, doc.source_uri});
    }
    return out;
}

json FixtureIndex::handle(const json& request_body) { return search::to_json(search(query_from_json(request_body))); }

// ---- HttpSearchClient --------------------------------------------------

HttpSearchClient::HttpSearchClient(SearchEndpoint endpoint, std::shared_ptr<http::HttpTransport> transport,
                                   http::Sleeper sleeper)
    : endpoint_(std::move(endpoint)),
      transport_(transport ? std::move(transport) : http::make_default_transport()),
      sleeper_(sleeper ? std::move(sleeper)
                       : http::Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      rng_(endpoint_.jitter_seed) {
    if (endpoint_.url.empty()) throw ValidationError("search endpoint URL is empty", {}, "url");
    if (endpoint_.retry.max_attempts < 1) throw ValidationError("max_attempts must be >= 1", {}, "retry.max_attempts");
}

SearchResponse HttpSearchClient::search(const SearchQuery& query) {
    const std::string body = to_json(query).dump();
    http::Headers headers{{"Content-Type", "application/json"}};
    if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

    int last_status = 0;
    std::string last_error;
    const int attempts = endpoint_.retry.max_attempts;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) {
            std::chrono::milliseconds delay;
            {
                std::lock_guard lock(rng_mutex_);
                delay = endpoint_.retry.delay_for(attempt - 1, rng_);
            }
            sleeper_(delay);
        }
        http::HttpResponse response;
        try {
            response = transport_->post_json(endpoint_.url, body, headers, endpoint_.timeout);
        } catch (const TransportError& e) {
            last_status = e.last_status();
            last_error = e.what();
            continue;
        }
        last_status = response.status;
        if (response.status >= 200 && response.status < 300) {
            json doc;
            try {
                doc = json::parse(response.body);
            } catch (const json::parse_error& e) {
                throw MalformedResponseError(std::string("search response is not JSON: ") + e.what(), response.status,
                                             attempt);
            }
            try {
                return response_from_json(doc);
            } catch (const MalformedResponseError& e) {
                throw MalformedResponseError(e.what(), response.status, attempt);
            }
        }
        if (response.status == 401 || response.status == 403)
            throw AuthenticationError("search endpoint rejected credentials (HTTP " + std::to_string(response.status) +
                                          ")",
                                      response.status, attempt);
        if (!http::is_retryable_status(response.status))
            throw ClientRequestError("search endpoint returned HTTP " + std::to_string(response.status) + ": " +
                                         response.body.substr(0, 200),
                                     response.status, attempt);
        last_error = "HTTP " + std::to_string(response.status);
    }
    throw RetriesExhaustedError("search gave up after " + std::to_string(attempts) + " attempts, last error: " +
                                    last_error,
                                last_status, attempts);
}

}  // namespace polalign::search
