#include "polalign/fixture_corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "polalign/error.hpp"
#include "polalign/io.hpp"
#include "polalign/stance.hpp"

namespace polalign::fixture {

using nlohmann::json;
namespace fs = std::filesystem;

RetrievalStatsTable RetrievalStatsTable::from_json(const json& document) {
    try {
        RetrievalStatsTable t;
        t.corpus_id = document.at("corpus_id").get<std::string>();
        t.word_limit = document.value("word_limit", search::kDefaultWordLimit);
        if (t.corpus_id.empty()) throw ValidationError("corpus_id is empty", {}, "corpus_id");
        if (t.word_limit < 2) throw ValidationError("word_limit must be at least 2", {}, "word_limit");
        std::set<std::string> seen;
        for (const auto& c : document.at("cases")) {
            CaseRetrievalStats s;
            s.docket_id = c.at("docket_id").get<std::string>();
            s.fetched = c.at("fetched").get<std::size_t>();
            s.avg_length_fetched = c.value("avg_length_fetched", 1000.0);
            s.mean_stance = c.at("mean_stance").get<double>();
            s.matched = c.at("matched").get<std::size_t>();
            s.avg_length_matched = c.value("avg_length_matched", s.avg_length_fetched);
            if (!seen.insert(s.docket_id).second) throw ValidationError("duplicate case", s.docket_id, "docket_id");
            if (s.matched < s.fetched)
                throw ValidationError("matched count below fetched count", s.docket_id, "matched");
            if (s.fetched > 0 && !(s.mean_stance >= 1.0 && s.mean_stance <= 5.0))
                throw ValidationError("mean_stance outside [1, 5]", s.docket_id, "mean_stance");
            t.cases.push_back(std::move(s));
        }
        return t;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed retrieval stats: ") + e.what());
    }
}

RetrievalStatsTable RetrievalStatsTable::load(const fs::path& path) { return from_json(read_json_file(path)); }

json FixtureCorpus::planted_json() const {
    json cases = json::array();
    for (const auto& p : planted) {
        json c = {{"docket_id", p.docket_id}, {"phrase", p.phrase},       {"fetched", p.fetched},
                  {"matched", p.matched},     {"score_sum", p.score_sum}, {"mean", nullptr}};
        if (p.mean) c["mean"] = *p.mean;
        cases.push_back(std::move(c));
    }
    return {{"corpus_id", corpus_id}, {"word_limit", word_limit}, {"seed", seed}, {"cases", std::move(cases)}};
}

json FixtureCorpus::judge_script_json() const {
    json out = json::object();
    for (const auto& [tag, text] : judge_script) out[tag] = text;
    return out;
}

namespace {

constexpr std::array<const char*, 48> kFiller = {
    "report",   "article",  "editorial", "column",   "letter",  "opinion",   "commentary", "analysis",
    "weekly",   "today",    "morning",   "evening",  "reader",  "writer",    "argument",   "question",
    "response", "debate",   "view",      "outlook",  "summary", "overview",  "section",    "page",
    "detail",   "context",  "history",   "record",   "notes",   "statement", "coverage",   "journal",
    "story",    "account",  "review",    "feature",  "essay",   "post",      "thread",     "discussion",
    "comments", "followup", "headline",  "briefing", "update",  "digest",    "bulletin",   "dispatch"};

bool contains_sequence(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
}

// m integers in [lo, hi] summing exactly to `total` (clamped to the feasible
// range), spread around the mean by pairwise transfers.
std::vector<long long> spread_values(std::size_t m, long long lo, long long hi, long long total, long long spread,
                                     std::mt19937_64& rng) {
    std::vector<long long> v(m);
    if (m == 0) return v;
    const auto count = static_cast<long long>(m);
    total = std::clamp(total, lo * count, hi * count);
    const long long base = total / count;
    const long long extra = total % count;
    for (std::size_t i = 0; i < m; ++i) v[i] = base + (static_cast<long long>(i) < extra ? 1 : 0);
    for (std::size_t i = 0; i + 1 < m; i += 2) {
        const long long room = std::min({v[i] - lo, hi - v[i + 1], spread});
        if (room <= 0) continue;
        const auto d = static_cast<long long>(bounded(rng, static_cast<std::uint64_t>(room) + 1));
        v[i] -= d;
        v[i + 1] += d;
    }
    shuffle(v, rng);
    return v;
}

std::string judge_reply(long long score, std::uint64_t pick) {
    char buf[96];
    switch (pick % 5) {
        case 0: std::snprintf(buf, sizeof buf, "%lld", score); break;
        case 1: std::snprintf(buf, sizeof buf, "%lld.", score); break;
        case 2: std::snprintf(buf, sizeof buf, "Score: %lld", score); break;
        case 3: std::snprintf(buf, sizeof buf, "I would rate this document a %lld out of 5.", score); break;
        default: std::snprintf(buf, sizeof buf, "%lld (based on the document's framing)", score); break;
    }
    return buf;
}

}  // namespace

FixtureCorpus generate_fixture_corpus(const RetrievalStatsTable& stats, const SurveyDataset& dataset,
                                      std::uint64_t seed) {
    std::vector<const SurveyCase*> cases;
    for (const auto& s : stats.cases) cases.push_back(&dataset.find_case(s.docket_id));

    std::set<std::string> keyword_tokens;
    for (const auto& c : dataset.cases)
        for (const auto& k : c.keywords)
            for (auto& t : search::tokenize(k)) keyword_tokens.insert(std::move(t));
    std::vector<std::string> filler;
    for (const char* w : kFiller)
        if (!keyword_tokens.count(w)) filler.emplace_back(w);
    if (filler.size() < 8) throw ValidationError("keyword vocabulary leaves too few filler words");

    FixtureCorpus out;
    out.corpus_id = stats.corpus_id;
    out.word_limit = stats.word_limit;
    out.seed = seed;
    std::mt19937_64 rng(seed);

    for (std::size_t ci = 0; ci < stats.cases.size(); ++ci) {
        const auto& st = stats.cases[ci];
        const SurveyCase& sc = *cases[ci];

        // A keyword of this case that no other case's query can match.
        std::string phrase;
        for (const auto& k : sc.keywords) {
            const auto toks = search::tokenize(k);
            if (toks.empty()) continue;
            bool clash = false;
            for (const auto& other : dataset.cases) {
                if (other.docket_id == sc.docket_id) continue;
                for (const auto& ok : other.keywords)
                    if (contains_sequence(toks, search::tokenize(ok))) clash = true;
            }
            if (!clash) {
                phrase = k;
                break;
            }
        }
        if (phrase.empty())
            throw ValidationError("every keyword of the case also matches another case", sc.docket_id, "keywords");

        const std::size_t over = st.matched - st.fetched;
        const long long limit = stats.word_limit;
        const auto fetched_lengths = spread_values(
            st.fetched, 50, limit - 1, std::llround(st.avg_length_fetched * static_cast<double>(st.fetched)),
            std::max<long long>(1, std::llround(st.avg_length_fetched / 2)), rng);
        double over_avg = static_cast<double>(limit);
        if (over > 0) {
            const double total = st.avg_length_matched * static_cast<double>(st.matched) -
                                 st.avg_length_fetched * static_cast<double>(st.fetched);
            over_avg = std::max(static_cast<double>(limit), total / static_cast<double>(over));
        }
        const auto over_lengths = spread_values(over, limit, std::max<long long>(limit, std::llround(over_avg * 4)),
                                                std::llround(over_avg * static_cast<double>(over)),
                                                std::llround(over_avg / 2), rng);
        const long long score_target = std::llround(st.mean_stance * static_cast<double>(st.fetched));
        const auto scores = spread_values(st.fetched, 1, 5, score_target, 2, rng);

        PlantedCase planted;
        planted.docket_id = sc.docket_id;
        planted.phrase = phrase;
        planted.fetched = st.fetched;
        planted.matched = st.matched;
        for (long long s : scores) planted.score_sum += s;
        if (st.fetched > 0) planted.mean = static_cast<double>(planted.score_sum) / static_cast<double>(st.fetched);

        // Interleave fetched and over-limit documents so id order is mixed.
        std::vector<char> is_fetched(st.matched, 0);
        std::fill(is_fetched.begin(), is_fetched.begin() + static_cast<std::ptrdiff_t>(st.fetched), 1);
        shuffle(is_fetched, rng);

        std::size_t fi = 0, oi = 0;
        for (std::size_t d = 0; d < st.matched; ++d) {
            char id[64];
            std::snprintf(id, sizeof id, "%s-%s-%06zu", stats.corpus_id.c_str(), sc.docket_id.c_str(), d + 1);
            search::IndexedDocument doc;
            doc.doc_id = id;
            std::string text;
            const std::size_t before = 3 + bounded(rng, 5);
            const std::size_t after = 3 + bounded(rng, 5);
            for (std::size_t w = 0; w < before; ++w) text += filler[bounded(rng, filler.size())] + " ";
            text += phrase;
            for (std::size_t w = 0; w < after; ++w) text += " " + filler[bounded(rng, filler.size())];
            text += ".";
            doc.text = std::move(text);
            doc.source_uri = "fixture://" + stats.corpus_id + "/" + doc.doc_id;
            if (is_fetched[d]) {
                doc.word_count = static_cast<int>(fetched_lengths[fi]);
                out.judge_script[stance::judge_request_tag(stats.corpus_id, sc.docket_id, doc.doc_id)] =
                    judge_reply(scores[fi], rng());
                ++fi;
            } else {
                doc.word_count = static_cast<int>(over_lengths[oi++]);
            }
            out.documents.push_back(std::move(doc));
        }
        out.planted.push_back(std::move(planted));
    }
    return out;
}

json planted_model_script(const SurveyDataset& dataset, const probe::PromptTemplateSet& templates,
                          const std::map<std::string, int>& pro_counts, int samples_per_variant, std::uint64_t seed) {
    if (samples_per_variant < 1) throw ValidationError("samples_per_variant must be >= 1", {}, "samples_per_variant");
    const int total = static_cast<int>(probe::kVariantsPerCase) * samples_per_variant;
    std::mt19937_64 rng(seed);
    json script = json::object();
    for (const auto& [docket, pro] : pro_counts) {
        const SurveyCase& c = dataset.find_case(docket);
        if (pro < 0 || pro > total)
            throw ValidationError("planted pro count outside [0, " + std::to_string(total) + "]", docket, "pro_count");
        std::vector<char> is_pro(static_cast<std::size_t>(total), 0);
        std::fill(is_pro.begin(), is_pro.begin() + pro, 1);
        shuffle(is_pro, rng);
        std::size_t k = 0;
        for (const auto& v : probe::render_prompts(c, templates)) {
            for (int s = 1; s <= samples_per_variant; ++s, ++k) {
                const auto choice = is_pro[k] ? probe::MappedChoice::pro : probe::MappedChoice::opp;
                std::string reply = v.label_for(choice);
                // Normalized spellings of short labels: "A)", "YES".
                if (reply.size() <= 3 && bounded(rng, 3) == 0) {
                    if (bounded(rng, 2) == 0) {
                        reply += ")";
                    } else {
                        for (char& ch : reply) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
                    }
                }
                script[probe::request_tag(docket, v.variant_id(), s)] = reply;
            }
        }
    }
    return script;
}

std::map<std::string, int> pro_counts_for(const PreferenceDistribution& distribution, int samples_per_variant) {
    const double total = static_cast<double>(probe::kVariantsPerCase) * samples_per_variant;
    std::map<std::string, int> out;
    for (const auto& row : distribution.rows())
        if (row.present()) out[row.docket_id] = static_cast<int>(std::lround(*row.p_pro * total));
    return out;
}

void write_fixture_corpus(const FixtureCorpus& corpus, const fs::path& dir) {
    search::FixtureIndex index(corpus.documents);
    index.save(dir / "index.json");
    write_json_file(dir / "judge_script.json", corpus.judge_script_json());
    write_json_file(dir / "planted.json", corpus.planted_json());
}

}  // namespace polalign::fixture
