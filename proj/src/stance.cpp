#include "polalign/stance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "polalign/error.hpp"

#ifndef POLALIGN_ASSET_DIR
#define POLALIGN_ASSET_DIR "assets"
#endif

namespace polalign::stance {

using nlohmann::json;
namespace fs = std::filesystem;

RetrievalResult retrieve_documents(const SurveyCase& survey_case, const std::string& corpus_id,
                                   search::SearchClient& client, int word_limit, int result_limit) {
    if (survey_case.keywords.empty())
        throw ValidationError("case has no keywords", survey_case.docket_id, "keywords");
    if (word_limit < 1) throw ValidationError("word_limit must be positive", survey_case.docket_id, "word_limit");
    if (result_limit < 1) throw ValidationError("result limit must be positive", survey_case.docket_id, "limit");

    search::SearchQuery query{survey_case.keywords, word_limit, result_limit};
    const auto response = client.search(query);

    RetrievalResult out;
    out.matched = response.matched;
    out.returned = response.hits.size();
    std::set<std::string> seen;
    for (const auto& hit : response.hits) {
        if (hit.word_count >= word_limit || hit.word_count < 1) {
            ++out.over_limit;
            continue;
        }
        if (hit.text.empty()) {
            ++out.empty_text;
            continue;
        }
        if (!seen.insert(hit.doc_id).second) {
            ++out.duplicates;
            continue;
        }
        out.documents.push_back({hit.doc_id, survey_case.docket_id, corpus_id, hit.text, hit.word_count, hit.source_uri});
    }
    return out;
}

std::string_view to_string(StanceStatus status) {
    switch (status) {
        case StanceStatus::scored: return "scored";
        case StanceStatus::not_related: return "not_related";
        case StanceStatus::parse_failure: return "parse_failure";
        case StanceStatus::transport_error: return "transport_error";
    }
    return "parse_failure";
}

StanceStatus stance_status_from_string(std::string_view text) {
    if (text == "scored") return StanceStatus::scored;
    if (text == "not_related") return StanceStatus::not_related;
    if (text == "parse_failure") return StanceStatus::parse_failure;
    if (text == "transport_error") return StanceStatus::transport_error;
    throw ParseError("unknown stance status '" + std::string(text) + "'");
}

static bool is_digit(char c) { return c >= '0' && c <= '9'; }

JudgeParse parse_judge_output(std::string_view text) {
    std::string lowered(text);
    for (char& c : lowered)
        if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    // Tolerate any run of whitespace between the two words.
    for (std::size_t pos = lowered.find("not"); pos != std::string::npos; pos = lowered.find("not", pos + 1)) {
        std::size_t i = pos + 3;
        if (i >= lowered.size() || !std::isspace(static_cast<unsigned char>(lowered[i]))) continue;
        while (i < lowered.size() && std::isspace(static_cast<unsigned char>(lowered[i]))) ++i;
        if (lowered.compare(i, 7, "related") == 0) return {StanceStatus::not_related, 0};
    }

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c < '1' || c > '5') continue;
        const bool digit_before = i > 0 && (is_digit(text[i - 1]) || text[i - 1] == '.');
        const bool digit_after = i + 1 < text.size() && (is_digit(text[i + 1]) ||
                                                         (text[i + 1] == '.' && i + 2 < text.size() && is_digit(text[i + 2])));
        if (digit_before || digit_after) continue;
        return {StanceStatus::scored, c - '0'};
    }
    return {StanceStatus::parse_failure, 0};
}

StanceTemplate StanceTemplate::load(const fs::path& path) {
    StanceTemplate t{read_text_file(path)};
    if (t.text.find("{document}") == std::string::npos)
        throw ValidationError("stance template lacks a {document} placeholder", {}, "template");
    return t;
}

StanceTemplate StanceTemplate::bundled() {
    fs::path dir = POLALIGN_ASSET_DIR;
    if (const char* env = std::getenv("POLALIGN_ASSET_DIR"); env && *env) dir = env;
    return load(dir / "templates" / "stance_prompt.txt");
}

std::string StanceTemplate::render(const SurveyCase& survey_case, const RetrievedDocument& document) const {
    return fill_placeholders(text, {{"case_name", survey_case.case_name},
                                    {"docket", survey_case.docket_id},
                                    {"question", survey_case.question_text},
                                    {"decision", survey_case.pro_label()},
                                    {"document", document.text}});
}

std::string judge_request_tag(std::string_view corpus_id, std::string_view docket_id, std::string_view doc_id) {
    return "stance/" + std::string(corpus_id) + "/" + std::string(docket_id) + "/" + std::string(doc_id);
}

llm::CompletionRequest judge_request(const RetrievedDocument& document, const SurveyCase& survey_case,
                                     const std::string& judge_model_id, const StanceTemplate& tmpl) {
    if (document.docket_id != survey_case.docket_id)
        throw ValidationError("document '" + document.doc_id + "' belongs to another case", survey_case.docket_id);
    llm::CompletionRequest r;
    r.model_id = judge_model_id;
    r.prompt_text = tmpl.render(survey_case, document);
    r.temperature = kJudgeTemperature;
    r.max_tokens = kJudgeMaxTokens;
    r.request_tag = judge_request_tag(document.corpus_id, document.docket_id, document.doc_id);
    return r;
}

static StanceRecord make_record(const RetrievedDocument& document, const std::string& judge_model_id,
                                const llm::BatchItem& item) {
    StanceRecord rec;
    rec.doc_id = document.doc_id;
    rec.docket_id = document.docket_id;
    rec.corpus_id = document.corpus_id;
    rec.judge_model_id = judge_model_id;
    if (item.ok()) {
        rec.raw_judge_text = item.result->raw_text;
        const auto parsed = parse_judge_output(rec.raw_judge_text);
        rec.status = parsed.status;
        rec.score = parsed.score;
    } else {
        rec.status = StanceStatus::transport_error;
        rec.error = std::string(llm::to_string(item.failure->kind)) + ": " + item.failure->message;
    }
    return rec;
}

std::vector<StanceRecord> score_documents(std::span<const RetrievedDocument> documents, const SurveyCase& survey_case,
                                          llm::CompletionClient& judge, const std::string& judge_model_id,
                                          const StanceTemplate& tmpl, std::size_t max_in_flight) {
    std::vector<llm::CompletionRequest> requests;
    requests.reserve(documents.size());
    for (const auto& d : documents) requests.push_back(judge_request(d, survey_case, judge_model_id, tmpl));
    const auto items = llm::complete_batch(judge, requests, max_in_flight);
    std::vector<StanceRecord> out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) out.push_back(make_record(documents[i], judge_model_id, items[i]));
    return out;
}

StanceRecord score_stance(const RetrievedDocument& document, const SurveyCase& survey_case,
                          llm::CompletionClient& judge, const std::string& judge_model_id,
                          const StanceTemplate& tmpl) {
    return score_documents(std::span<const RetrievedDocument>(&document, 1), survey_case, judge, judge_model_id, tmpl,
                           1)
        .front();
}

double likert_to_probability(double mean_score) {
    if (!(mean_score >= 1.0 && mean_score <= 5.0))
        throw DomainError("Likert mean must lie in [1, 5], got " + format_double(mean_score));
    return (mean_score - 1.0) / 4.0;
}

// ---- Bootstrap ---------------------------------------------------------

// Unbiased draw in [0, bound) by rejection; independent of the standard
// library's distribution implementations.
static std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw InsufficientDataError("percentile of an empty sample");
    if (!(pct >= 0.0 && pct <= 100.0)) throw DomainError("percentile must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * pct / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

BootstrapResult bootstrap_ci(std::span<const double> scores, const BootstrapOptions& options) {
    if (scores.empty()) throw InsufficientDataError("bootstrap needs at least one score");
    if (options.resamples < 1) throw ValidationError("resamples must be positive", {}, "resamples");
    if (!(options.fraction > 0.0 && options.fraction <= 1.0))
        throw ValidationError("fraction must lie in (0, 1]", {}, "fraction");
    if (!(options.lower_percentile <= options.upper_percentile))
        throw ValidationError("lower percentile exceeds upper percentile", {}, "percentiles");

    const std::size_t n = scores.size();
    const auto k = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(options.fraction * static_cast<double>(n) - 1e-9)), 1, n);

    BootstrapResult out;
    out.full_mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(n);
    out.resample_means.reserve(static_cast<std::size_t>(options.resamples));

    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> idx(n);
    for (int r = 0; r < options.resamples; ++r) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + bounded(rng, n - i)]);
        // Summing in index order makes a full draw reproduce full_mean exactly.
        std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) sum += scores[idx[i]];
        out.resample_means.push_back(sum / static_cast<double>(k));
    }
    out.ci_low = percentile(out.resample_means, options.lower_percentile);
    out.ci_high = percentile(out.resample_means, options.upper_percentile);
    return out;
}

std::uint64_t case_seed(std::uint64_t base, std::string_view corpus_id, std::string_view docket_id) {
    return base ^ fnv1a64(std::string(corpus_id) + "/" + std::string(docket_id));
}

// ---- Aggregation -------------------------------------------------------

StanceSummary empty_summary(std::string docket_id, std::string corpus_id) {
    StanceSummary s;
    s.docket_id = std::move(docket_id);
    s.corpus_id = std::move(corpus_id);
    return s;
}

StanceSummary aggregate_stance(std::span<const StanceRecord> records, const std::optional<BootstrapOptions>& bootstrap) {
    if (records.empty()) throw InsufficientDataError("no stance records to aggregate");
    StanceSummary s = empty_summary(records.front().docket_id, records.front().corpus_id);
    std::vector<double> scores;
    for (const auto& r : records) {
        if (r.docket_id != s.docket_id || r.corpus_id != s.corpus_id)
            throw ValidationError("stance records mix cases or corpora", r.docket_id, "docket_id");
        switch (r.status) {
            case StanceStatus::scored:
                if (r.score < 1 || r.score > 5) throw ValidationError("stance score outside 1..5", r.docket_id, "score");
                scores.push_back(r.score);
                break;
            case StanceStatus::not_related: ++s.not_related_count; break;
            case StanceStatus::parse_failure: ++s.parse_failures; break;
            case StanceStatus::transport_error: ++s.transport_errors; break;
        }
    }
    s.related_count = scores.size();
    if (scores.empty()) return s;
    s.mean_score = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    s.p_pro = likert_to_probability(*s.mean_score);
    if (bootstrap) {
        BootstrapOptions opts = *bootstrap;
        opts.seed = case_seed(bootstrap->seed, s.corpus_id, s.docket_id);
        const auto ci = bootstrap_ci(scores, opts);
        s.ci_low = ci.ci_low;
        s.ci_high = ci.ci_high;
    }
    return s;
}

PreferenceDistribution corpus_distribution(std::span<const StanceSummary> summaries, const SurveyDataset& dataset,
                                           std::string corpus_id) {
    std::map<std::string, const StanceSummary*> by_docket;
    for (const auto& s : summaries) {
        if (!corpus_id.empty() && s.corpus_id != corpus_id)
            throw ValidationError("summary belongs to corpus '" + s.corpus_id + "'", s.docket_id, "corpus");
        if (!dataset.try_find_case(s.docket_id)) throw ValidationError("summary for unknown docket", s.docket_id);
        if (!by_docket.emplace(s.docket_id, &s).second)
            throw ValidationError("duplicate summary", s.docket_id, "docket");
    }
    if (corpus_id.empty() && !summaries.empty()) corpus_id = summaries.front().corpus_id;
    std::vector<PreferenceRow> rows;
    rows.reserve(dataset.cases.size());
    for (const auto& c : dataset.cases) {
        PreferenceRow row{c.docket_id, std::nullopt};
        if (const auto it = by_docket.find(c.docket_id); it != by_docket.end()) row.p_pro = it->second->p_pro;
        rows.push_back(std::move(row));
    }
    return PreferenceDistribution(std::move(corpus_id), std::move(rows), EntityKind::corpus);
}

// ---- Files -------------------------------------------------------------

json to_json(const StanceRecord& r) {
    json j = {{"doc_id", r.doc_id},
              {"docket", r.docket_id},
              {"corpus", r.corpus_id},
              {"judge_model", r.judge_model_id},
              {"status", to_string(r.status)},
              {"raw_judge_text", r.raw_judge_text}};
    j["score"] = r.status == StanceStatus::scored ? json(r.score) : json(nullptr);
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

StanceRecord stance_record_from_json(const json& j) {
    try {
        StanceRecord r;
        r.doc_id = j.at("doc_id").get<std::string>();
        r.docket_id = j.at("docket").get<std::string>();
        r.corpus_id = j.at("corpus").get<std::string>();
        r.judge_model_id = j.at("judge_model").get<std::string>();
        r.status = stance_status_from_string(j.at("status").get<std::string>());
        r.raw_judge_text = j.at("raw_judge_text").get<std::string>();
        r.error = j.value("error", std::string());
        if (r.status == StanceStatus::scored) {
            r.score = j.at("score").get<int>();
            if (r.score < 1 || r.score > 5) throw ParseError("stance score outside 1..5 for " + r.doc_id);
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed stance record: ") + e.what());
    }
}

void write_stance_log(const fs::path& path, std::span<const StanceRecord> records, const std::string& config_hash) {
    std::string out;
    for (const auto& r : records) {
        json j = to_json(r);
        if (!config_hash.empty()) j["config_hash"] = config_hash;
        out += j.dump();
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<StanceRecord> read_stance_log(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<StanceRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(stance_record_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

static std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

CsvTable summary_table(std::span<const StanceSummary> summaries, const std::vector<std::string>& comments) {
    CsvTable t;
    t.comments = comments;
    t.header.assign(kSummaryHeader.begin(), kSummaryHeader.end());
    for (const auto& s : summaries)
        t.rows.push_back({s.docket_id, s.corpus_id, opt_field(s.mean_score), std::to_string(s.related_count),
                          std::to_string(s.not_related_count), opt_field(s.p_pro), opt_field(s.ci_low),
                          opt_field(s.ci_high)});
    return t;
}

void write_summaries(const fs::path& path, std::span<const StanceSummary> summaries,
                     const std::vector<std::string>& comments) {
    write_text_file(path, format_csv(summary_table(summaries, comments)));
}

static std::optional<double> parse_opt_double(const std::string& text, std::size_t line) {
    if (text.empty()) return std::nullopt;
    std::istringstream in(text);
    in.imbue(std::locale::classic());
    double v = 0.0;
    if (!(in >> v) || !in.eof()) throw ParseError("summary line " + std::to_string(line) + ": bad number '" + text + "'");
    return v;
}

static std::size_t parse_count(const std::string& text, std::size_t line) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size() || v < 0) throw std::invalid_argument("count");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ParseError("summary line " + std::to_string(line) + ": bad count '" + text + "'");
    }
}

std::vector<StanceSummary> read_summaries(const fs::path& path) {
    const CsvTable t = read_csv_file(path);
    std::array<std::size_t, kSummaryHeader.size()> col{};
    for (std::size_t i = 0; i < kSummaryHeader.size(); ++i) col[i] = t.column(kSummaryHeader[i]);
    std::vector<StanceSummary> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t line = t.line_numbers[r];
        StanceSummary s = empty_summary(row[col[0]], row[col[1]]);
        s.mean_score = parse_opt_double(row[col[2]], line);
        s.related_count = parse_count(row[col[3]], line);
        s.not_related_count = parse_count(row[col[4]], line);
        s.p_pro = parse_opt_double(row[col[5]], line);
        s.ci_low = parse_opt_double(row[col[6]], line);
        s.ci_high = parse_opt_double(row[col[7]], line);
        if (s.p_pro && (*s.p_pro < 0.0 || *s.p_pro > 1.0))
            throw ValidationError("p_pro outside [0, 1]", s.docket_id, "p_pro");
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace polalign::stance
