#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polalign/io.hpp"
#include "polalign/llm_client.hpp"
#include "polalign/preference.hpp"
#include "polalign/search.hpp"
#include "polalign/survey.hpp"

namespace polalign::stance {

struct RetrievedDocument {
    std::string doc_id;
    std::string docket_id;
    std::string corpus_id;
    std::string text;
    int word_count = 0;
    std::string source_uri;

    friend bool operator==(const RetrievedDocument&, const RetrievedDocument&) = default;
};

struct RetrievalResult {
    std::vector<RetrievedDocument> documents;
    /// Matching documents reported by the index before the word filter, when
    /// the endpoint reports it.
    std::optional<std::size_t> matched;
    std::size_t returned = 0;
    std::size_t over_limit = 0;
    std::size_t empty_text = 0;
    std::size_t duplicates = 0;
};

/// Queries the case keywords and keeps documents with word_count < word_limit
/// and non-empty text, deduplicated by doc_id in first-seen order. Zero hits
/// is a valid outcome. Transport errors propagate.
RetrievalResult retrieve_documents(const SurveyCase& survey_case, const std::string& corpus_id,
                                   search::SearchClient& client, int word_limit = search::kDefaultWordLimit,
                                   int result_limit = search::kDefaultResultLimit);

enum class StanceStatus { scored, not_related, parse_failure, transport_error };

std::string_view to_string(StanceStatus status);
StanceStatus stance_status_from_string(std::string_view text);

struct JudgeParse {
    StanceStatus status = StanceStatus::parse_failure;
    int score = 0;  // 1..5 when scored
};

/// "not related" (any case) anywhere wins. Otherwise the first standalone
/// digit 1-5: not adjacent to another digit and not part of a decimal number.
/// Anything else is a parse failure.
JudgeParse parse_judge_output(std::string_view text);

/// Judge prompt. Placeholders: {case_name}, {docket}, {question},
/// {decision}, {document}.
struct StanceTemplate {
    std::string text;

    static StanceTemplate load(const std::filesystem::path& path);
    static StanceTemplate bundled();

    std::string render(const SurveyCase& survey_case, const RetrievedDocument& document) const;
};

inline constexpr double kJudgeTemperature = 0.0;
inline constexpr int kJudgeMaxTokens = 16;

/// "stance/<corpus>/<docket>/<doc_id>".
std::string judge_request_tag(std::string_view corpus_id, std::string_view docket_id, std::string_view doc_id);

llm::CompletionRequest judge_request(const RetrievedDocument& document, const SurveyCase& survey_case,
                                     const std::string& judge_model_id, const StanceTemplate& tmpl);

struct StanceRecord {
    std::string doc_id;
    std::string docket_id;
    std::string corpus_id;
    std::string judge_model_id;
    StanceStatus status = StanceStatus::parse_failure;
    int score = 0;
    std::string raw_judge_text;
    std::string error;

    friend bool operator==(const StanceRecord&, const StanceRecord&) = default;
};

/// One judge call at temperature 0. Transport failures become
/// transport_error records.
StanceRecord score_stance(const RetrievedDocument& document, const SurveyCase& survey_case,
                          llm::CompletionClient& judge, const std::string& judge_model_id,
                          const StanceTemplate& tmpl);

/// Same over a document list through the bounded batch.
std::vector<StanceRecord> score_documents(std::span<const RetrievedDocument> documents, const SurveyCase& survey_case,
                                          llm::CompletionClient& judge, const std::string& judge_model_id,
                                          const StanceTemplate& tmpl,
                                          std::size_t max_in_flight = llm::kDefaultMaxInFlight);

/// P = (S - 1) / 4. DomainError outside [1, 5].
double likert_to_probability(double mean_score);

inline constexpr std::string_view kTransformName = "linear:(S-1)/4";

struct BootstrapOptions {
    int resamples = 100;
    double fraction = 0.8;
    std::uint64_t seed = 20240601;
    double lower_percentile = 5.0;
    double upper_percentile = 95.0;
};

struct BootstrapResult {
    double ci_low = 0.0;
    double ci_high = 0.0;
    double full_mean = 0.0;
    std::vector<double> resample_means;
};

/// Each resample draws ceil(fraction * N) scores without replacement; bounds
/// are linearly interpolated percentiles of the resample means.
BootstrapResult bootstrap_ci(std::span<const double> scores, const BootstrapOptions& options = {});

/// Interpolated percentile (0..100) of a non-empty sample.
double percentile(std::vector<double> values, double pct);

/// Per-case bootstrap seed: base ^ fnv1a64("<corpus>/<docket>").
std::uint64_t case_seed(std::uint64_t base, std::string_view corpus_id, std::string_view docket_id);

struct StanceSummary {
    std::string docket_id;
    std::string corpus_id;
    std::optional<double> mean_score;
    std::size_t related_count = 0;
    std::size_t not_related_count = 0;
    std::size_t parse_failures = 0;
    std::size_t transport_errors = 0;
    std::optional<double> p_pro;
    std::optional<double> ci_low;
    std::optional<double> ci_high;

    bool missing() const noexcept { return !mean_score.has_value(); }
};

/// Mean over numeric scores only. Records must share one (docket, corpus).
/// With bootstrap options the CI is filled, seeded per case.
StanceSummary aggregate_stance(std::span<const StanceRecord> records,
                               const std::optional<BootstrapOptions>& bootstrap = std::nullopt);

/// Summary for a case with no records at all.
StanceSummary empty_summary(std::string docket_id, std::string corpus_id);

/// One row per dataset case, missing where the summary is missing or absent.
PreferenceDistribution corpus_distribution(std::span<const StanceSummary> summaries, const SurveyDataset& dataset,
                                           std::string corpus_id);

// ---- Files -------------------------------------------------------------

nlohmann::json to_json(const StanceRecord& record);
StanceRecord stance_record_from_json(const nlohmann::json& line);
void write_stance_log(const std::filesystem::path& path, std::span<const StanceRecord> records,
                      const std::string& config_hash = {});
std::vector<StanceRecord> read_stance_log(const std::filesystem::path& path);

inline constexpr std::array<std::string_view, 8> kSummaryHeader = {"docket", "corpus",  "mean",   "related",
                                                                    "not_related", "p_pro", "ci_low", "ci_high"};

CsvTable summary_table(std::span<const StanceSummary> summaries, const std::vector<std::string>& comments = {});
void write_summaries(const std::filesystem::path& path, std::span<const StanceSummary> summaries,
                     const std::vector<std::string>& comments = {});
std::vector<StanceSummary> read_summaries(const std::filesystem::path& path);

}  // namespace polalign::stance
