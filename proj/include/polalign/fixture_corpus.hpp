#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polalign/preference.hpp"
#include "polalign/probe.hpp"
#include "polalign/search.hpp"
#include "polalign/survey.hpp"

namespace polalign::fixture {

/// Per-case retrieval statistics of one corpus.
struct CaseRetrievalStats {
    std::string docket_id;
    std::size_t fetched = 0;
    double avg_length_fetched = 0.0;
    double mean_stance = 0.0;
    std::size_t matched = 0;
    double avg_length_matched = 0.0;
};

struct RetrievalStatsTable {
    std::string corpus_id;
    int word_limit = search::kDefaultWordLimit;
    std::vector<CaseRetrievalStats> cases;

    static RetrievalStatsTable from_json(const nlohmann::json& document);
    static RetrievalStatsTable load(const std::filesystem::path& path);
};

struct PlantedCase {
    std::string docket_id;
    std::string phrase;
    std::size_t fetched = 0;
    std::size_t matched = 0;
    long long score_sum = 0;
    /// score_sum / fetched, absent when nothing is fetched.
    std::optional<double> mean;
};

/// A synthetic corpus reproducing per-case matched/fetched counts and mean
/// stance, plus a judge mock script returning the planted scores.
struct FixtureCorpus {
    std::string corpus_id;
    int word_limit = search::kDefaultWordLimit;
    std::uint64_t seed = 0;
    std::vector<search::IndexedDocument> documents;
    /// Judge request tag -> reply text.
    std::map<std::string, std::string> judge_script;
    std::vector<PlantedCase> planted;

    nlohmann::json planted_json() const;
    nlohmann::json judge_script_json() const;
};

/// Deterministic for a given seed. Each case's documents carry one keyword
/// of that case chosen so that no other case's keyword occurs in it; filler
/// words avoid every keyword token. Fetched documents get declared word
/// counts below the limit and the rest at or above it, with averages close to
/// the table's. Integer judge scores sum to round(mean * fetched).
FixtureCorpus generate_fixture_corpus(const RetrievalStatsTable& stats, const SurveyDataset& dataset,
                                      std::uint64_t seed);

/// Mock script for a model whose answers follow a planted distribution.
/// Case `docket` receives exactly pro_counts[docket] pro answers out of
/// 6 * samples_per_variant; the remainder answer opp. Which requests get the
/// pro answer, and whether a reply uses the exact label or a normalized
/// spelling of it, are drawn from `seed`.
nlohmann::json planted_model_script(const SurveyDataset& dataset, const probe::PromptTemplateSet& templates,
                                    const std::map<std::string, int>& pro_counts, int samples_per_variant,
                                    std::uint64_t seed);

/// Pro counts reproducing a distribution at the given sample size:
/// round(p_pro * 6 * samples_per_variant). Missing rows are skipped.
std::map<std::string, int> pro_counts_for(const PreferenceDistribution& distribution, int samples_per_variant);

/// Writes index.json, judge_script.json and planted.json into `dir`.
void write_fixture_corpus(const FixtureCorpus& corpus, const std::filesystem::path& dir);

}  // namespace polalign::fixture
