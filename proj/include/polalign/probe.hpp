#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polalign/io.hpp"
#include "polalign/llm_client.hpp"
#include "polalign/preference.hpp"
#include "polalign/survey.hpp"

namespace polalign::probe {

enum class TemplateId { ab, repeat, compare };
enum class ChoiceOrder { pro_first, opp_first };
enum class MappedChoice { pro, opp, unmatched };
enum class MappingStage { exact, normalized, manual, none };

/// "AB", "Repeat", "Compare".
std::string_view to_string(TemplateId id);
TemplateId template_id_from_string(std::string_view text);
std::string_view to_string(ChoiceOrder order);
ChoiceOrder choice_order_from_string(std::string_view text);
std::string_view to_string(MappedChoice choice);
MappedChoice mapped_choice_from_string(std::string_view text);
std::string_view to_string(MappingStage stage);
MappingStage mapping_stage_from_string(std::string_view text);

/// A question template. Placeholders: {question}, {option_1}, {option_2}.
/// When `labels_are_options` is set the answer labels are the option texts
/// themselves; otherwise `labels` names the first and second option.
struct PromptTemplate {
    TemplateId id = TemplateId::ab;
    std::string text;
    std::array<std::string, 2> labels;
    bool labels_are_options = false;
};

struct PromptTemplateSet {
    std::string version;
    std::array<PromptTemplate, 3> templates;  // AB, Repeat, Compare

    static PromptTemplateSet from_json(const nlohmann::json& document);
    static PromptTemplateSet load(const std::filesystem::path& path);
    /// Bundled templates from the asset directory.
    static PromptTemplateSet bundled();

    const PromptTemplate& get(TemplateId id) const;
};

inline constexpr std::size_t kVariantsPerCase = 6;
inline constexpr int kDefaultSamplesPerVariant = 5;
inline constexpr double kProbeTemperature = 1.0;

struct PromptVariant {
    std::string docket_id;
    TemplateId template_id = TemplateId::ab;
    ChoiceOrder choice_order = ChoiceOrder::pro_first;
    std::string rendered_text;
    /// Answer labels of the first- and second-listed option.
    std::array<std::string, 2> answer_labels;

    /// "v1".."v6": AB, Repeat, Compare, each pro_first then opp_first.
    std::string variant_id() const;
    /// "AB/pro_first" etc.
    std::string variant_name() const;
    /// Choice meant by the option at `position` (0 or 1).
    MappedChoice choice_at(std::size_t position) const;
    /// Label that selects `choice` in this variant.
    const std::string& label_for(MappedChoice choice) const;
};

/// Six variants, 3 templates x 2 orders. Throws ValidationError when a choice
/// label would not appear exactly once or the question would be lost.
std::vector<PromptVariant> render_prompts(const SurveyCase& survey_case, const PromptTemplateSet& templates);

/// Lower-case ASCII, trimmed of surrounding whitespace and punctuation,
/// inner whitespace collapsed to single spaces.
std::string normalize_answer(std::string_view text);

struct Mapping {
    MappedChoice choice = MappedChoice::unmatched;
    MappingStage stage = MappingStage::none;
};

/// Exact stage: the whitespace-trimmed text equals a label verbatim.
/// Normalized stage: for single-word labels the first word of the normalized
/// text (stripped of punctuation) equals the normalized label; for multi-word
/// labels the whole normalized text must equal it. Exact wins over
/// normalized; anything else is unmatched.
Mapping map_response(std::string_view raw_text, const PromptVariant& variant);

struct ResponseRecord {
    std::string docket_id;
    std::string model_id;
    std::string variant_id;
    TemplateId template_id = TemplateId::ab;
    ChoiceOrder choice_order = ChoiceOrder::pro_first;
    int sample_index = 1;
    std::string raw_text;
    MappedChoice mapped_choice = MappedChoice::unmatched;
    MappingStage mapping_stage = MappingStage::none;
    /// Transport failure note; empty on success.
    std::string error;

    std::string variant_name() const;
    friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

/// "<docket>/<variant id>/s<sample>", e.g. "20A87/v1/s1".
std::string request_tag(std::string_view docket_id, std::string_view variant_id, int sample_index);

struct ProbeOptions {
    int samples_per_variant = kDefaultSamplesPerVariant;
    double temperature = kProbeTemperature;
    int max_tokens = 64;
    std::size_t max_in_flight = llm::kDefaultMaxInFlight;
};

/// 6 x samples_per_variant records per case, mapped. Transport failures are
/// recorded as unmatched with an error note.
std::vector<ResponseRecord> collect_responses(const SurveyCase& survey_case, const std::string& model_id,
                                              const PromptTemplateSet& templates, llm::CompletionClient& client,
                                              const ProbeOptions& options = {});

/// Same as above over several cases, issued as one bounded batch.
std::vector<ResponseRecord> collect_responses(std::span<const SurveyCase> cases, const std::string& model_id,
                                              const PromptTemplateSet& templates, llm::CompletionClient& client,
                                              const ProbeOptions& options = {});

struct CaseTally {
    std::size_t pro = 0;
    std::size_t opp = 0;
    std::size_t unmatched = 0;
    std::size_t errors = 0;

    std::size_t mapped() const noexcept { return pro + opp; }
    std::size_t total() const noexcept { return pro + opp + unmatched; }
};

std::map<std::string, CaseTally> tally(std::span<const ResponseRecord> records);

/// p_pro = #pro / (#pro + #opp) per case over mapped records (unmatched
/// excluded); a case with no mapped record is missing. Records must all be
/// from one model and reference dockets of the dataset.
PreferenceDistribution aggregate_llm_distribution(std::span<const ResponseRecord> records,
                                                  const SurveyDataset& dataset, std::string entity_id = {});

// ---- Response log (JSONL) ----------------------------------------------

nlohmann::json to_json(const ResponseRecord& record);
ResponseRecord response_from_json(const nlohmann::json& line);
std::string format_response_log(std::span<const ResponseRecord> records, const std::string& config_hash = {});
void write_response_log(const std::filesystem::path& path, std::span<const ResponseRecord> records,
                        const std::string& config_hash = {});
/// Appends to an existing log, creating it when absent.
void append_response_log(const std::filesystem::path& path, std::span<const ResponseRecord> records,
                         const std::string& config_hash = {});
std::vector<ResponseRecord> read_response_log(const std::filesystem::path& path);

// ---- Adjudication (CSV) ------------------------------------------------

inline constexpr std::array<std::string_view, 6> kAdjudicationHeader = {"docket", "model", "variant",
                                                                         "sample", "raw_text", "manual_choice"};

/// Unmatched records with an empty manual_choice column.
CsvTable adjudication_table(std::span<const ResponseRecord> records, const std::string& config_hash = {});
void export_adjudication(const std::filesystem::path& path, std::span<const ResponseRecord> records,
                         const std::string& config_hash = {});

struct AdjudicationOutcome {
    std::size_t applied = 0;
    std::size_t skipped_blank = 0;
};

/// Merges manual codes ("pro"/"opp") into unmatched records, setting
/// mapping_stage = manual. Rows with a blank manual_choice are skipped.
/// Any row naming an unknown record, an already matched record or an
/// invalid choice rejects the whole file with a ValidationError listing the
/// offending CSV line numbers; records are left untouched in that case.
AdjudicationOutcome apply_adjudication(std::vector<ResponseRecord>& records, const CsvTable& table);

}  // namespace polalign::probe
