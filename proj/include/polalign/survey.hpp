#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polalign/preference.hpp"

namespace polalign {

enum class RespondentGroup { general_public, democrat, republican };
enum class DecisionDirection { conservative, liberal };

/// "public", "democrat", "republican" — the file and entity spelling.
std::string_view to_string(RespondentGroup group);
RespondentGroup respondent_group_from_string(std::string_view text);
std::string_view to_string(DecisionDirection direction);

struct SurveyCase {
    std::string docket_id;
    std::string case_name;
    std::string question_text;
    /// [0] agrees with the court (pro), [1] disagrees (opp).
    std::array<std::string, 2> choices;
    std::vector<std::string> keywords;
    DecisionDirection decision_direction = DecisionDirection::conservative;
    int survey_wave = 0;

    const std::string& pro_label() const { return choices[0]; }
    const std::string& opp_label() const { return choices[1]; }

    friend bool operator==(const SurveyCase&, const SurveyCase&) = default;
};

/// Published share of a respondent group agreeing with the court.
/// pct_opp is always 1 - pct_pro.
struct GroupResponseRecord {
    std::string docket_id;
    RespondentGroup group = RespondentGroup::general_public;
    double pct_pro = 0.0;
    std::optional<int> respondent_count;

    friend bool operator==(const GroupResponseRecord&, const GroupResponseRecord&) = default;
};

struct CourtVoteRecord {
    std::string docket_id;
    int votes_majority = 0;
    int votes_dissent = 0;

    friend bool operator==(const CourtVoteRecord&, const CourtVoteRecord&) = default;
};

/// A validated survey. Case order in `cases` is the canonical docket order
/// used by every distribution built from it.
struct SurveyDataset {
    std::vector<SurveyCase> cases;
    std::vector<GroupResponseRecord> group_responses;
    std::vector<CourtVoteRecord> court_votes;

    const SurveyCase& find_case(std::string_view docket_id) const;
    const SurveyCase* try_find_case(std::string_view docket_id) const;
    std::vector<std::string> docket_order() const;

    friend bool operator==(const SurveyDataset&, const SurveyDataset&) = default;
};

/// Parses and validates. Throws ParseError for malformed JSON/shape and
/// ValidationError (with docket and field) for invariant violations.
SurveyDataset parse_survey(const nlohmann::json& document);
SurveyDataset load_survey(const std::filesystem::path& path);

void validate(const SurveyDataset& dataset);

nlohmann::json to_json(const SurveyDataset& dataset);
void save_survey(const SurveyDataset& dataset, const std::filesystem::path& path);

/// Entity id used for a group's distribution ("public", "democrat", ...).
std::string entity_id(RespondentGroup group);
inline constexpr std::string_view court_entity_id = "court";

/// One row per case; cases without a record for the group are missing.
/// Throws InsufficientDataError when the group has no record at all.
PreferenceDistribution group_distribution(const SurveyDataset& dataset, RespondentGroup group);

/// p_pro = majority / (majority + dissent). Throws ValidationError listing
/// every docket without a vote record.
PreferenceDistribution court_distribution(const SurveyDataset& dataset);

}  // namespace polalign
