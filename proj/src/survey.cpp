#include "polalign/survey.hpp"

#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "polalign/error.hpp"
#include "polalign/io.hpp"

namespace polalign {

using nlohmann::json;

std::string_view to_string(RespondentGroup group) {
    switch (group) {
        case RespondentGroup::general_public: return "public";
        case RespondentGroup::democrat: return "democrat";
        case RespondentGroup::republican: return "republican";
    }
    return "public";
}

RespondentGroup respondent_group_from_string(std::string_view text) {
    if (text == "public") return RespondentGroup::general_public;
    if (text == "democrat") return RespondentGroup::democrat;
    if (text == "republican") return RespondentGroup::republican;
    throw ParseError("unknown respondent group '" + std::string(text) + "'");
}

std::string_view to_string(DecisionDirection direction) {
    return direction == DecisionDirection::conservative ? "conservative" : "liberal";
}

static DecisionDirection direction_from_string(const std::string& text, const std::string& docket) {
    if (text == "conservative") return DecisionDirection::conservative;
    if (text == "liberal") return DecisionDirection::liberal;
    throw ValidationError("decision_direction must be 'conservative' or 'liberal'", docket, "decision_direction");
}

const SurveyCase* SurveyDataset::try_find_case(std::string_view docket_id) const {
    for (const auto& c : cases)
        if (c.docket_id == docket_id) return &c;
    return nullptr;
}

const SurveyCase& SurveyDataset::find_case(std::string_view docket_id) const {
    if (const auto* c = try_find_case(docket_id)) return *c;
    throw ValidationError("unknown docket", std::string(docket_id));
}

std::vector<std::string> SurveyDataset::docket_order() const {
    std::vector<std::string> out;
    out.reserve(cases.size());
    for (const auto& c : cases) out.push_back(c.docket_id);
    return out;
}

void validate(const SurveyDataset& dataset) {
    std::set<std::string> dockets;
    for (const auto& c : dataset.cases) {
        if (c.docket_id.empty()) throw ValidationError("empty docket_id", {}, "docket_id");
        if (!dockets.insert(c.docket_id).second) throw ValidationError("duplicate docket", c.docket_id, "docket_id");
        if (c.question_text.empty()) throw ValidationError("empty question text", c.docket_id, "question_text");
        if (c.choices[0].empty() || c.choices[1].empty())
            throw ValidationError("choice labels must be non-empty", c.docket_id, "choices");
        if (c.choices[0] == c.choices[1]) throw ValidationError("choice labels must differ", c.docket_id, "choices");
        if (c.keywords.empty()) throw ValidationError("keywords must be non-empty", c.docket_id, "keywords");
        for (const auto& k : c.keywords)
            if (k.empty()) throw ValidationError("empty keyword", c.docket_id, "keywords");
    }

    std::set<std::pair<std::string, RespondentGroup>> group_keys;
    for (const auto& r : dataset.group_responses) {
        if (!dockets.count(r.docket_id))
            throw ValidationError("group response for unknown docket", r.docket_id, "docket_id");
        if (!group_keys.insert({r.docket_id, r.group}).second)
            throw ValidationError("duplicate response record for group '" + std::string(to_string(r.group)) + "'",
                                  r.docket_id, "group");
        if (!std::isfinite(r.pct_pro) || r.pct_pro < 0.0 || r.pct_pro > 1.0)
            throw ValidationError("pct_pro must lie in [0,1]", r.docket_id, "pct_pro");
        if (r.respondent_count && *r.respondent_count <= 0)
            throw ValidationError("respondent_count must be positive", r.docket_id, "respondent_count");
    }

    std::set<std::string> vote_keys;
    for (const auto& v : dataset.court_votes) {
        if (!dockets.count(v.docket_id)) throw ValidationError("court vote for unknown docket", v.docket_id, "docket_id");
        if (!vote_keys.insert(v.docket_id).second) throw ValidationError("duplicate court vote", v.docket_id, "docket_id");
        if (v.votes_majority <= 0) throw ValidationError("votes_majority must be positive", v.docket_id, "votes_majority");
        if (v.votes_dissent < 0) throw ValidationError("votes_dissent must be non-negative", v.docket_id, "votes_dissent");
        if (v.votes_majority <= v.votes_dissent)
            throw ValidationError("votes_majority must exceed votes_dissent", v.docket_id, "votes_majority");
        if (v.votes_majority + v.votes_dissent > 9)
            throw ValidationError("more than nine votes recorded", v.docket_id, "votes_dissent");
    }
}

SurveyDataset parse_survey(const json& document) {
    SurveyDataset ds;
    std::string docket;
    try {
        if (!document.is_object()) throw ParseError("survey file must be a JSON object");
        for (const auto& c : document.at("cases")) {
            SurveyCase sc;
            sc.docket_id = c.at("docket_id").get<std::string>();
            docket = sc.docket_id;
            sc.case_name = c.value("case_name", std::string{});
            sc.question_text = c.at("question_text").get<std::string>();
            const auto& choices = c.at("choices");
            if (!choices.is_array() || choices.size() != 2)
                throw ValidationError("exactly two choices required", sc.docket_id, "choices");
            sc.choices = {choices[0].get<std::string>(), choices[1].get<std::string>()};
            sc.keywords = c.at("keywords").get<std::vector<std::string>>();
            sc.decision_direction = direction_from_string(c.at("decision_direction").get<std::string>(), sc.docket_id);
            sc.survey_wave = c.value("survey_wave", 0);
            ds.cases.push_back(std::move(sc));
        }
        for (const auto& r : document.value("group_responses", json::array())) {
            GroupResponseRecord rec;
            rec.docket_id = r.at("docket_id").get<std::string>();
            docket = rec.docket_id;
            rec.group = respondent_group_from_string(r.at("group").get<std::string>());
            rec.pct_pro = r.at("pct_pro").get<double>();
            if (r.contains("respondent_count") && !r.at("respondent_count").is_null())
                rec.respondent_count = r.at("respondent_count").get<int>();
            ds.group_responses.push_back(std::move(rec));
        }
        for (const auto& v : document.value("court_votes", json::array())) {
            CourtVoteRecord rec;
            rec.docket_id = v.at("docket_id").get<std::string>();
            docket = rec.docket_id;
            rec.votes_majority = v.at("votes_majority").get<int>();
            rec.votes_dissent = v.at("votes_dissent").get<int>();
            ds.court_votes.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw ParseError("survey file" + (docket.empty() ? std::string{} : " near docket " + docket) + ": " + e.what());
    }
    validate(ds);
    return ds;
}

SurveyDataset load_survey(const std::filesystem::path& path) { return parse_survey(read_json_file(path)); }

json to_json(const SurveyDataset& dataset) {
    json cases = json::array();
    for (const auto& c : dataset.cases) {
        cases.push_back({{"docket_id", c.docket_id},
                         {"case_name", c.case_name},
                         {"question_text", c.question_text},
                         {"choices", c.choices},
                         {"keywords", c.keywords},
                         {"decision_direction", to_string(c.decision_direction)},
                         {"survey_wave", c.survey_wave}});
    }
    json groups = json::array();
    for (const auto& r : dataset.group_responses) {
        json rec = {{"docket_id", r.docket_id}, {"group", to_string(r.group)}, {"pct_pro", r.pct_pro}};
        if (r.respondent_count) rec["respondent_count"] = *r.respondent_count;
        groups.push_back(std::move(rec));
    }
    json votes = json::array();
    for (const auto& v : dataset.court_votes)
        votes.push_back(
            {{"docket_id", v.docket_id}, {"votes_majority", v.votes_majority}, {"votes_dissent", v.votes_dissent}});
    return {{"format_version", 1}, {"cases", cases}, {"group_responses", groups}, {"court_votes", votes}};
}

void save_survey(const SurveyDataset& dataset, const std::filesystem::path& path) {
    write_json_file(path, to_json(dataset));
}

std::string entity_id(RespondentGroup group) { return std::string(to_string(group)); }

PreferenceDistribution group_distribution(const SurveyDataset& dataset, RespondentGroup group) {
    std::unordered_map<std::string, double> by_docket;
    for (const auto& r : dataset.group_responses)
        if (r.group == group) by_docket[r.docket_id] = r.pct_pro;
    if (by_docket.empty())
        throw InsufficientDataError("no response records for group '" + std::string(to_string(group)) + "'");

    std::vector<PreferenceRow> rows;
    rows.reserve(dataset.cases.size());
    for (const auto& c : dataset.cases) {
        auto it = by_docket.find(c.docket_id);
        rows.push_back({c.docket_id, it == by_docket.end() ? std::nullopt : std::optional<double>(it->second)});
    }
    return PreferenceDistribution(entity_id(group), std::move(rows), EntityKind::human_group);
}

PreferenceDistribution court_distribution(const SurveyDataset& dataset) {
    std::unordered_map<std::string, const CourtVoteRecord*> by_docket;
    for (const auto& v : dataset.court_votes) by_docket[v.docket_id] = &v;

    std::vector<PreferenceRow> rows;
    std::string absent;
    for (const auto& c : dataset.cases) {
        auto it = by_docket.find(c.docket_id);
        if (it == by_docket.end()) {
            absent += (absent.empty() ? "" : ", ") + c.docket_id;
            continue;
        }
        const auto& v = *it->second;
        const double total = static_cast<double>(v.votes_majority + v.votes_dissent);
        rows.push_back({c.docket_id, static_cast<double>(v.votes_majority) / total});
    }
    if (!absent.empty()) throw ValidationError("missing court votes for dockets: " + absent, {}, "court_votes");
    return PreferenceDistribution(std::string(court_entity_id), std::move(rows), EntityKind::court);
}

}  // namespace polalign
