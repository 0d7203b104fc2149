#include "polalign/preference.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "polalign/error.hpp"
#include "polalign/io.hpp"

namespace polalign {

std::string_view to_string(EntityKind kind) {
    switch (kind) {
        case EntityKind::human_group: return "human_group";
        case EntityKind::court: return "court";
        case EntityKind::model: return "model";
        case EntityKind::corpus: return "corpus";
        case EntityKind::baseline: return "baseline";
        case EntityKind::other: return "other";
    }
    return "other";
}

EntityKind entity_kind_from_string(std::string_view text) {
    for (EntityKind k : {EntityKind::human_group, EntityKind::court, EntityKind::model, EntityKind::corpus,
                         EntityKind::baseline, EntityKind::other})
        if (to_string(k) == text) return k;
    throw ParseError("unknown entity kind '" + std::string(text) + "'");
}

PreferenceDistribution::PreferenceDistribution(std::string entity_id, std::vector<PreferenceRow> rows,
                                               EntityKind kind)
    : entity_id_(std::move(entity_id)), rows_(std::move(rows)), kind_(kind) {
    std::unordered_set<std::string> seen;
    for (const auto& row : rows_) {
        if (!seen.insert(row.docket_id).second)
            throw ValidationError("duplicate docket in distribution '" + entity_id_ + "'", row.docket_id);
        if (row.p_pro) {
            const double p = *row.p_pro;
            if (!std::isfinite(p) || p < 0.0 || p > 1.0)
                throw ValidationError("p_pro outside [0,1] in distribution '" + entity_id_ + "'", row.docket_id,
                                      "p_pro");
        }
    }
}

std::size_t PreferenceDistribution::present_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(rows_.begin(), rows_.end(), [](const PreferenceRow& r) { return r.present(); }));
}

std::optional<double> PreferenceDistribution::p_pro(std::string_view docket_id) const {
    for (const auto& row : rows_)
        if (row.docket_id == docket_id) return row.p_pro;
    return std::nullopt;
}

bool PreferenceDistribution::has_docket(std::string_view docket_id) const {
    return std::any_of(rows_.begin(), rows_.end(), [&](const PreferenceRow& r) { return r.docket_id == docket_id; });
}

std::vector<std::string> PreferenceDistribution::docket_order() const {
    std::vector<std::string> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_) out.push_back(row.docket_id);
    return out;
}

nlohmann::json to_json(const PreferenceDistribution& distribution) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : distribution.rows()) {
        if (row.present())
            rows.push_back({{"docket", row.docket_id}, {"p_pro", *row.p_pro}, {"p_opp", row.p_opp()}});
        else
            rows.push_back({{"docket", row.docket_id}, {"missing", true}});
    }
    return {{"entity", distribution.entity_id()}, {"kind", to_string(distribution.kind())}, {"rows", rows}};
}

PreferenceDistribution distribution_from_json(const nlohmann::json& document) {
    try {
        std::vector<PreferenceRow> rows;
        for (const auto& r : document.at("rows")) {
            PreferenceRow row{r.at("docket").get<std::string>(), std::nullopt};
            if (!r.value("missing", false)) {
                row.p_pro = r.at("p_pro").get<double>();
                if (r.contains("p_opp") && std::abs(*row.p_pro + r.at("p_opp").get<double>() - 1.0) > 1e-9)
                    throw ValidationError("p_pro + p_opp != 1", row.docket_id, "p_opp");
            }
            rows.push_back(std::move(row));
        }
        const EntityKind kind =
            document.contains("kind") ? entity_kind_from_string(document.at("kind").get<std::string>()) : EntityKind::other;
        return PreferenceDistribution(document.at("entity").get<std::string>(), std::move(rows), kind);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("distribution document: ") + e.what());
    }
}

void save_distribution(const PreferenceDistribution& distribution, const std::string& path,
                       const nlohmann::json& metadata) {
    nlohmann::json doc = to_json(distribution);
    doc["metadata"] = metadata;
    write_json_file(path, doc);
}

PreferenceDistribution load_distribution(const std::string& path) {
    return distribution_from_json(read_json_file(path));
}

}  // namespace polalign
