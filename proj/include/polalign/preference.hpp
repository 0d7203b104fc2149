#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace polalign {

enum class EntityKind { human_group, court, model, corpus, baseline, other };

std::string_view to_string(EntityKind kind);
EntityKind entity_kind_from_string(std::string_view text);

/// One case of a preference distribution. An absent p_pro marks missing data;
/// it is never imputed.
struct PreferenceRow {
    std::string docket_id;
    std::optional<double> p_pro;

    bool present() const noexcept { return p_pro.has_value(); }
    double p_opp() const { return 1.0 - p_pro.value(); }

    friend bool operator==(const PreferenceRow&, const PreferenceRow&) = default;
};

/// Per-case (pro, opp) probabilities of one entity, in canonical docket order.
/// p_opp is always derived as 1 - p_pro, so rows sum to one by construction.
class PreferenceDistribution {
public:
    PreferenceDistribution() = default;
    PreferenceDistribution(std::string entity_id, std::vector<PreferenceRow> rows,
                           EntityKind kind = EntityKind::other);

    const std::string& entity_id() const noexcept { return entity_id_; }
    EntityKind kind() const noexcept { return kind_; }
    const std::vector<PreferenceRow>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    std::size_t present_count() const noexcept;

    /// p_pro for a docket; nullopt when the docket is missing or unknown.
    std::optional<double> p_pro(std::string_view docket_id) const;
    bool has_docket(std::string_view docket_id) const;

    std::vector<std::string> docket_order() const;

    friend bool operator==(const PreferenceDistribution&, const PreferenceDistribution&) = default;

private:
    std::string entity_id_;
    std::vector<PreferenceRow> rows_;
    EntityKind kind_ = EntityKind::other;
};

nlohmann::json to_json(const PreferenceDistribution& distribution);
PreferenceDistribution distribution_from_json(const nlohmann::json& document);

/// Distribution files carry a free-form metadata block next to the rows.
void save_distribution(const PreferenceDistribution& distribution, const std::string& path,
                       const nlohmann::json& metadata = nlohmann::json::object());
PreferenceDistribution load_distribution(const std::string& path);

}  // namespace polalign
