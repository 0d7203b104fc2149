#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polalign/correlation.hpp"
#include "polalign/preference.hpp"
#include "polalign/williams.hpp"

namespace polalign::stats {

inline constexpr double kStarThreshold = 0.05;
inline constexpr double kDoubleStarThreshold = 0.001;
inline constexpr std::string_view kRandomBaselineId = "random_1";

/// "**" for p < 0.001, "*" for p < 0.05, "" otherwise.
std::string significance_stars(double p_value);

// ---- Jensen-Shannon ----------------------------------------------------

/// JS divergence (base 2) between Bernoulli(p) and Bernoulli(q), in [0, 1].
double bernoulli_js_divergence(double p, double q);

struct CaseDivergence {
    std::string docket_id;
    double divergence = 0.0;
};

struct JsDivergence {
    std::vector<CaseDivergence> per_case;
    double mean = 0.0;
};

/// Per-case divergence over dockets present in both; throws
/// InsufficientDataError when no docket is shared.
JsDivergence js_divergence(const PreferenceDistribution& d1, const PreferenceDistribution& d2);

// ---- Random baseline ---------------------------------------------------

/// Uniform p_pro per docket from a seeded mt19937_64 (53-bit mantissa draw),
/// identical on every platform for a given seed.
PreferenceDistribution random_baseline(const std::vector<std::string>& docket_order, std::uint64_t seed,
                                       std::string entity_id = std::string(kRandomBaselineId));

// ---- Pearson alignment matrix ------------------------------------------

struct AlignmentCell {
    std::optional<AlignmentResult> result;
    /// Set when the cell is undefined (constant column, n < 3).
    std::string degenerate_reason;
    /// Either side of the pair is a baseline entity.
    bool involves_baseline = false;

    bool ok() const noexcept { return result.has_value(); }
    std::string stars() const { return result ? significance_stars(result->p_value) : std::string{}; }
};

struct AlignmentMatrix {
    std::vector<std::string> entities;
    std::vector<EntityKind> kinds;
    std::vector<std::vector<AlignmentCell>> cells;

    const AlignmentCell& at(std::size_t row, std::size_t col) const { return cells.at(row).at(col); }
    std::size_t index_of(std::string_view entity) const;
    const AlignmentCell& at(std::string_view row, std::string_view col) const;
};

/// Pearson alignment for every ordered entity pair, pairwise-complete rows.
/// Requires at least two distributions with distinct entity ids.
AlignmentMatrix alignment_matrix(std::span<const PreferenceDistribution> distributions);

// ---- Williams significance grid -----------------------------------------

struct SignificanceCell {
    std::optional<WilliamsResult> result;
    std::string degenerate_reason;
    bool significant = false;

    bool ok() const noexcept { return result.has_value(); }
};

struct SignificanceMatrix {
    std::string model_entity;
    std::vector<std::string> entities;
    double alpha = kStarThreshold;
    WilliamsForm form = WilliamsForm::standard;
    /// cells[i][j]: does the model correlate higher with entity i than j.
    /// Diagonal cells are empty.
    std::vector<std::vector<SignificanceCell>> cells;

    const SignificanceCell& at(std::size_t row, std::size_t col) const { return cells.at(row).at(col); }
};

/// For each ordered pair (i, j), i != j: Williams test of rho(model, i)
/// against rho(model, j) with rho(i, j) as the third correlation. All three
/// correlations and n use the dockets present in model, i and j. A cell is
/// significant when the one-sided p-value is below `alpha`.
SignificanceMatrix significance_matrix(const PreferenceDistribution& model,
                                       std::span<const PreferenceDistribution> entities,
                                       WilliamsForm form = WilliamsForm::standard, double alpha = kStarThreshold);

}  // namespace polalign::stats
