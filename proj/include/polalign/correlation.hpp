#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "polalign/preference.hpp"

namespace polalign::stats {

/// A correlation between two entities over their pairwise-complete cases.
struct AlignmentResult {
    std::string entity_a;
    std::string entity_b;
    double rho = 0.0;
    /// Two-sided, from t = rho * sqrt((n-2)/(1-rho^2)) on n-2 df.
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Sample Pearson correlation. Requires equal lengths, n >= 3 and neither
/// vector constant (DegenerateInputError otherwise).
AlignmentResult pearson(std::span<const double> x, std::span<const double> y);

/// Pearson over tie-averaged ranks.
AlignmentResult spearman(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Two-sided p-value of a correlation coefficient on n observations.
double correlation_p_value(double rho, std::size_t n);

struct PairedColumns {
    std::vector<std::string> dockets;
    std::vector<double> a;
    std::vector<double> b;
};

/// p_pro columns over dockets present in both distributions, in a's order.
PairedColumns pairwise_complete(const PreferenceDistribution& a, const PreferenceDistribution& b);

/// Pearson alignment between two preference distributions (p_pro columns,
/// pairwise-complete rows). Entity ids are filled in.
AlignmentResult pearson(const PreferenceDistribution& a, const PreferenceDistribution& b);

}  // namespace polalign::stats
