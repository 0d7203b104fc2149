#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace polalign::stats {

/// Which correlation enters the (1 + r) factor of the numerator radicand.
///   standard:    1 + rho_23  (Williams 1959 / Steiger 1980)
///   printed:     1 + rho_12
///   symmetrized: 1 + (rho_12 + rho_13) / 2
enum class WilliamsForm { standard, printed, symmetrized };

std::string_view to_string(WilliamsForm form);
WilliamsForm williams_form_from_string(std::string_view text);

/// Determinant of the 3x3 correlation matrix:
/// 1 - r12^2 - r13^2 - r23^2 + 2 r12 r13 r23. Inputs must lie in [-1, 1].
double williams_k(double rho_12, double rho_13, double rho_23);

struct WilliamsResult {
    std::string model_entity;
    std::string entity_1;
    std::string entity_2;
    double rho_12 = 0.0;
    double rho_13 = 0.0;
    double rho_23 = 0.0;
    double t_stat = 0.0;
    int df = 0;
    std::size_t n = 0;
    /// One-sided P(T_{n-3} > t): evidence that rho_12 > rho_13.
    double p_value = 1.0;
    double p_value_two_sided = 1.0;
    WilliamsForm form = WilliamsForm::standard;
};

/// Williams test for rho_12 vs rho_13, which share variable 1.
/// n >= 4. When rho_12 == rho_13 the statistic is exactly 0 regardless of
/// the denominator; otherwise a non-positive denominator radicand raises
/// DegenerateInputError.
WilliamsResult williams_test(double rho_12, double rho_13, double rho_23, std::size_t n,
                             WilliamsForm form = WilliamsForm::standard);

}  // namespace polalign::stats
