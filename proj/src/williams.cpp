#include "polalign/williams.hpp"

#include <algorithm>
#include <cmath>

#include "polalign/error.hpp"
#include "polalign/special_functions.hpp"

namespace polalign::stats {

std::string_view to_string(WilliamsForm form) {
    switch (form) {
        case WilliamsForm::standard: return "standard";
        case WilliamsForm::printed: return "printed";
        case WilliamsForm::symmetrized: return "symmetrized";
    }
    return "standard";
}

WilliamsForm williams_form_from_string(std::string_view text) {
    if (text == "standard") return WilliamsForm::standard;
    if (text == "printed") return WilliamsForm::printed;
    if (text == "symmetrized") return WilliamsForm::symmetrized;
    throw DomainError("unknown Williams form '" + std::string(text) + "' (standard|printed|symmetrized)");
}

static void check_correlation(double r, const char* name) {
    if (!(r >= -1.0 && r <= 1.0)) throw DomainError(std::string(name) + " must lie in [-1, 1]");
}

double williams_k(double rho_12, double rho_13, double rho_23) {
    check_correlation(rho_12, "rho_12");
    check_correlation(rho_13, "rho_13");
    check_correlation(rho_23, "rho_23");
    // Grouped so that swapping rho_12 and rho_13 gives a bit-identical result.
    return 1.0 - (rho_12 * rho_12 + rho_13 * rho_13) - rho_23 * rho_23 + 2.0 * (rho_12 * rho_13) * rho_23;
}

WilliamsResult williams_test(double rho_12, double rho_13, double rho_23, std::size_t n, WilliamsForm form) {
    const double k = williams_k(rho_12, rho_13, rho_23);
    if (n < 4) throw InsufficientDataError("Williams test needs n >= 4, got " + std::to_string(n));

    WilliamsResult r;
    r.rho_12 = rho_12;
    r.rho_13 = rho_13;
    r.rho_23 = rho_23;
    r.n = n;
    r.df = static_cast<int>(n - 3);
    r.form = form;

    if (rho_12 == rho_13) {
        r.t_stat = 0.0;
        r.p_value = 0.5;
        r.p_value_two_sided = 1.0;
        return r;
    }

    const double nm1 = static_cast<double>(n - 1);
    const double nm3 = static_cast<double>(n - 3);
    double shared = rho_23;
    if (form == WilliamsForm::printed) shared = rho_12;
    if (form == WilliamsForm::symmetrized) shared = 0.5 * (rho_12 + rho_13);

    const double mean_r = 0.5 * (rho_12 + rho_13);
    const double one_minus = 1.0 - rho_23;
    const double denom_sq = 2.0 * k * nm1 / nm3 + mean_r * mean_r * one_minus * one_minus * one_minus;
    const double numer_sq = nm1 * (1.0 + shared);
    if (!(denom_sq > 0.0))
        throw DegenerateInputError("Williams denominator is not positive (K=" + std::to_string(k) + ")");
    if (numer_sq < 0.0) throw DegenerateInputError("Williams numerator radicand is negative");

    r.t_stat = (rho_12 - rho_13) * std::sqrt(numer_sq) / std::sqrt(denom_sq);
    const double df = static_cast<double>(r.df);
    r.p_value = std::clamp(student_t_sf(r.t_stat, df), 0.0, 1.0);
    r.p_value_two_sided = std::clamp(student_t_two_sided(r.t_stat, df), 0.0, 1.0);
    return r;
}

}  // namespace polalign::stats
