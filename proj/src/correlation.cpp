#include "polalign/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "polalign/error.hpp"
#include "polalign/special_functions.hpp"

namespace polalign::stats {

namespace {

void check_inputs(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw DomainError("correlation inputs differ in length (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
    if (x.size() < 3)
        throw InsufficientDataError("correlation needs at least 3 paired observations, got " +
                                    std::to_string(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DomainError("correlation input is not finite");
}

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double correlation_p_value(double rho, std::size_t n) {
    if (n < 3) throw InsufficientDataError("p-value needs n >= 3");
    const double r2 = rho * rho;
    if (r2 >= 1.0) return 0.0;
    const double df = static_cast<double>(n - 2);
    const double t = rho * std::sqrt(df / (1.0 - r2));
    return std::clamp(student_t_two_sided(t, df), 0.0, 1.0);
}

AlignmentResult pearson(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("correlation undefined for a constant vector");
    const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return {"x", "y", rho, correlation_p_value(rho, x.size()), x.size()};
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        // Positions i..j-1 (0-based) hold ranks i+1..j; their mean is (i+1+j)/2.
        const double rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

AlignmentResult spearman(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

PairedColumns pairwise_complete(const PreferenceDistribution& a, const PreferenceDistribution& b) {
    std::unordered_map<std::string, double> b_values;
    for (const auto& row : b.rows())
        if (row.present()) b_values.emplace(row.docket_id, *row.p_pro);

    PairedColumns out;
    for (const auto& row : a.rows()) {
        if (!row.present()) continue;
        auto it = b_values.find(row.docket_id);
        if (it == b_values.end()) continue;
        out.dockets.push_back(row.docket_id);
        out.a.push_back(*row.p_pro);
        out.b.push_back(it->second);
    }
    return out;
}

AlignmentResult pearson(const PreferenceDistribution& a, const PreferenceDistribution& b) {
    const auto cols = pairwise_complete(a, b);
    AlignmentResult r = pearson(cols.a, cols.b);
    r.entity_a = a.entity_id();
    r.entity_b = b.entity_id();
    return r;
}

}  // namespace polalign::stats
