#include "polalign/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_map>

#include "polalign/error.hpp"

namespace polalign::stats {

std::string significance_stars(double p_value) {
    if (p_value < kDoubleStarThreshold) return "**";
    if (p_value < kStarThreshold) return "*";
    return {};
}

namespace {

double entropy_bits(double p) {
    double h = 0.0;
    for (double v : {p, 1.0 - p})
        if (v > 0.0) h -= v * std::log2(v);
    return h;
}

}  // namespace

double bernoulli_js_divergence(double p, double q) {
    if (!(p >= 0.0 && p <= 1.0) || !(q >= 0.0 && q <= 1.0))
        throw DomainError("Bernoulli parameters must lie in [0,1]");
    // JS = H(m) - (H(p) + H(q)) / 2, written so swapping p and q is exact.
    const double m = 0.5 * (p + q);
    const double js = entropy_bits(m) - 0.5 * (entropy_bits(p) + entropy_bits(q));
    return std::clamp(js, 0.0, 1.0);
}

JsDivergence js_divergence(const PreferenceDistribution& d1, const PreferenceDistribution& d2) {
    const auto cols = pairwise_complete(d1, d2);
    if (cols.dockets.empty())
        throw InsufficientDataError("no shared present dockets between '" + d1.entity_id() + "' and '" +
                                    d2.entity_id() + "'");
    JsDivergence out;
    double sum = 0.0;
    for (std::size_t i = 0; i < cols.dockets.size(); ++i) {
        const double js = bernoulli_js_divergence(cols.a[i], cols.b[i]);
        out.per_case.push_back({cols.dockets[i], js});
        sum += js;
    }
    out.mean = sum / static_cast<double>(out.per_case.size());
    return out;
}

PreferenceDistribution random_baseline(const std::vector<std::string>& docket_order, std::uint64_t seed,
                                       std::string entity_id) {
    std::mt19937_64 engine(seed);
    std::vector<PreferenceRow> rows;
    rows.reserve(docket_order.size());
    for (const auto& docket : docket_order) {
        const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
        rows.push_back({docket, u});
    }
    return PreferenceDistribution(std::move(entity_id), std::move(rows), EntityKind::baseline);
}

std::size_t AlignmentMatrix::index_of(std::string_view entity) const {
    for (std::size_t i = 0; i < entities.size(); ++i)
        if (entities[i] == entity) return i;
    throw ValidationError("entity '" + std::string(entity) + "' not in matrix");
}

const AlignmentCell& AlignmentMatrix::at(std::string_view row, std::string_view col) const {
    return at(index_of(row), index_of(col));
}

static void check_unique_ids(std::span<const PreferenceDistribution> distributions) {
    std::set<std::string> ids;
    for (const auto& d : distributions)
        if (!ids.insert(d.entity_id()).second)
            throw ValidationError("duplicate entity id '" + d.entity_id() + "'");
}

AlignmentMatrix alignment_matrix(std::span<const PreferenceDistribution> distributions) {
    if (distributions.size() < 2) throw InsufficientDataError("alignment matrix needs at least two distributions");
    check_unique_ids(distributions);

    AlignmentMatrix m;
    const std::size_t k = distributions.size();
    for (const auto& d : distributions) {
        m.entities.push_back(d.entity_id());
        m.kinds.push_back(d.kind());
    }
    m.cells.assign(k, std::vector<AlignmentCell>(k));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            auto& cell = m.cells[i][j];
            cell.involves_baseline =
                distributions[i].kind() == EntityKind::baseline || distributions[j].kind() == EntityKind::baseline;
            try {
                cell.result = pearson(distributions[i], distributions[j]);
            } catch (const DegenerateInputError& e) {
                cell.degenerate_reason = e.what();
            } catch (const InsufficientDataError& e) {
                cell.degenerate_reason = e.what();
            }
        }
    }
    return m;
}

SignificanceMatrix significance_matrix(const PreferenceDistribution& model,
                                       std::span<const PreferenceDistribution> entities, WilliamsForm form,
                                       double alpha) {
    if (entities.size() < 2) throw InsufficientDataError("significance matrix needs at least two entities");

    SignificanceMatrix m;
    m.model_entity = model.entity_id();
    m.alpha = alpha;
    m.form = form;
    const std::size_t k = entities.size();
    for (const auto& e : entities) m.entities.push_back(e.entity_id());
    m.cells.assign(k, std::vector<SignificanceCell>(k));

    std::vector<std::unordered_map<std::string, double>> values(k);
    for (std::size_t e = 0; e < k; ++e)
        for (const auto& row : entities[e].rows())
            if (row.present()) values[e].emplace(row.docket_id, *row.p_pro);

    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            auto& cell = m.cells[i][j];
            // Dockets present in the model and both entities, in the model's order,
            // so cells (i, j) and (j, i) see identical vectors.
            std::vector<double> xm, xi, xj;
            for (const auto& row : model.rows()) {
                if (!row.present()) continue;
                auto vi = values[i].find(row.docket_id);
                auto vj = values[j].find(row.docket_id);
                if (vi == values[i].end() || vj == values[j].end()) continue;
                xm.push_back(*row.p_pro);
                xi.push_back(vi->second);
                xj.push_back(vj->second);
            }
            try {
                const double r12 = pearson(xm, xi).rho;
                const double r13 = pearson(xm, xj).rho;
                const double r23 = pearson(xi, xj).rho;
                WilliamsResult w = williams_test(r12, r13, r23, xm.size(), form);
                w.model_entity = model.entity_id();
                w.entity_1 = entities[i].entity_id();
                w.entity_2 = entities[j].entity_id();
                cell.significant = w.p_value < alpha;
                cell.result = std::move(w);
            } catch (const DegenerateInputError& e) {
                cell.degenerate_reason = e.what();
            } catch (const InsufficientDataError& e) {
                cell.degenerate_reason = e.what();
            }
        }
    }
    return m;
}

}  // namespace polalign::stats
