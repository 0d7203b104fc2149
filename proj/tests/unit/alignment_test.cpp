#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "polalign/alignment.hpp"
#include "polalign/error.hpp"

using namespace polalign;
using namespace polalign::stats;

namespace {

PreferenceDistribution dist(const std::string& id, std::vector<std::optional<double>> p,
                            EntityKind kind = EntityKind::other) {
    std::vector<PreferenceRow> rows;
    for (std::size_t i = 0; i < p.size(); ++i) rows.push_back({"d" + std::to_string(i), p[i]});
    return PreferenceDistribution(id, std::move(rows), kind);
}

}  // namespace

TEST_CASE("stars thresholds are strict") {
    CHECK(significance_stars(0.0009) == "**");
    CHECK(significance_stars(0.001) == "*");
    CHECK(significance_stars(0.0499) == "*");
    CHECK(significance_stars(0.05) == "");
    CHECK(significance_stars(0.7) == "");
}

TEST_CASE("Bernoulli JS divergence") {
    CHECK(bernoulli_js_divergence(0.5, 0.75) == doctest::Approx(frozen::js_half_vs_three_quarters).epsilon(1e-13));
    CHECK(bernoulli_js_divergence(0.0, 1.0) == 1.0);
    CHECK(bernoulli_js_divergence(0.3, 0.3) == 0.0);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double p = u(rng), q = u(rng);
        const double js = bernoulli_js_divergence(p, q);
        CHECK(js == bernoulli_js_divergence(q, p));
        CHECK(js == doctest::Approx(static_cast<double>(oracle::bernoulli_js(p, q))).epsilon(1e-12));
        CHECK(js >= 0.0);
        CHECK(js <= 1.0);
    }
    CHECK_THROWS_AS(bernoulli_js_divergence(-0.1, 0.5), DomainError);
}

TEST_CASE("mean JS over shared dockets") {
    const auto a = dist("a", {0.5, 0.0, std::nullopt});
    const auto b = dist("b", {0.75, 1.0, 0.2});
    const auto js = js_divergence(a, b);
    REQUIRE(js.per_case.size() == 2);
    CHECK(js.mean == doctest::Approx((frozen::js_half_vs_three_quarters + 1.0) / 2).epsilon(1e-13));
    CHECK_THROWS_AS(js_divergence(dist("x", {std::nullopt}), dist("y", {0.5})), InsufficientDataError);
}

TEST_CASE("random baseline is seeded and uniform in [0, 1)") {
    std::vector<std::string> order;
    for (int i = 0; i < 1000; ++i) order.push_back("c" + std::to_string(i));
    const auto a = random_baseline(order, 42);
    const auto b = random_baseline(order, 42);
    const auto c = random_baseline(order, 43);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.entity_id() == "random_1");
    CHECK(a.kind() == EntityKind::baseline);
    double sum = 0;
    for (const auto& r : a.rows()) {
        CHECK(*r.p_pro >= 0.0);
        CHECK(*r.p_pro < 1.0);
        sum += *r.p_pro;
    }
    CHECK(sum / 1000 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("alignment matrix is symmetric and flags degenerate and baseline cells") {
    const std::vector<PreferenceDistribution> ds = {
        dist("a", {0.1, 0.5, 0.4, 0.9}),
        dist("b", {0.2, 0.6, 0.3, 0.8}),
        dist("flat", {0.5, 0.5, 0.5, 0.5}),
        dist("base", {0.9, 0.1, 0.3, 0.2}, EntityKind::baseline),
    };
    const auto m = alignment_matrix(ds);
    CHECK(m.at("a", "a").result->rho == 1.0);
    CHECK(m.at("a", "b").result->rho == m.at("b", "a").result->rho);
    CHECK_FALSE(m.at("a", "flat").ok());
    CHECK_FALSE(m.at("a", "flat").degenerate_reason.empty());
    CHECK(m.at("a", "base").involves_baseline);
    CHECK_FALSE(m.at("a", "b").involves_baseline);
    CHECK_THROWS_AS(m.at("a", "zzz"), ValidationError);

    const std::vector<PreferenceDistribution> dup = {dist("a", {0.1, 0.2, 0.3}), dist("a", {0.3, 0.2, 0.1})};
    CHECK_THROWS_AS(alignment_matrix(dup), ValidationError);
}

TEST_CASE("significance grid orientation") {
    // The model tracks e1 closely and e2 loosely.
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 0.05);
    std::vector<std::optional<double>> m, e1, e2;
    for (int i = 0; i < 32; ++i) {
        const double x = 0.2 + 0.6 * i / 31.0;
        m.push_back(x);
        e1.push_back(std::clamp(x + g(rng), 0.0, 1.0));
        e2.push_back(std::clamp(0.5 + g(rng) * 4, 0.0, 1.0));
    }
    const std::vector<PreferenceDistribution> ents = {dist("e1", e1), dist("e2", e2)};
    const auto grid = significance_matrix(dist("m", m), ents);
    REQUIRE(grid.at(0, 1).ok());
    CHECK(grid.at(0, 1).significant);
    CHECK_FALSE(grid.at(1, 0).significant);
    CHECK(grid.at(0, 1).result->t_stat == -grid.at(1, 0).result->t_stat);
    CHECK_FALSE(grid.at(0, 0).ok());
    CHECK(grid.at(0, 1).result->n == 32);
}
