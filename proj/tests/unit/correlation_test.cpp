#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "polalign/correlation.hpp"
#include "polalign/error.hpp"
#include "polalign/survey.hpp"

using namespace polalign;
using namespace polalign::stats;

namespace {

PreferenceDistribution dist(const std::string& id, std::vector<std::optional<double>> p) {
    std::vector<PreferenceRow> rows;
    for (std::size_t i = 0; i < p.size(); ++i) rows.push_back({"d" + std::to_string(i), p[i]});
    return PreferenceDistribution(id, std::move(rows));
}

}  // namespace

TEST_CASE("pearson of a hand-checked example") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    const std::vector<double> y = {2, 4, 5, 4, 5};
    // sxy = 6, sxx = 10, syy = 6.
    const auto r = pearson(x, y);
    CHECK(r.rho == doctest::Approx(6.0 / std::sqrt(60.0)).epsilon(1e-15));
    CHECK(r.n == 5);
    CHECK(r.p_value == doctest::Approx(static_cast<double>(oracle::pearson_p(r.rho, 5))).epsilon(1e-10));
}

TEST_CASE("pearson matches the definition on random data") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(40), y(40);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = g(rng) * 100 + 1e4;
            y[i] = 0.3 * x[i] + g(rng);
        }
        CHECK(pearson(x, y).rho == doctest::Approx(static_cast<double>(oracle::pearson(x, y))).epsilon(1e-12));
    }
}

TEST_CASE("perfect correlation is exactly one with p zero") {
    const std::vector<double> x = {0.1, 0.4, 0.35, 0.8, 0.5};
    const auto r = pearson(x, x);
    CHECK(r.rho == 1.0);
    CHECK(r.p_value == 0.0);
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
    CHECK(pearson(x, neg).rho == -1.0);
}

TEST_CASE("pearson rejects degenerate input") {
    const std::vector<double> flat = {0.5, 0.5, 0.5, 0.5};
    const std::vector<double> x = {1, 2, 3, 4};
    CHECK_THROWS_AS(pearson(flat, x), DegenerateInputError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InsufficientDataError);
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2, 3}), DomainError);
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2, std::nan(""), 4}), DomainError);
}

TEST_CASE("average ranks share tied positions") {
    const std::vector<double> v = {10, 20, 10, 30, 20, 10};
    const auto r = average_ranks(v);
    CHECK(r == std::vector<double>{2, 4.5, 2, 6, 4.5, 2});
    CHECK(r == oracle::ranks(v));
}

TEST_CASE("spearman with ties matches the definition") {
    const std::vector<double> x = {1, 2, 2, 3, 4, 4, 4, 5};
    const std::vector<double> y = {3, 1, 2, 2, 5, 4, 4, 6};
    CHECK(spearman(x, y).rho == doctest::Approx(static_cast<double>(oracle::spearman(x, y))).epsilon(1e-14));
}

TEST_CASE("correlation p-value symmetric in sign") {
    CHECK(correlation_p_value(0.3, 20) == doctest::Approx(correlation_p_value(-0.3, 20)).epsilon(1e-15));
    CHECK(correlation_p_value(0.0, 20) == 1.0);
    CHECK_THROWS_AS(correlation_p_value(0.3, 2), InsufficientDataError);
}

TEST_CASE("pairwise-complete rows drop missing cases on either side") {
    const auto a = dist("a", {0.1, std::nullopt, 0.3, 0.7, 0.9});
    const auto b = dist("b", {0.2, 0.5, std::nullopt, 0.6, 0.95});
    const auto cols = pairwise_complete(a, b);
    CHECK(cols.dockets == std::vector<std::string>{"d0", "d3", "d4"});
    CHECK(cols.a == std::vector<double>{0.1, 0.7, 0.9});
    CHECK(cols.b == std::vector<double>{0.2, 0.6, 0.95});
    const auto r = pearson(a, b);
    CHECK(r.entity_a == "a");
    CHECK(r.entity_b == "b");
    CHECK(r.n == 3);
}

TEST_CASE("human groups reproduce frozen values") {
    const auto ds = load_survey(std::string(POLALIGN_DATA_DIR) + "/scope_survey.json");
    const auto pub = group_distribution(ds, RespondentGroup::general_public);
    const auto rep = group_distribution(ds, RespondentGroup::republican);
    const auto dem = group_distribution(ds, RespondentGroup::democrat);
    const auto court = court_distribution(ds);
    struct Row {
        const PreferenceDistribution& a;
        const PreferenceDistribution& b;
        double rho, p;
    };
    const Row rows[] = {
        {pub, rep, frozen::rho_public_republican, frozen::p_public_republican},
        {pub, dem, frozen::rho_public_democrat, frozen::p_public_democrat},
        {rep, dem, frozen::rho_republican_democrat, frozen::p_republican_democrat},
        {pub, court, frozen::rho_public_court, frozen::p_public_court},
        {rep, court, frozen::rho_republican_court, frozen::p_republican_court},
        {dem, court, frozen::rho_democrat_court, frozen::p_democrat_court},
    };
    for (const auto& r : rows) {
        const auto got = pearson(r.a, r.b);
        CHECK(got.rho == doctest::Approx(r.rho).epsilon(1e-12));
        CHECK(got.p_value == doctest::Approx(r.p).epsilon(1e-9));
        CHECK(got.n == 32);
    }
}
