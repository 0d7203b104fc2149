#include <doctest.h>

#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>

#include "oracles.hpp"
#include "polalign/error.hpp"
#include "polalign/special_functions.hpp"

using namespace polalign;
using namespace polalign::stats;

TEST_CASE("incomplete beta agrees with Boost over a grid") {
    double worst = 0;
    for (double a : {0.5, 1.0, 1.5, 3.0, 14.5, 60.0, 250.0})
        for (double b : {0.5, 1.0, 2.5, 10.0, 100.0})
            for (double x : {0.0, 1e-6, 0.01, 0.2, 0.5, 0.77, 0.95, 0.999999, 1.0}) {
                const double got = regularized_incomplete_beta(a, b, x);
                const double ref = boost::math::ibeta(a, b, x);
                worst = std::max(worst, std::fabs(got - ref) / std::max(ref, 1e-300));
                CHECK(got == doctest::Approx(ref).epsilon(1e-10));
            }
    MESSAGE("max relative error " << worst);
}

TEST_CASE("incomplete beta endpoints and symmetry") {
    CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    for (double x : {0.1, 0.3, 0.6})
        CHECK(regularized_incomplete_beta(2.5, 4.0, x) ==
              doctest::Approx(1.0 - regularized_incomplete_beta(4.0, 2.5, 1.0 - x)).epsilon(1e-13));
    // I_x(1, 1) is the uniform CDF.
    CHECK(regularized_incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-14));
}

TEST_CASE("incomplete beta rejects invalid arguments") {
    CHECK_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), DomainError);
    CHECK_THROWS_AS(regularized_incomplete_beta(1.0, -1.0, 0.5), DomainError);
    CHECK_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, 1.5), DomainError);
    CHECK_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, std::nan("")), DomainError);
}

TEST_CASE("Student t tails agree with Boost") {
    for (double df : {1.0, 2.0, 3.0, 5.0, 29.0, 30.0, 100.0, 1000.0})
        for (double t : {-8.0, -2.5, -1.0, -0.1, 0.0, 0.3, 1.0, 2.0, 4.5, 12.0}) {
            const double sf = static_cast<double>(oracle::t_sf(t, df));
            CHECK(student_t_sf(t, df) == doctest::Approx(sf).epsilon(1e-10));
            CHECK(student_t_cdf(t, df) == doctest::Approx(1.0 - sf).epsilon(1e-10));
            CHECK(student_t_two_sided(t, df) ==
                  doctest::Approx(static_cast<double>(oracle::t_two_sided(t, df))).epsilon(1e-10));
        }
}

TEST_CASE("Student t frozen values") {
    CHECK(student_t_sf(2.0, 30.0) == doctest::Approx(frozen::t_sf_2_df30).epsilon(1e-12));
    CHECK(student_t_sf(0.5, 1.0) == doctest::Approx(frozen::t_sf_half_df1).epsilon(1e-12));
    CHECK(student_t_sf(0.0, 7.0) == 0.5);
    CHECK(student_t_two_sided(0.0, 7.0) == 1.0);
}

TEST_CASE("Student t infinite statistics and bad df") {
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(student_t_sf(inf, 10.0) == 0.0);
    CHECK(student_t_cdf(-inf, 10.0) == 0.0);
    CHECK(student_t_two_sided(inf, 10.0) == 0.0);
    CHECK_THROWS_AS(student_t_sf(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(student_t_cdf(std::nan(""), 3.0), DomainError);
}
