#include <doctest.h>

#include <cmath>
#include <limits>

#include "mtebounds/errors.hpp"
#include "mtebounds/normal.hpp"
#include "mtebounds/quadrature.hpp"

using namespace mtebounds;

TEST_CASE("normal cdf and pdf match reference values")
{
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-14));
    CHECK(normal_cdf(-8.0) == doctest::Approx(6.220960574271785e-16).epsilon(1e-12));
    CHECK(normal_pdf(1.0) == doctest::Approx(std::exp(-0.5) / std::sqrt(2.0 * M_PI)).epsilon(1e-15));
}

TEST_CASE("normal quantile inverts the cdf across the range")
{
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    for (double p : {1e-12, 1e-6, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0 - 1e-6}) {
        double x = normal_quantile(p);
        double back = p < 0.5 ? normal_cdf(x) : 1.0 - normal_cdf(-x) ;
        CHECK(std::abs(back - p) <= 1e-14 * std::max(p, 1e-3));
    }
    CHECK(std::isinf(normal_quantile(0.0)));
    CHECK(std::isinf(normal_quantile(1.0)));
}

TEST_CASE("logistic helpers")
{
    CHECK(logistic(0.0) == 0.5);
    CHECK(logistic_pdf(0.0) == 0.25);
    CHECK(logistic(40.0) == doctest::Approx(1.0));
    CHECK(logistic(-800.0) >= 0.0);
}

TEST_CASE("adaptive quadrature on finite and infinite ranges")
{
    auto gauss = [](double x) { return std::exp(-x * x); };
    CHECK(integrate(gauss, -INFINITY, INFINITY).value == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
    CHECK(integrate(gauss, 0.0, INFINITY).value == doctest::Approx(std::sqrt(M_PI) / 2).epsilon(1e-12));
    CHECK(integrate(gauss, -INFINITY, 1.0).value ==
          doctest::Approx(std::sqrt(M_PI) / 2 * (1 + std::erf(1.0))).epsilon(1e-12));
    CHECK(integrate([](double x) { return x * x * x; }, 0.0, 2.0).value == doctest::Approx(4.0).epsilon(1e-14));
    // Integrable endpoint singularity.
    CHECK(integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0).value == doctest::Approx(2.0).epsilon(1e-9));
    // Reversed limits change sign.
    CHECK(integrate([](double x) { return x; }, 1.0, 0.0).value == doctest::Approx(-0.5));
}

TEST_CASE("quadrature reports failure instead of returning garbage")
{
    QuadratureOptions opt;
    opt.maxIntervals = 5;
    opt.absTol = 1e-15;
    opt.relTol = 1e-15;
    CHECK_THROWS_AS(integrate([](double x) { return std::sin(1.0 / x); }, 1e-6, 1.0, opt), NumericalError);
}

TEST_CASE("bisection finds roots of increasing functions and widens its bracket")
{
    CHECK(bisect_increasing([](double x) { return x * x * x - 2.0; }, 0.0, 1.0) ==
          doctest::Approx(std::cbrt(2.0)).epsilon(1e-11));
    CHECK(bisect_increasing([](double x) { return normal_cdf(x) - 0.9; }, -1.0, 1.0) ==
          doctest::Approx(1.2815515655446004).epsilon(1e-11));
}
