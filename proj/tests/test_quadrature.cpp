#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "torusflow/errors.hpp"
#include "torusflow/fourier.hpp"
#include "torusflow/quadrature.hpp"

using namespace torusflow;

TEST_CASE("adaptive quadrature on known integrals") {
    CHECK(adaptive_quadrature([](double x) { return x * x; }, 0, 1) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(adaptive_quadrature([](double x) { return std::sin(x); }, 0, kTwoPi / 2.0) ==
          doctest::Approx(2.0).epsilon(1e-12));
    // orientation flip
    CHECK(adaptive_quadrature([](double x) { return std::sin(x); }, kTwoPi / 2.0, 0) ==
          doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("sharp peak agrees with a brute-force Simpson oracle") {
    auto peak = [](double x) { return 1.0 / (1e-4 + (x - 0.37) * (x - 0.37)); };
    const double want = oracle::simpson(peak, 0, 1, 2'000'000);
    QuadratureOptions opts;
    opts.abs_tol = 1e-10;
    opts.rel_tol = 1e-10;
    CHECK(adaptive_quadrature(peak, 0, 1, opts) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("depth exhaustion raises NumericError") {
    QuadratureOptions opts;
    opts.abs_tol = 1e-14;
    opts.rel_tol = 1e-14;
    opts.max_depth = 4;
    auto wild = [](double x) { return std::sin(1.0 / (x + 1e-12)); };
    CHECK_THROWS_AS(adaptive_quadrature(wild, 0, 1, opts), NumericError);
}

TEST_CASE("torus mean: rectangle rule is exact for low trig polynomials") {
    FourierSeries f = FourierSeries::single_pair(2, {3, -2}, {0.4, 0.7}, 1.25);
    f.add_pair({1, 1}, {-0.3, 0.2});
    const double m = torus_mean([&](const Vec& x) { return f.eval(x); }, 2, 16);
    CHECK(m == doctest::Approx(1.25).epsilon(1e-13));
    // 3-d as well
    FourierSeries g = FourierSeries::single_pair(3, {1, 0, 2}, {0.9, -0.1}, -0.5);
    CHECK(torus_mean([&](const Vec& x) { return g.eval(x); }, 3, 8) ==
          doctest::Approx(-0.5).epsilon(1e-13));
}
