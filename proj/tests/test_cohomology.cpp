#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <sstream>

#include "oracles.hpp"
#include "torusflow/cohomology.hpp"
#include "torusflow/errors.hpp"

using namespace torusflow;

namespace {
const Vec kGolden = {0.8506508083520399, 0.5257311121191336};

FourierSeries random_alpha(std::mt19937_64& g, int modes, long long cap = 5) {
    FourierSeries a(2);
    for (int m = 0; m < modes; ++m) {
        std::vector<long long> n(2, 0);
        while (n[0] == 0 && n[1] == 0) {
            n[0] = static_cast<long long>(std::floor(oracle::uniform(g, -double(cap), cap + 1)));
            n[1] = static_cast<long long>(std::floor(oracle::uniform(g, -double(cap), cap + 1)));
        }
        a.add_pair(LatticeVector(n), {oracle::uniform(g, -1, 1), oracle::uniform(g, -1, 1)});
    }
    return a;
}
} // namespace

TEST_CASE("alpha_series centers the profile to zero mean") {
    FourierSeries rho = FourierSeries::single_pair(2, {1, 0}, 0.5, 2.0);
    FourierSeries a = alpha_series(rho);
    CHECK(a.mean() == 0.0);
    // alpha = rho/mean - 1 = cos(2 pi x1)/2
    CHECK(a.coefficient({1, 0}).real() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(a.eval({0.0, 0.3}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(alpha_series(FourierSeries::single_pair(2, {1, 0}, 0.5, 0.0)), SpecError);
}

TEST_CASE("coefficient identity 2 pi i (xi.n) theta_hat = alpha_hat") {
    auto g = oracle::rng(41);
    for (int rep = 0; rep < 6; ++rep) {
        FourierSeries a = random_alpha(g, 5);
        CorrectorSolution sol = solve_theta(a, kGolden);
        for (const auto& [n, th] : sol.theta_hat) {
            const std::complex<double> lhs =
                std::complex<double>(0.0, kTwoPi * n.dot(sol.xi_unit)) * th;
            const std::complex<double> rhs = a.coefficient(n);
            CHECK(std::abs(lhs - rhs) < 1e-13 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST_CASE("directional derivative reproduces alpha") {
    auto g = oracle::rng(42);
    FourierSeries a = random_alpha(g, 6);
    CorrectorSolution sol = solve_theta(a, kGolden);
    for (int k = 0; k < 12; ++k) {
        const Vec y = oracle::random_point(g, 2, -1, 2);
        CHECK(sol.grad_dot_xi(y) == doctest::Approx(a.eval(y)).epsilon(1e-11));
        // finite-difference check of eval along xi
        const double h = 1e-5;
        const Vec yp = {y[0] + h * sol.xi_unit[0], y[1] + h * sol.xi_unit[1]};
        const Vec ym = {y[0] - h * sol.xi_unit[0], y[1] - h * sol.xi_unit[1]};
        const double fd = (sol.eval(yp) - sol.eval(ym)) / (2 * h);
        CHECK(fd == doctest::Approx(a.eval(y)).epsilon(1e-5));
    }
}

TEST_CASE("corrector vanishes on the transversal through the origin") {
    auto g = oracle::rng(43);
    FourierSeries a = random_alpha(g, 5);
    CorrectorSolution sol = solve_theta(a, kGolden);
    const Vec perp = {-sol.xi_unit[1], sol.xi_unit[0]};
    for (int k = 0; k < 8; ++k) {
        const double s = oracle::uniform(g, -2, 2);
        CHECK(std::abs(sol.eval({s * perp[0], s * perp[1]})) < 1e-12);
    }
}

TEST_CASE("known series: closed-form sums for the canonical example") {
    // alpha = cos(2 pi x1)/2, golden xi: theta_hat(+-(1,0)) = (1/4)/(2 pi i xi1)
    FourierSeries a(2);
    a.add_pair({1, 0}, 0.25);
    CorrectorSolution sol = solve_theta(a, kGolden);
    const double xi1 = kGolden[0];
    CHECK(sol.two_sum_theta_hat == doctest::Approx(1.0 / (kTwoPi * xi1)).epsilon(1e-13));
    CHECK(sol.divisor_floor == doctest::Approx(xi1).epsilon(1e-15));
    CHECK(sol.sum_alpha_over_divisor == doctest::Approx(0.5 / xi1).epsilon(1e-13));
    // theta is sin(2 pi y1)/(4 pi xi1) up to the transversal offset
    const Vec y = {0.3, 0.0};
    const double raw = std::sin(kTwoPi * 0.3) / (2.0 * kTwoPi * xi1);
    const Vec yperp = vsub(y, vscale(sol.xi_unit, dot(y, sol.xi_unit)));
    const double offset = std::sin(kTwoPi * yperp[0]) / (2.0 * kTwoPi * xi1);
    CHECK(sol.eval(y) == doctest::Approx(raw - offset).epsilon(1e-12));

    DivisorSums sums = small_divisor_sum(a, kGolden);
    CHECK(sums.deviation_bound == doctest::Approx(sol.two_sum_theta_hat));
    CHECK(sums.divisor_floor == doctest::Approx(sol.divisor_floor));
    CHECK(sums.raw_sum == doctest::Approx(sol.sum_alpha_over_divisor));
}

TEST_CASE("truncation keeps low modes and reports slack") {
    FourierSeries a(2);
    a.add_pair({1, 0}, {0.5, 0.0});
    a.add_pair({3, -2}, {0.25, 0.1});
    a.add_pair({5, 4}, {0.01, -0.02});
    CorrectorSolution full = solve_theta(a, kGolden);
    CorrectorSolution cut = solve_theta(a, kGolden, 2);
    CHECK(cut.truncation_cap == 2);
    CHECK(cut.theta_hat.size() < full.theta_hat.size());
    for (const auto& [n, th] : cut.theta_hat) CHECK(n.norm_inf() <= 2);
    CHECK(cut.truncation_slack > 0);
    CHECK(cut.two_sum_theta_hat < full.two_sum_theta_hat);
    // full solution reports no slack
    CHECK(full.truncation_slack == 0.0);
}

TEST_CASE("zero-mean requirement and zero divisors") {
    FourierSeries bad(2);
    bad.add_pair({0, 0}, 0.5);
    bad.add_pair({1, 0}, 0.25);
    CHECK_THROWS_AS(solve_theta(bad, kGolden), SpecError);

    FourierSeries a(2);
    a.add_pair({0, 1}, 0.25);
    CHECK_THROWS_AS(solve_theta(a, {1.0, 0.0}), NumericError); // xi.n = 0 exactly
}

TEST_CASE("divisor override replaces a cancelling dot product") {
    FourierSeries a(2);
    a.add_pair({1, 0}, 0.25);
    std::map<LatticeVector, double> over;
    over[LatticeVector{1, 0}] = 1e-7; // pretend the true divisor is tiny
    CorrectorSolution sol = solve_theta(a, kGolden, 0, &over);
    CHECK(std::abs(sol.theta_hat.at(LatticeVector{1, 0})) ==
          doctest::Approx(0.25 / (kTwoPi * 1e-7)).epsilon(1e-12));
    CHECK(sol.divisor_floor == doctest::Approx(1e-7));
}

TEST_CASE("gradient identity report and spectrum csv") {
    auto g = oracle::rng(45);
    FourierSeries a = random_alpha(g, 4);
    CorrectorSolution sol = solve_theta(a, kGolden);
    GradientIdentityReport rep = verify_gradient_identity(sol, 40, 1e-5, 2024);
    CHECK(rep.samples == 40);
    CHECK(rep.coeff_max_residual < 1e-13);
    CHECK(rep.fd_max_residual < 1e-5);

    std::ostringstream os;
    write_divisor_spectrum_csv(sol, os);
    const std::string csv = os.str();
    CHECK(csv.find("n1,n2,abs_alpha_hat,abs_xi_dot_n,abs_theta_hat\n") == 0);
    // one line per canonical mode plus the header (theta_hat stores both +-n)
    std::size_t lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + sol.theta_hat.size() / 2);
}
