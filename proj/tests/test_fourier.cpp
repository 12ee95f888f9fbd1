#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "torusflow/errors.hpp"
#include "torusflow/fourier.hpp"
#include "torusflow/quadrature.hpp"

using namespace torusflow;

namespace {

// Random real trig polynomial together with the raw-sum oracle description.
struct RandomSeries {
    FourierSeries f;
    double dc = 0;
    std::vector<oracle::TrigTerm> terms;
};

RandomSeries random_series(std::mt19937_64& g, int dim, int modes, long long cap = 4) {
    RandomSeries r;
    r.f = FourierSeries(dim);
    r.dc = oracle::uniform(g, -1, 1);
    r.f.add_pair(LatticeVector(std::vector<long long>(dim, 0)), r.dc);
    for (int m = 0; m < modes; ++m) {
        std::vector<long long> n(dim, 0);
        bool zero = true;
        while (zero) {
            for (auto& v : n) {
                v = static_cast<long long>(std::floor(oracle::uniform(g, -double(cap), cap + 1)));
                if (v != 0) zero = false;
            }
        }
        const double re = oracle::uniform(g, -1, 1), im = oracle::uniform(g, -1, 1);
        r.f.add_pair(LatticeVector(n), {re, im});
        // oracle stores the term as given for +n; conjugate handled by trig_sum
        r.terms.push_back({n, re, im});
    }
    return r;
}

} // namespace

TEST_CASE("eval matches a raw trigonometric sum") {
    auto g = oracle::rng(101);
    for (int rep = 0; rep < 8; ++rep) {
        const int dim = rep % 2 ? 3 : 2;
        auto rs = random_series(g, dim, 5);
        for (int k = 0; k < 10; ++k) {
            auto x = oracle::random_point(g, static_cast<std::size_t>(dim), -2, 2);
            const double want = oracle::trig_sum(rs.dc, rs.terms, x);
            CHECK(rs.f.eval(x) == doctest::Approx(want).epsilon(1e-12));
            CHECK(std::abs(rs.f.eval_complex(x).imag()) < 1e-12); // conjugate symmetry
        }
    }
}

TEST_CASE("add_pair stores the conjugate and accumulates") {
    FourierSeries f(2);
    f.add_pair({1, 2}, {0.5, -0.25});
    CHECK(f.coefficient({1, 2}) == std::complex<double>(0.5, -0.25));
    CHECK(f.coefficient({-1, -2}) == std::complex<double>(0.5, 0.25));
    f.add_pair({1, 2}, {0.1, 0.05});
    CHECK(f.coefficient({1, 2}).real() == doctest::Approx(0.6));
    CHECK(f.coefficient({1, 2}).imag() == doctest::Approx(-0.2));
    // adding through the mirrored representative lands on the same pair
    f.add_pair({-1, -2}, {0.4, 0.0});
    CHECK(f.coefficient({1, 2}).real() == doctest::Approx(1.0));
    CHECK(f.coefficient({0, 0}) == std::complex<double>(0.0, 0.0));
    CHECK(f.mean() == 0.0);

    f.set_pair({1, 2}, {1.0, 1.0});
    CHECK(f.coefficient({1, 2}) == std::complex<double>(1.0, 1.0));

    CHECK_THROWS_AS(f.add_pair({0, 0}, {0.0, 0.3}), SpecError);
    CHECK_THROWS_AS(f.add_pair({1, 0, 0}, 1.0), SpecError); // dim mismatch
}

TEST_CASE("helpers build the advertised functions") {
    // single_pair: dc + 2 Re[c e(n.x)]
    FourierSeries s = FourierSeries::single_pair(2, {1, 0}, 0.5, 2.0);
    for (double x1 : {0.0, 0.13, 0.77}) {
        CHECK(s.eval({x1, 0.4}) == doctest::Approx(2.0 + std::cos(kTwoPi * x1)).epsilon(1e-14));
    }
    // cosine_1d: dc + amp cos + amp_sin sin
    FourierSeries c = FourierSeries::cosine_1d(0.25, 3, 0.5, -0.75);
    for (double x : {0.1, 0.9, 2.3}) {
        const double want = 0.25 + 0.5 * std::cos(kTwoPi * 3 * x) - 0.75 * std::sin(kTwoPi * 3 * x);
        CHECK(c.eval({x}) == doctest::Approx(want).epsilon(1e-13));
    }
    CHECK(FourierSeries::constant(3, 4.5).eval({0.1, 0.2, 0.3}) == 4.5);
}

TEST_CASE("derivative and gradient against finite differences") {
    auto g = oracle::rng(202);
    auto rs = random_series(g, 2, 6);
    const FourierSeries d0 = rs.f.derivative(0);
    for (int k = 0; k < 6; ++k) {
        auto x = oracle::random_point(g, 2);
        const double fd = oracle::fd_derivative([&](double s) { return rs.f.eval({s, x[1]}); },
                                                x[0], 1e-5);
        CHECK(d0.eval(x) == doctest::Approx(fd).epsilon(1e-7));
        const Vec gr = rs.f.gradient(x);
        const auto og = oracle::fd_gradient([&](const Vec& p) { return rs.f.eval(p); }, x, 1e-6);
        CHECK(gr[0] == doctest::Approx(og[0]).epsilon(1e-6));
        CHECK(gr[1] == doctest::Approx(og[1]).epsilon(1e-6));
    }
    // hessian vs FD of the gradient
    const Vec x = {0.3, 0.7};
    const Mat h = rs.f.hessian(x);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double fd = oracle::fd_derivative(
                [&](double s) {
                    Vec p = x;
                    p[static_cast<std::size_t>(j)] = s;
                    return rs.f.gradient(p)[static_cast<std::size_t>(i)];
                },
                x[static_cast<std::size_t>(j)], 1e-5);
            CHECK(h(i, j) == doctest::Approx(fd).epsilon(1e-6));
        }
}

TEST_CASE("coefficient-sum bounds dominate sampled values") {
    auto g = oracle::rng(303);
    auto rs = random_series(g, 2, 5);
    double max_f = 0, max_g = 0;
    for (int k = 0; k < 400; ++k) {
        auto x = oracle::random_point(g, 2);
        max_f = std::max(max_f, std::abs(rs.f.eval(x)));
        max_g = std::max(max_g, torusflow::norm2(rs.f.gradient(x)));
    }
    CHECK(rs.f.sup_bound() >= max_f);
    CHECK(rs.f.gradient_sup_bound() >= max_g);
    CHECK(rs.f.gradient_sup_bound() == doctest::Approx(kTwoPi * rs.f.first_moment()));
}

TEST_CASE("mean equals the torus average") {
    auto g = oracle::rng(404);
    auto rs = random_series(g, 2, 4, 3);
    const double quad = torus_mean([&](const Vec& x) { return rs.f.eval(x); }, 2, 16);
    CHECK(rs.f.mean() == doctest::Approx(quad).epsilon(1e-12)); // rectangle rule exact here
}

TEST_CASE("certified_min is a true lower bound and detects positivity") {
    FourierSeries rho = FourierSeries::single_pair(2, {1, 0}, 0.5, 2.0); // 2 + cos
    const double m = rho.certified_min(64);
    CHECK(m > 0);
    CHECK(m <= 1.0 + 1e-12); // true min is 1
    auto g = oracle::rng(505);
    for (int k = 0; k < 200; ++k) CHECK(rho.eval(oracle::random_point(g, 2)) >= m);
    // finer grid tightens the bound
    CHECK(rho.certified_min(256) > rho.certified_min(16));
}

TEST_CASE("scaled, plus_constant, truncated") {
    FourierSeries f = FourierSeries::single_pair(2, {1, 0}, 0.5, 1.0);
    f.add_pair({3, 3}, {0.2, 0.1});
    const Vec x = {0.21, 0.43};
    CHECK(f.scaled(-2.0).eval(x) == doctest::Approx(-2.0 * f.eval(x)));
    CHECK(f.plus_constant(3.0).eval(x) == doctest::Approx(f.eval(x) + 3.0));
    FourierSeries t = f.truncated(1);
    CHECK(t.coefficient({3, 3}) == std::complex<double>(0, 0));
    CHECK(t.coefficient({1, 0}) == f.coefficient({1, 0}));
    CHECK(t.mean() == f.mean());
}

TEST_CASE("moment bounds on a known series") {
    // modes (1,0) and (2,2) with |c| = 0.5, 0.25 (counting both representatives)
    FourierSeries f(2);
    f.add_pair({1, 0}, 0.25);
    f.add_pair({2, 2}, {0.125, 0.0});
    CHECK(f.first_moment() ==
          doctest::Approx(2 * 0.25 * 1.0 + 2 * 0.125 * std::sqrt(8.0)).epsilon(1e-14));
    const double third = std::pow(kTwoPi, 3) *
                         (2 * 0.25 * 1.0 + 2 * 0.125 * std::pow(std::sqrt(8.0), 3));
    CHECK(f.third_moment_bound() == doctest::Approx(third).epsilon(1e-14));
}
