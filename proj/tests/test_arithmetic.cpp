#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "torusflow/arithmetic.hpp"
#include "torusflow/errors.hpp"

using namespace torusflow;

TEST_CASE("continued fraction of an exact rational terminates") {
    ContinuedFraction cf = continued_fraction(BigRat(355, 113), 32);
    CHECK(cf.terminated);
    CHECK_FALSE(cf.exhausted_precision);
    REQUIRE(cf.quotients.size() == 3);
    CHECK(cf.quotients[0] == 3);
    CHECK(cf.quotients[1] == 7);
    CHECK(cf.quotients[2] == 16);
    REQUIRE(cf.convergents.size() == 3);
    CHECK(cf.convergents[0] == std::pair<BigInt, BigInt>(3, 1));
    CHECK(cf.convergents[1] == std::pair<BigInt, BigInt>(22, 7));
    CHECK(cf.convergents[2] == std::pair<BigInt, BigInt>(355, 113));
}

TEST_CASE("negative values and integers") {
    ContinuedFraction cf = continued_fraction(BigRat(-7, 2), 8);
    // -7/2 = -4 + 1/2
    CHECK(cf.terminated);
    CHECK(cf.quotients[0] == -4);
    CHECK(cf.quotients[1] == 2);
    ContinuedFraction ci = continued_fraction(BigRat(5), 8);
    CHECK(ci.terminated);
    REQUIRE(ci.quotients.size() == 1);
    CHECK(ci.quotients[0] == 5);
}

TEST_CASE("convergents satisfy the recurrence and alternate around the value") {
    const BigRat v(103'993, 33'102); // deep in pi's expansion
    ContinuedFraction cf = continued_fraction(v, 16);
    for (std::size_t k = 2; k < cf.convergents.size(); ++k) {
        const auto& [pk, qk] = cf.convergents[k];
        const auto& [p1, q1] = cf.convergents[k - 1];
        const auto& [p2, q2] = cf.convergents[k - 2];
        CHECK(pk == cf.quotients[k] * p1 + p2);
        CHECK(qk == cf.quotients[k] * q1 + q2);
        // consecutive convergents straddle the value
        const BigRat a(p1, q1), b(pk, qk);
        CHECK(((a <= v && v <= b) || (b <= v && v <= a)));
    }
}

TEST_CASE("wide interval stops with exhausted precision") {
    ContinuedFraction cf = continued_fraction_interval(BigRat(1, 3), BigRat(1, 2), 32);
    CHECK(cf.exhausted_precision);
    CHECK_FALSE(cf.terminated);
    CHECK(cf.quotients.size() <= 2);
    CHECK_THROWS_AS(continued_fraction_interval(BigRat(1, 2), BigRat(1, 3), 8), SpecError);
}

TEST_CASE("golden ratio: all quotients 1, exponent estimate near 2") {
    PrecisionGuard guard(120);
    const BigFloat phi = (1 + sqrt(BigFloat(5))) / 2;
    ContinuedFraction cf = continued_fraction(phi, 60);
    REQUIRE(cf.quotients.size() >= 40);
    for (std::size_t k = 0; k < 40; ++k) CHECK(cf.quotients[k] == 1);
    const double mu = irrationality_exponent_estimate(cf);
    CHECK(mu == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("sqrt(2): quotients 1,2,2,2,...") {
    PrecisionGuard guard(80);
    ContinuedFraction cf = continued_fraction(sqrt(BigFloat(2)), 40);
    CHECK(cf.quotients[0] == 1);
    for (std::size_t k = 1; k < 20; ++k) CHECK(cf.quotients[k] == 2);
    CHECK(irrationality_exponent_estimate(cf) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("liouville-type value shows a large finite-depth exponent") {
    BigRat lo, hi;
    liouville_enclosure(5, lo, hi);
    ContinuedFraction cf = continued_fraction_interval(lo, hi, 400);
    const double mu = irrationality_exponent_estimate(cf);
    CHECK(mu >= 4.0); // factorial gaps push the estimate far above 2
}

TEST_CASE("exponent estimate needs enough data") {
    ContinuedFraction cf = continued_fraction(BigRat(7, 3), 8); // two quotients
    CHECK_THROWS_AS(irrationality_exponent_estimate(cf), SpecError);
}

TEST_CASE("pi bounds are tight and ordered") {
    BigRat lo, hi;
    pi_bounds(lo, hi);
    CHECK(lo < hi);
    CHECK(hi - lo == BigRat(BigInt(1), pow(BigInt(10), 49)));
    CHECK(lo < BigRat(355, 113));
    CHECK(BigRat(333, 106) < lo);
    const double mid = static_cast<double>(((lo + hi) / 2).convert_to<double>());
    CHECK(mid == doctest::Approx(3.14159265358979).epsilon(1e-14));
}

TEST_CASE("to_rational is an exact binary read") {
    PrecisionGuard guard(40);
    CHECK(to_rational(BigFloat(0.5)) == BigRat(1, 2));
    CHECK(to_rational(BigFloat(-3.75)) == BigRat(-15, 4));
    CHECK(to_rational(BigFloat(0)) == 0);
    // 0.1 is not 1/10 in binary; the exact read differs from the decimal
    CHECK(to_rational(BigFloat(0.1)) != BigRat(1, 10));
}

TEST_CASE("liouville partial sums and enclosure") {
    CHECK(liouville_partial_sum(0) == 0);
    CHECK(liouville_partial_sum(1) == BigRat(1, 10));
    CHECK(liouville_partial_sum(2) == BigRat(11, 100));
    CHECK(liouville_partial_sum(3) == BigRat(110'001, 1'000'000));
    BigRat lo, hi;
    liouville_enclosure(2, lo, hi);
    const BigRat tail = BigRat(BigInt(1), pow(BigInt(10), 6));
    CHECK(lo == BigRat(11, 100) + tail);
    CHECK(hi == BigRat(11, 100) + 2 * tail);
    // the enclosure really contains a deeper partial sum
    CHECK(lo <= liouville_partial_sum(5));
    CHECK(liouville_partial_sum(5) <= hi);
}

TEST_CASE("full construction: every certificate proves out") {
    LiouvilleConstruction c = build_liouville_construction(3, 1);
    CHECK(c.count == 3);
    CHECK(c.sign == 1);
    CHECK(c.liouville_property_ok);
    CHECK(c.qn_growth_ok);
    CHECK(c.qn_sum_ok);
    CHECK(c.positivity_ok);
    REQUIRE(c.terms.size() == 5); // n = 1 .. count+2

    SUBCASE("stored truncation data is exact") {
        const LiouvilleTerm& t3 = c.terms[2];
        CHECK(t3.n == 3);
        CHECK(t3.q == pow(BigInt(10), 6));
        CHECK(t3.p == 110'001);
        CHECK(t3.in_profile);
        CHECK(t3.in_double_profile);
        CHECK(t3.k == LatticeVector{1'000'000, -110'001});
        // r enclosure: positive, tiny, and correct vs the defining series
        CHECK(t3.r_lo > 0);
        CHECK(t3.r_lo <= t3.r_hi);
        CHECK(t3.r_hi < BigRat(BigInt(1), pow(BigInt(10), 12))); // q^{1-n} = 10^{-12}
        const BigRat r_true_lo = t3.q * c.lambda_lo - t3.p;
        CHECK(t3.r_lo <= r_true_lo);
    }
    SUBCASE("lambda and xi2 enclosures are consistent") {
        CHECK(c.lambda_lo < c.lambda_hi);
        CHECK(c.xi2_lo < c.xi2_hi);
        // xi2^2 (1 + lambda^2) = 1, proven at the interval ends
        CHECK(c.xi2_lo * c.xi2_lo * (1 + c.lambda_hi * c.lambda_hi) < 1);
        CHECK(c.xi2_hi * c.xi2_hi * (1 + c.lambda_lo * c.lambda_lo) > 1);
        PrecisionGuard guard(60);
        const BigFloat norm = c.xi1 * c.xi1 + c.xi2 * c.xi2;
        CHECK(std::abs(norm.convert_to<double>() - 1.0) < 1e-30);
        CHECK(c.xi1.convert_to<double>() ==
              doctest::Approx(0.110001 * c.xi2.convert_to<double>()).epsilon(1e-5));
    }
    SUBCASE("double-land profile carries only representable modes") {
        // q_4 = 10^24 overflows long long, so only n=3 lands in rho
        int in_double = 0;
        for (const auto& t : c.terms)
            if (t.in_double_profile) ++in_double;
        CHECK(in_double == 1);
        CHECK(c.rho.mean() == 1.0);
        CHECK(c.rho.coefficient({1'000'000, -110'001}) != std::complex<double>(0, 0));
        REQUIRE(c.divisor_override.size() == 1);
        const double over = c.divisor_override.at(LatticeVector{1'000'000, -110'001});
        // xi.k = xi2 * r_3: astronomically smaller than any naive dot product
        CHECK(std::abs(over) < 1e-17);
        CHECK(over != 0.0);
        // positivity margin: certified sum of amplitudes below 1
        CHECK(c.sum_alpha_abs_hi < 1);
        CHECK(c.sum_alpha_abs_hi > 0);
    }
    SUBCASE("the double-land field spec carries the override") {
        FieldSpec spec = liouville_field(c);
        const auto& f = std::get<StepanoffField>(spec.variant());
        CHECK(f.divisor_override.size() == 1);
        CHECK(f.xi[0] == doctest::Approx(c.xi1.convert_to<double>()));
        const Vec b0 = eval_field(spec, {0.0, 0.0});
        CHECK(b0[0] != 0.0);
    }
}

TEST_CASE("negative sign convention flips xi2") {
    LiouvilleConstruction c = build_liouville_construction(2, -1);
    CHECK(c.sign == -1);
    CHECK(c.xi2.convert_to<double>() < 0);
    CHECK(c.xi1.convert_to<double>() < 0); // xi1 = lambda * xi2
    CHECK(c.positivity_ok);
}

TEST_CASE("count gates") {
    CHECK_THROWS_AS(build_liouville_construction(-1, 1), SpecError);
    CHECK_THROWS_AS(build_liouville_construction(6, 1), SpecError);
    CHECK_THROWS_AS(build_liouville_construction(3, 0), SpecError);
    CHECK_NOTHROW(build_liouville_construction(0, 1)); // degenerate but legal
}

TEST_CASE("theta growth rows increase and clear their lower bounds") {
    LiouvilleConstruction c = build_liouville_construction(3, 1);
    auto rows = theta_at_tau_growth(c, {3, 4, 5});
    REQUIRE(rows.size() == 3);
    PrecisionGuard guard(60);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].m == 3 + static_cast<int>(i));
        CHECK(rows[i].partial_value >= rows[i].lower_bound);
        // the bound is within 2 of m (the subtracted series is tiny)
        CHECK(rows[i].lower_bound.convert_to<double>() ==
              doctest::Approx(rows[i].m).epsilon(0.5));
        if (i > 0) CHECK(rows[i].partial_value > rows[i - 1].partial_value);
    }
    CHECK_THROWS_AS(theta_at_tau_growth(c, {2}), SpecError);
    CHECK_THROWS_AS(theta_at_tau_growth(c, {6}), SpecError);
}

TEST_CASE("precision guard restores the ambient default") {
    const unsigned before = BigFloat::default_precision();
    {
        PrecisionGuard guard(300);
        CHECK(BigFloat::default_precision() == 300);
    }
    CHECK(BigFloat::default_precision() == before);
}
