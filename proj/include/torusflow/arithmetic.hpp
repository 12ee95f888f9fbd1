#pragma once

// Exact rational / high-precision layer: continued fractions with exact
// convergents, a finite-depth irrationality-exponent estimate, and the
// near-resonant profile construction driven by the canonical Liouville
// number lambda = sum_j 10^{-j!}. Every inequality the construction relies
// on is proven in exact rational interval arithmetic at build time; floats
// only carry reported values.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include "torusflow/field_spec.hpp"

namespace torusflow {

using BigInt = boost::multiprecision::mpz_int;
using BigRat = boost::multiprecision::mpq_rational;
using BigFloat = boost::multiprecision::mpfr_float; // variable precision

// Scoped default-precision (decimal digits) for BigFloat temporaries.
struct PrecisionGuard {
    unsigned saved;
    explicit PrecisionGuard(unsigned digits10);
    ~PrecisionGuard();
};

// Exact binary value of an mpfr float as a rational.
BigRat to_rational(const BigFloat& x);

// Certified 49-decimal-digit bounds: pi_lo < pi < pi_hi.
void pi_bounds(BigRat& lo, BigRat& hi);

struct ContinuedFraction {
    std::vector<BigInt> quotients;                      // a0, a1, ...
    std::vector<std::pair<BigInt, BigInt>> convergents; // (p_k, q_k)
    bool exhausted_precision = false; // the value's enclosure stopped deciding quotients
    bool terminated = false;          // input exactly rational, expansion complete
};

// Expansion of any value enclosed in [lo, hi]; stops with the flag set once
// the interval straddles an integer (the next quotient is unreliable).
ContinuedFraction continued_fraction_interval(BigRat lo, BigRat hi, int depth);
ContinuedFraction continued_fraction(const BigRat& value, int depth);
// Radius taken from the float's own precision.
ContinuedFraction continued_fraction(const BigFloat& value, int depth);

// Finite-depth exponent evidence: max over the deep half of the expansion
// (k >= K/2, q_k >= 2) of log q_{k+1} / log q_k + 1. Early convergents are
// excluded: q_0, q_1 are O(1) and their ratios say nothing about the tail
// (q_k = 1 would divide by log 1 = 0 outright).
double irrationality_exponent_estimate(const ContinuedFraction& cf);

// sum_{j=1}^{terms} 10^{-j!}, exact.
BigRat liouville_partial_sum(int terms);
// Enclosure of the full sum from the first `terms` terms:
// lo = partial + 10^{-(terms+1)!}, hi = partial + 2*10^{-(terms+1)!}.
void liouville_enclosure(int terms, BigRat& lo, BigRat& hi);

struct LiouvilleTerm {
    int n = 0;      // index in the defining sequence; q = 10^{n!}
    BigInt p, q;    // truncation fraction p/q of lambda
    BigRat r_lo, r_hi;   // enclosure of r = q*lambda - p (positive, tiny)
    bool in_profile = false;        // n >= 3: contributes a cosine mode
    bool in_double_profile = false; // mode and amplitude representable in doubles
    LatticeVector k;                // q e1 - p e2 (only when representable)
    BigFloat xi_dot_k;              // xi2 * r, midpoint
    BigFloat alpha;                 // 2 pi q (xi.k), midpoint
    BigFloat tau;                   // 1/(4 xi.k), midpoint
};

struct LiouvilleConstruction {
    int count = 0;    // number of profile terms (indices 3 .. count+2)
    int sign = 1;     // sign convention of xi2
    int enclosure_terms = 0; // lambda truncated after this many terms
    BigRat lambda_lo, lambda_hi; // certified enclosure of the full sum
    BigRat xi2_lo, xi2_hi;       // certified enclosure of |xi2| = 1/sqrt(1+lambda^2)
    BigFloat lambda, xi1, xi2;   // midpoints (signed)
    std::vector<LiouvilleTerm> terms; // n = 1 .. count+2

    // Certificates, each proven in exact rational arithmetic.
    bool liouville_property_ok = false; // r_n < q_n^{1-n} for every stored n
    bool qn_growth_ok = false;          // q_n >= |xi.k_{n-1}|^{1/(3-n)} + n + sum q_i
    bool qn_sum_ok = false;             // sum_{n>=3} 2 pi |xi2| q_n^{2-n} < 1
    bool positivity_ok = false;         // sum |alpha_n| < 1
    BigRat sum_alpha_abs_hi;            // certified upper bound of sum |alpha_n|

    FourierSeries rho;                                // double-land profile modes
    std::map<LatticeVector, double> divisor_override; // exact-to-double xi.k per mode
};

// Builds the construction for the canonical lambda; count <= 5 (factorial
// denominators). Throws CertificationError naming the first failed
// inequality.
LiouvilleConstruction build_liouville_construction(int count, int xi2_sign = 1);

// The double-land field: b = (1/rho) xi with the override map installed.
FieldSpec liouville_field(const LiouvilleConstruction& c);

struct ThetaGrowthRow {
    int m = 0;
    BigFloat lower_bound;   // m - (pi |xi2|/2) sum q_n^{-n} (conservative)
    BigFloat partial_value; // sum over profile terms of q_n sin((pi/2) r_n/r_m)
};

// High-precision corrector values at the probe times tau_m; the m-th term
// contributes exactly q_m.
std::vector<ThetaGrowthRow> theta_at_tau_growth(const LiouvilleConstruction& c,
                                                const std::vector<int>& m_list);

} // namespace torusflow
