#include "torusflow/arithmetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <mpfr.h>

#include "torusflow/errors.hpp"

namespace torusflow {

using boost::multiprecision::denominator;
using boost::multiprecision::numerator;

PrecisionGuard::PrecisionGuard(unsigned digits10) : saved(BigFloat::default_precision()) {
    BigFloat::default_precision(digits10);
}
PrecisionGuard::~PrecisionGuard() { BigFloat::default_precision(saved); }

BigRat to_rational(const BigFloat& x) {
    if (x == 0) return BigRat(0);
    mpz_t z;
    mpz_init(z);
    const mpfr_exp_t e = mpfr_get_z_2exp(z, x.backend().data());
    BigInt mant(z);
    mpz_clear(z);
    BigRat r(mant);
    BigInt two(2);
    if (e >= 0)
        r *= BigRat(pow(two, static_cast<unsigned>(e)));
    else
        r /= BigRat(pow(two, static_cast<unsigned>(-e)));
    return r;
}

void pi_bounds(BigRat& lo, BigRat& hi) {
    // 3.1415926535897932384626433832795028841971693993751 (next digits 058...)
    const BigInt num("31415926535897932384626433832795028841971693993751");
    const BigInt den = pow(BigInt(10), 49u);
    lo = BigRat(num, den);
    hi = BigRat(num + 1, den);
}

namespace {

BigInt floor_rat(const BigRat& v) {
    const BigInt num = numerator(v), den = denominator(v); // den > 0 canonical
    BigInt q = num / den;                                  // truncates toward zero
    if (q * den > num) --q;
    return q;
}

BigInt factorial_big(int n) {
    BigInt f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

BigRat pow10_neg(const BigInt& e) {
    if (e > 1'000'000) throw SpecError("liouville construction: exponent out of sane range");
    return BigRat(BigInt(1), pow(BigInt(10), e.convert_to<unsigned>()));
}

double log_of_bigint(const BigInt& q) {
    PrecisionGuard guard(50);
    return log(BigFloat(q)).convert_to<double>();
}

} // namespace

ContinuedFraction continued_fraction_interval(BigRat lo, BigRat hi, int depth) {
    if (lo > hi) throw SpecError("continued fraction: empty enclosure (lo > hi)");
    if (depth < 1) throw SpecError("continued fraction: depth must be positive");
    ContinuedFraction cf;
    BigInt p1 = 1, p2 = 0, q1 = 0, q2 = 1; // p_{k-1}, p_{k-2}, q_{k-1}, q_{k-2}
    for (int k = 0; k < depth; ++k) {
        const BigInt alo = floor_rat(lo), ahi = floor_rat(hi);
        if (alo != ahi) {
            // The enclosure pins the next quotient only to [alo, ahi]. Push
            // the low end before stopping: the resulting denominator is a
            // certified lower bound on the true convergent growth, which is
            // what the exponent estimate needs at factorial-gap jumps.
            cf.quotients.push_back(alo);
            cf.convergents.emplace_back(alo * p1 + p2, alo * q1 + q2);
            cf.exhausted_precision = true;
            break;
        }
        const BigInt a = alo;
        const BigInt p = a * p1 + p2;
        const BigInt q = a * q1 + q2;
        cf.quotients.push_back(a);
        cf.convergents.emplace_back(p, q);
        p2 = p1;
        p1 = p;
        q2 = q1;
        q1 = q;
        const BigRat flo = lo - BigRat(a), fhi = hi - BigRat(a);
        if (fhi == 0) { // value == a exactly
            cf.terminated = true;
            break;
        }
        if (flo == 0) {
            if (lo == hi) {
                cf.terminated = true; // exact rational, expansion complete
            } else {
                cf.exhausted_precision = true; // next quotient unbounded on the enclosure
            }
            break;
        }
        // Next value is 1/frac; reciprocation reverses the interval ends.
        const BigRat nlo = 1 / fhi, nhi = 1 / flo;
        lo = nlo;
        hi = nhi;
    }
    return cf;
}

ContinuedFraction continued_fraction(const BigRat& value, int depth) {
    return continued_fraction_interval(value, value, depth);
}

ContinuedFraction continued_fraction(const BigFloat& value, int depth) {
    const BigRat rv = to_rational(value);
    unsigned digits = value.precision();
    if (digits < 20) digits = 20;
    const BigRat eps =
        (abs(rv) + BigRat(1, 1000)) * BigRat(BigInt(1), pow(BigInt(10), digits - 10));
    return continued_fraction_interval(rv - eps, rv + eps, depth);
}

double irrationality_exponent_estimate(const ContinuedFraction& cf) {
    const std::size_t nconv = cf.convergents.size();
    if (nconv < 5) throw SpecError("exponent estimate needs at least 5 convergents");
    const std::size_t kmax = nconv - 1; // pairs (k, k+1) for k < kmax
    std::size_t klo = kmax / 2;
    double best = 0;
    bool found = false;
    for (int pass = 0; pass < 2 && !found; ++pass) {
        for (std::size_t k = klo; k < kmax; ++k) {
            const BigInt& qk = cf.convergents[k].second;
            if (qk < 2) continue;
            const double v =
                log_of_bigint(cf.convergents[k + 1].second) / log_of_bigint(qk) + 1.0;
            best = found ? std::max(best, v) : v;
            found = true;
        }
        klo = 0; // fallback: whole range if the deep half had only q_k < 2
    }
    if (!found) throw SpecError("exponent estimate: no convergent with q >= 2");
    return best;
}

BigRat liouville_partial_sum(int terms) {
    if (terms < 0) throw SpecError("liouville partial sum: negative term count");
    BigRat s = 0;
    for (int j = 1; j <= terms; ++j) s += pow10_neg(factorial_big(j));
    return s;
}

void liouville_enclosure(int terms, BigRat& lo, BigRat& hi) {
    const BigRat partial = liouville_partial_sum(terms);
    const BigRat head = pow10_neg(factorial_big(terms + 1));
    lo = partial + head;      // the next term alone
    hi = partial + 2 * head;  // geometric tail is below one extra head term
}

namespace {

// xi2 = 1/sqrt(1+lambda^2): certified rational enclosure by exact squaring
// against the enclosure of t = 1+lambda^2.
void certify_xi2(const BigRat& lam_lo, const BigRat& lam_hi, BigRat& out_lo, BigRat& out_hi) {
    const BigRat t_lo = 1 + lam_lo * lam_lo;
    const BigRat t_hi = 1 + lam_hi * lam_hi;
    PrecisionGuard guard(2500);
    // Materialize the rational before converting: feeding a rational
    // expression template straight into the float constructor routes through
    // a generic conversion that is catastrophically slow at these sizes.
    const BigRat t_mid2 = t_lo + t_hi;
    const BigFloat xm = 1 / sqrt(BigFloat(t_mid2) / 2);
    const BigRat w = to_rational(xm);
    // The padding must cover both the float round-off in w and the spread the
    // lambda enclosure itself induces on 1/sqrt(t); the latter dominates for
    // short truncations where the enclosure is wide.
    BigRat e = (lam_hi - lam_lo) + BigRat(BigInt(1), pow(BigInt(10), 2400u));
    for (int attempt = 0; attempt < 12; ++attempt) {
        const BigRat lo = w - e, hi = w + e;
        if (lo > 0 && lo * lo * t_hi < 1 && hi * hi * t_lo > 1) {
            out_lo = lo;
            out_hi = hi;
            return;
        }
        e *= 1000;
    }
    throw NumericError("xi2 enclosure verification failed");
}

int approx_digits10(const BigRat& v) {
    const BigRat a = abs(v);
    const std::string n = numerator(a).str(), d = denominator(a).str();
    return static_cast<int>(n.size()) - static_cast<int>(d.size());
}

} // namespace

LiouvilleConstruction build_liouville_construction(int count, int xi2_sign) {
    if (count < 0 || count > 5)
        throw SpecError("liouville construction: count must be in [0,5] "
                        "(factorial denominators explode beyond that)");
    if (xi2_sign != 1 && xi2_sign != -1)
        throw SpecError("liouville construction: sign convention must be +1 or -1");

    LiouvilleConstruction c;
    c.count = count;
    c.sign = xi2_sign;
    const int nterms = count + 2;      // bookkeeping n=1,2 plus profile n=3..
    c.enclosure_terms = nterms + 1;    // lambda truncated one term deeper
    liouville_enclosure(c.enclosure_terms, c.lambda_lo, c.lambda_hi);
    certify_xi2(c.lambda_lo, c.lambda_hi, c.xi2_lo, c.xi2_hi);

    PrecisionGuard guard(2500);
    const BigRat lam_mid2 = c.lambda_lo + c.lambda_hi; // materialized, see certify_xi2
    const BigRat xi2_mid2 = c.xi2_lo + c.xi2_hi;
    c.lambda = BigFloat(lam_mid2) / 2;
    const BigFloat xi2_abs = BigFloat(xi2_mid2) / 2;
    c.xi2 = xi2_sign * xi2_abs;
    c.xi1 = c.lambda * c.xi2;
    const BigFloat pi_v = 2 * acos(BigFloat(0));

    BigRat pi_lo, pi_hi;
    pi_bounds(pi_lo, pi_hi);

    c.rho = FourierSeries(2);
    BigInt sum_q = 0; // sum of q_i over stored terms so far
    c.liouville_property_ok = true;
    c.qn_growth_ok = true;
    c.sum_alpha_abs_hi = 0;
    BigRat qn_sum = 0; // sum over profile terms of 2 pi |xi2| q^{2-n}

    for (int n = 1; n <= nterms; ++n) {
        LiouvilleTerm t;
        t.n = n;
        const BigInt nf = factorial_big(n);
        t.q = pow(BigInt(10), nf.convert_to<unsigned>());
        // p = q * partial_sum(n): integer since j! <= n! for j <= n.
        const BigRat pq = BigRat(t.q) * liouville_partial_sum(n);
        if (denominator(pq) != 1)
            throw NumericError("liouville construction: truncation fraction not integral");
        t.p = numerator(pq);
        t.r_lo = BigRat(t.q) * c.lambda_lo - BigRat(t.p);
        t.r_hi = BigRat(t.q) * c.lambda_hi - BigRat(t.p);
        if (!(t.r_lo > 0))
            throw CertificationError("liouville construction: r_" + std::to_string(n) +
                                     " not certified positive");

        // Liouville property r_n < q_n^{1-n}  (|lambda - p/q| < q^{-n}).
        const BigRat qpow = n >= 2 ? BigRat(BigInt(1), pow(t.q, static_cast<unsigned>(n - 1)))
                                   : BigRat(1);
        if (!(t.r_hi < qpow)) {
            c.liouville_property_ok = false;
            throw CertificationError("liouville construction: |q lambda - p| < q^{1-n} failed "
                                     "at n=" + std::to_string(n));
        }

        // Growth condition: n=3 reduces to q_3 >= 3 + q_1 + q_2 (the
        // exponent 1/(3-n) is singular there); n>=4 is
        // (q_n - n - sum q_i)^{n-3} * |xi.k_{n-1}| >= 1, proven with the
        // rational lower bounds.
        if (n == 3) {
            if (!(t.q >= 3 + sum_q))
                throw CertificationError("liouville construction: growth condition failed at n=3");
        } else if (n >= 4) {
            const BigInt margin = t.q - n - sum_q;
            const BigRat prev_div_lo = c.xi2_lo * c.terms.back().r_lo;
            if (!(margin > 0) ||
                !(BigRat(pow(margin, static_cast<unsigned>(n - 3))) * prev_div_lo >= 1)) {
                c.qn_growth_ok = false;
                throw CertificationError("liouville construction: growth condition failed at n=" +
                                         std::to_string(n));
            }
        }
        sum_q += t.q;

        const BigRat r_mid = (t.r_lo + t.r_hi) / 2;
        t.xi_dot_k = xi2_sign * xi2_abs * BigFloat(r_mid);
        t.alpha = 2 * pi_v * BigFloat(t.q) * t.xi_dot_k;
        t.tau = 1 / (4 * t.xi_dot_k);

        if (n >= 3) {
            t.in_profile = true;
            qn_sum += 2 * pi_hi * c.xi2_hi * BigRat(BigInt(1), pow(t.q, static_cast<unsigned>(n - 2)));
            c.sum_alpha_abs_hi += 2 * pi_hi * BigRat(t.q) * c.xi2_hi * t.r_hi;

            const BigInt i64max((std::numeric_limits<long long>::max)());
            if (t.q <= i64max && t.p <= i64max) {
                const double amp = t.alpha.convert_to<double>();
                if (std::abs(amp) > 1e-300) {
                    t.in_double_profile = true;
                    t.k = LatticeVector{t.q.convert_to<long long>(), -t.p.convert_to<long long>()};
                    c.rho.add_pair(t.k, std::complex<double>(amp / 2.0, 0.0));
                    c.divisor_override[t.k] = t.xi_dot_k.convert_to<double>();
                }
            }
        }
        c.terms.push_back(std::move(t));
    }

    c.qn_sum_ok = qn_sum < 1;
    if (!c.qn_sum_ok && count > 0)
        throw CertificationError("liouville construction: sum 2 pi |xi2| q^{2-n} < 1 failed");
    c.positivity_ok = c.sum_alpha_abs_hi < 1;
    if (!c.positivity_ok && count > 0)
        throw CertificationError("liouville construction: profile positivity sum |alpha| < 1 failed");
    c.rho = c.rho.plus_constant(1.0);
    return c;
}

FieldSpec liouville_field(const LiouvilleConstruction& c) {
    PrecisionGuard guard(2500);
    const Vec xi{c.xi1.convert_to<double>(), c.xi2.convert_to<double>()};
    FieldSpec spec = FieldSpec::stepanoff(c.rho, xi);
    std::get<StepanoffField>(spec.variant_mut()).divisor_override = c.divisor_override;
    return spec;
}

std::vector<ThetaGrowthRow> theta_at_tau_growth(const LiouvilleConstruction& c,
                                                const std::vector<int>& m_list) {
    BigRat pi_lo, pi_hi;
    pi_bounds(pi_lo, pi_hi);
    // Conservative subtracted constant: sum q_n^{-n} over stored terms plus
    // one extra head term covering the tail.
    BigRat s = 0;
    for (const auto& t : c.terms) s += BigRat(BigInt(1), pow(t.q, static_cast<unsigned>(t.n)));
    if (!c.terms.empty()) {
        const auto& last = c.terms.back();
        s += BigRat(BigInt(1), pow(last.q, static_cast<unsigned>(last.n)));
    }
    const BigRat sub = pi_hi * c.xi2_hi / 2 * s;

    std::vector<ThetaGrowthRow> rows;
    for (int m : m_list) {
        if (m < 3 || m > static_cast<int>(c.terms.size()))
            throw SpecError("theta growth: m=" + std::to_string(m) +
                            " outside the stored profile terms");
        const BigRat rm = (c.terms[m - 1].r_lo + c.terms[m - 1].r_hi) / 2;
        // Precision must cover the largest ratio r_n / r_m plus headroom.
        int need = 2500;
        for (const auto& t : c.terms) {
            if (!t.in_profile) continue;
            const BigRat ratio = ((t.r_lo + t.r_hi) / 2) / rm;
            need = std::max(need, approx_digits10(ratio) + 300);
        }
        PrecisionGuard guard(static_cast<unsigned>(need));
        const BigFloat pi_v = 2 * acos(BigFloat(0));
        BigFloat sum = 0;
        for (const auto& t : c.terms) {
            if (!t.in_profile) continue;
            const BigRat ratio = ((t.r_lo + t.r_hi) / 2) / rm;
            sum += BigFloat(t.q) * sin(pi_v / 2 * BigFloat(ratio));
        }
        ThetaGrowthRow row;
        row.m = m;
        row.partial_value = sum;
        const BigRat bound = BigRat(m) - sub;
        row.lower_bound = BigFloat(bound);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace torusflow
