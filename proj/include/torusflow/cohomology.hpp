#pragma once

// Solves the directional cohomology equation grad(theta).xi = alpha for a
// zero-mean trigonometric polynomial alpha: theta_hat(n) = alpha_hat(n) /
// (2 pi i xi.n). The synthesized corrector subtracts the same series on the
// transversal through y (the component of y orthogonal to xi), so theta
// vanishes there and the flow deviation bound 2*sum|theta_hat| applies along
// orbits started on it.

#include <complex>
#include <iosfwd>
#include <map>

#include "torusflow/fourier.hpp"

namespace torusflow {

struct CorrectorSolution {
    FourierSeries alpha; // zero-mean input
    Vec xi_unit;         // normalized direction used for the divisors
    std::map<LatticeVector, std::complex<double>> theta_hat;

    double divisor_floor = 0;          // min |xi.n| over solved modes
    double sum_alpha_over_divisor = 0; // sum |alpha_hat(n)| / |xi.n| (raw)
    double two_sum_theta_hat = 0;      // 2 sum |theta_hat(n)| (deviation bound)
    // Tail estimate for the bound when the series was truncated: exact part
    // from dropped stored modes plus a decay-fit extrapolation. Reported,
    // never added to the bound.
    double truncation_slack = 0;
    bool slack_fit_ok = true;
    long long truncation_cap = 0; // 0 = full support

    double eval(const Vec& y) const;
    // Directional derivative of eval along xi_unit, synthesized from
    // theta_hat; equals alpha(y) identically.
    double grad_dot_xi(const Vec& y) const;
};

// alpha = rho / mean(rho) - 1 (zero mean by construction); mean(rho) > 0.
FourierSeries alpha_series(const FourierSeries& rho);

// cap = 0 keeps the full support; otherwise only |n|_inf <= cap is solved and
// the dropped part feeds truncation_slack. divisor_override supplies exact
// values of xi.n for modes where the double dot product would cancel
// catastrophically. Throws NumericError on an exact zero divisor.
CorrectorSolution solve_theta(const FourierSeries& alpha, const Vec& xi, long long cap = 0,
                              const std::map<LatticeVector, double>* divisor_override = nullptr);

inline double theta_eval(const CorrectorSolution& sol, const Vec& y) { return sol.eval(y); }

struct DivisorSums {
    double raw_sum = 0;          // sum |alpha_hat| / |xi.n|
    double deviation_bound = 0;  // 2 sum |theta_hat|
    double divisor_floor = 0;
};

DivisorSums small_divisor_sum(const FourierSeries& alpha, const Vec& xi, long long cap = 0,
                              const std::map<LatticeVector, double>* divisor_override = nullptr);

struct GradientIdentityReport {
    double fd_max_residual = 0;    // centered difference of eval vs alpha
    double coeff_max_residual = 0; // |2 pi i (xi.n) theta_hat(n) - alpha_hat(n)|
    int samples = 0;
    double h = 0;
};

GradientIdentityReport verify_gradient_identity(const CorrectorSolution& sol, int n_samples,
                                                double h, unsigned long long seed);

// Columns: n1..nd, abs_alpha_hat, abs_xi_dot_n, abs_theta_hat (canonical
// representatives, deterministic order).
void write_divisor_spectrum_csv(const CorrectorSolution& sol, std::ostream& out);

} // namespace torusflow
