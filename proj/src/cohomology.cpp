#include "torusflow/cohomology.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "torusflow/errors.hpp"
#include "torusflow/reporting.hpp"

namespace torusflow {

namespace {

Vec transversal_part(const Vec& y, const Vec& xi_unit) {
    double p = dot(y, xi_unit);
    Vec r(y);
    axpy_inplace(r, -p, xi_unit);
    return r;
}

// lattice points with |n|_inf == s in dimension d
double shell_count(int d, long long s) {
    if (s == 0) return 1;
    return std::pow(2.0 * s + 1.0, d) - std::pow(2.0 * s - 1.0, d);
}

} // namespace

double CorrectorSolution::eval(const Vec& y) const {
    const Vec yp = transversal_part(y, xi_unit);
    double s = 0;
    for (const auto& [n, c] : theta_hat) {
        const double ph = kTwoPi * n.dot(y);
        const double pp = kTwoPi * n.dot(yp);
        // Re[c (e(ph) - e(pp))]
        s += c.real() * (std::cos(ph) - std::cos(pp)) - c.imag() * (std::sin(ph) - std::sin(pp));
    }
    return s;
}

double CorrectorSolution::grad_dot_xi(const Vec& y) const {
    // The transversal family is constant along xi, so only the first family
    // contributes: sum 2 pi i (n.xi) theta_hat(n) e(n.y).
    double s = 0;
    for (const auto& [n, c] : theta_hat) {
        const double w = kTwoPi * n.dot(xi_unit);
        const double ph = kTwoPi * n.dot(y);
        // Re[i w c e(ph)] = -w (c_im cos + c_re sin)
        s += -w * (c.imag() * std::cos(ph) + c.real() * std::sin(ph));
    }
    return s;
}

FourierSeries alpha_series(const FourierSeries& rho) {
    const double m = rho.mean();
    if (!(m > 0)) throw SpecError("alpha_series: inverse profile must have positive mean");
    return rho.scaled(1.0 / m).plus_constant(-1.0);
}

CorrectorSolution solve_theta(const FourierSeries& alpha, const Vec& xi, long long cap,
                              const std::map<LatticeVector, double>* divisor_override) {
    if (alpha.dimension() != static_cast<int>(xi.size()))
        throw SpecError("solve_theta: direction dimension mismatch");
    const double xin = norm2(xi);
    if (!(xin > 0)) throw SpecError("solve_theta: direction must be nonzero");
    if (std::abs(alpha.mean()) > 1e-12 * (1.0 + alpha.sup_bound()))
        throw SpecError("solve_theta: alpha must have zero mean");

    CorrectorSolution sol;
    sol.alpha = alpha;
    sol.xi_unit = vscale(xi, 1.0 / xin);
    sol.truncation_cap = cap;
    sol.divisor_floor = std::numeric_limits<double>::infinity();

    double dropped_exact = 0; // 2 sum |theta_hat| over dropped stored modes
    for (const auto& [n, c] : alpha.coefficients()) {
        if (n.is_zero()) continue;
        double div;
        if (divisor_override) {
            auto it = divisor_override->find(n);
            if (it == divisor_override->end()) {
                auto itm = divisor_override->find(n.negated());
                div = itm != divisor_override->end() ? -itm->second : n.dot(sol.xi_unit);
            } else {
                div = it->second;
            }
        } else {
            div = n.dot(sol.xi_unit);
        }
        if (div == 0.0)
            throw NumericError("solve_theta: exact zero divisor at mode " + n.str() +
                               " (direction resonates with the lattice)");
        const std::complex<double> th = c / std::complex<double>(0.0, kTwoPi * div);
        if (cap > 0 && n.norm_inf() > cap) {
            dropped_exact += std::abs(th);
            continue;
        }
        sol.theta_hat[n] = th;
        sol.divisor_floor = std::min(sol.divisor_floor, std::abs(div));
        sol.sum_alpha_over_divisor += std::abs(c) / std::abs(div);
        sol.two_sum_theta_hat += 2.0 * std::abs(th);
    }
    if (sol.theta_hat.empty()) sol.divisor_floor = 0;

    // Decay-fit tail: least squares on log(shell max |theta_hat|) vs shell
    // index, extrapolated past the stored support. Reported only.
    sol.truncation_slack = dropped_exact;
    if (cap > 0) {
        std::map<long long, double> shell_max;
        for (const auto& [n, c] : sol.theta_hat)
            shell_max[n.norm_inf()] =
                std::max(shell_max[n.norm_inf()], std::abs(sol.theta_hat.at(n)));
        if (shell_max.size() >= 2) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (const auto& [s, v] : shell_max) {
                double lx = static_cast<double>(s), ly = std::log(v);
                sx += lx;
                sy += ly;
                sxx += lx * lx;
                sxy += lx * ly;
            }
            const double nfit = static_cast<double>(shell_max.size());
            const double denom = nfit * sxx - sx * sx;
            const double slope = (nfit * sxy - sx * sy) / denom;
            const double inter = (sy - slope * sx) / nfit;
            if (slope < 0) {
                long long smax = shell_max.rbegin()->first;
                const int d = alpha.dimension();
                for (long long s = smax + 1; s <= smax + 60; ++s)
                    sol.truncation_slack +=
                        2.0 * shell_count(d, s) * std::exp(inter + slope * static_cast<double>(s));
            } else {
                sol.slack_fit_ok = false;
            }
        } else if (!shell_max.empty()) {
            sol.slack_fit_ok = false; // one shell: no decay rate to fit
        }
    }
    return sol;
}

DivisorSums small_divisor_sum(const FourierSeries& alpha, const Vec& xi, long long cap,
                              const std::map<LatticeVector, double>* divisor_override) {
    CorrectorSolution sol = solve_theta(alpha, xi, cap, divisor_override);
    return {sol.sum_alpha_over_divisor, sol.two_sum_theta_hat, sol.divisor_floor};
}

GradientIdentityReport verify_gradient_identity(const CorrectorSolution& sol, int n_samples,
                                                double h, unsigned long long seed) {
    GradientIdentityReport rep;
    rep.samples = n_samples;
    rep.h = h;
    for (const auto& [n, c] : sol.theta_hat) {
        const std::complex<double> recon =
            c * std::complex<double>(0.0, kTwoPi * n.dot(sol.xi_unit));
        rep.coeff_max_residual =
            std::max(rep.coeff_max_residual, std::abs(recon - sol.alpha.coefficient(n)));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int d = static_cast<int>(sol.xi_unit.size());
    for (int s = 0; s < n_samples; ++s) {
        Vec y(d);
        for (int i = 0; i < d; ++i) y[i] = unif(rng);
        Vec yp(y), ym(y);
        axpy_inplace(yp, h, sol.xi_unit);
        axpy_inplace(ym, -h, sol.xi_unit);
        const double fd = (sol.eval(yp) - sol.eval(ym)) / (2.0 * h);
        rep.fd_max_residual = std::max(rep.fd_max_residual, std::abs(fd - sol.alpha.eval(y)));
    }
    return rep;
}

void write_divisor_spectrum_csv(const CorrectorSolution& sol, std::ostream& out) {
    CsvWriter csv(out);
    const int d = static_cast<int>(sol.xi_unit.size());
    std::vector<std::string> header;
    for (int i = 1; i <= d; ++i) header.push_back("n" + std::to_string(i));
    header.insert(header.end(), {"abs_alpha_hat", "abs_xi_dot_n", "abs_theta_hat"});
    csv.header(header);
    for (const auto& [n, c] : sol.theta_hat) {
        if (!n.is_canonical()) continue;
        csv.begin_row();
        for (int i = 0; i < d; ++i) csv.cell(n[i]);
        csv.cell(std::abs(sol.alpha.coefficient(n)));
        csv.cell(std::abs(c) > 0 ? std::abs(sol.alpha.coefficient(n)) / (kTwoPi * std::abs(c))
                                 : 0.0);
        csv.cell(std::abs(c));
        csv.end_row();
    }
}

} // namespace torusflow
