#include "torusflow/stepanoff.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "torusflow/errors.hpp"
#include "torusflow/integrator.hpp"
#include "torusflow/presets.hpp"
#include "torusflow/quadrature.hpp"

namespace torusflow {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// g with g(0) = 0 synthesized as sum of 2 Re[c (e(n.x) - 1)]: writing
// cos(phi) - 1 = -2 sin^2(phi/2) keeps full relative precision near the
// zero, where the plain dc-plus-cosines form cancels catastrophically.
double eval_vanishing_base(const FourierSeries& g, const Vec& x) {
    double s = 0;
    for (const auto& [n, c] : g.coefficients()) {
        if (!n.is_canonical() || n.is_zero()) continue;
        const double phi = kTwoPi * n.dot(x);
        const double sh = std::sin(0.5 * phi);
        s += -4.0 * c.real() * sh * sh - 2.0 * c.imag() * std::sin(phi);
    }
    return s;
}

// Harmonic mean of a = g^power when g vanishes (quadratically) at the
// lattice: 1/a = g^{-power} has an integrable r^{-2 power} singularity.
// Integrate over the cell [-1/2,1/2]^2 centered at the zero, split into four
// polar triangles r <= R(phi) = 1/(2 cos(phi - c)), and substitute r = u^m so
// the radial integrand m u^{2m-1} g(u^m ...)^{-power} stays continuous (and
// zero) at u = 0.
double vanishing_inverse_mean(const FourierSeries& g, double power) {
    if (g.dimension() != 2)
        throw SpecError("vanishing-profile harmonic mean implemented for d=2 only");
    const int m = std::max(2, static_cast<int>(std::ceil(1.0 / (1.0 - power))));

    QuadratureOptions inner_opts{1e-10, 1e-10, 48};
    QuadratureOptions outer_opts{1e-8, 1e-8, 40};

    double total = 0;
    for (int tri = 0; tri < 4; ++tri) {
        const double c_dir = tri * kPi / 2.0;
        auto per_phi = [&](double phi) {
            const double R = 0.5 / std::cos(phi - c_dir);
            const double cphi = std::cos(phi), sphi = std::sin(phi);
            auto radial = [&](double u) {
                if (u <= 0) return 0.0;
                const double r = std::pow(u, m);
                const double gval = eval_vanishing_base(g, {r * cphi, r * sphi});
                if (!(gval > 0))
                    throw NumericError("vanishing profile non-positive away from the zero");
                return m * std::pow(u, 2 * m - 1) * std::pow(gval, -power);
            };
            return adaptive_quadrature(radial, 0.0, std::pow(R, 1.0 / m), inner_opts);
        };
        total += adaptive_quadrature(per_phi, c_dir - kPi / 4.0, c_dir + kPi / 4.0, outer_opts);
    }
    return total;
}

} // namespace

StepanoffFlow StepanoffFlow::from_spec(const FieldSpec& spec) {
    if (!spec.validated()) throw SpecError("stepanoff flow: field spec not validated");
    const StepanoffField* f = std::get_if<StepanoffField>(&spec.variant());
    if (!f) {
        if (const auto* p = std::get_if<PresetField>(&spec.variant()))
            f = std::get_if<StepanoffField>(&p->preset->field.variant());
    }
    if (!f)
        throw SpecError("stepanoff flow requires a unidirectional (profile x direction) field");

    StepanoffFlow flow;
    flow.xi = f->xi;
    flow.vanishing = f->vanishing;
    flow.divisor_override = f->divisor_override;
    if (f->vanishing) {
        flow.profile_base = f->profile_base;
        flow.power = f->power;
        flow.underline_a = 1.0 / vanishing_inverse_mean(f->profile_base, f->power);
    } else {
        flow.rho = f->rho;
        flow.rho_min = f->rho_min_cert;
        flow.rho_max = f->rho_max_bound;
        if (!(flow.rho.mean() > 0)) throw SpecError("profile mean must be positive");
        flow.underline_a = 1.0 / flow.rho.mean();
    }
    return flow;
}

double StepanoffFlow::xi_dot(const LatticeVector& n) const {
    auto it = divisor_override.find(n);
    if (it != divisor_override.end()) return it->second;
    it = divisor_override.find(n.negated());
    if (it != divisor_override.end()) return -it->second;
    return n.dot(xi);
}

bool incommensurable_on_box(const Vec& xi, long long box, double tol) {
    const int d = static_cast<int>(xi.size());
    std::vector<long long> n(d, -box);
    while (true) {
        bool zero = true;
        for (long long v : n)
            if (v != 0) zero = false;
        if (!zero) {
            double s = 0;
            for (int i = 0; i < d; ++i) s += static_cast<double>(n[i]) * xi[i];
            if (std::abs(s) <= tol) return false;
        }
        int i = 0;
        for (; i < d; ++i) {
            if (++n[i] <= box) break;
            n[i] = -box;
        }
        if (i == d) break;
    }
    return true;
}

namespace {

// Termwise F_y(sigma) for the non-vanishing profile. Each mode pair
// contributes 2 Re[c e(n.y)] integrated along the ray:
//   omega = 2 pi (xi.n);  int_0^sigma cos(phi0 + omega s) ds
// evaluated as (4 sin(omega sigma / 2) / omega) Re[w e^{i omega sigma / 2}]
// with w = c e(n.y) -- no cancellation as omega -> 0 (sin(x)/x form).
double profile_integral_closed(const StepanoffFlow& flow, const Vec& y, double sigma) {
    double F = flow.rho.mean() * sigma;
    for (const auto& [n, c] : flow.rho.coefficients()) {
        if (!n.is_canonical() || n.is_zero()) continue;
        const std::complex<double> w =
            c * std::polar(1.0, kTwoPi * n.dot(y)); // e(n.y) has no divisor issue
        const double omega = kTwoPi * flow.xi_dot(n);
        if (omega == 0.0) {
            F += 2.0 * w.real() * sigma;
        } else {
            const double half = 0.5 * omega * sigma;
            F += 4.0 * std::sin(half) / omega * (w * std::polar(1.0, half)).real();
        }
    }
    return F;
}

double vanishing_a(const StepanoffFlow& flow, const Vec& x) {
    const double g = eval_vanishing_base(flow.profile_base, x);
    return g > 0 ? std::pow(g, flow.power) : 0.0;
}

// sigma(t) for the vanishing profile: 1-D adaptive ODE along the ray.
double vanishing_sigma(const StepanoffFlow& flow, const Vec& y, double t, double tol) {
    if (t == 0) return 0;
    const int d = static_cast<int>(y.size());
    OdeRhs rhs = [&](double, const Vec& s, Vec& f) {
        Vec x(y);
        for (int i = 0; i < d; ++i) x[i] += s[0] * flow.xi[i];
        f[0] = vanishing_a(flow, x);
    };
    if (t < 0) throw SpecError("vanishing-profile flow implemented forward in time only");
    IntegratorOptions opts;
    opts.tol = tol;
    return integrate_core(rhs, 1, Vec{0.0}, t, opts, nullptr).y_end[0];
}

} // namespace

double profile_integral(const StepanoffFlow& flow, const Vec& y, double sigma) {
    if (static_cast<int>(y.size()) != static_cast<int>(flow.xi.size()))
        throw SpecError("profile_integral: point dimension mismatch");
    if (!flow.vanishing) return profile_integral_closed(flow, y, sigma);

    // Vanishing mode: the integrand 1/a blows up non-integrably at a ray hit.
    auto hit = sigma >= 0 ? forward_lattice_hit(y, flow.xi, sigma)
                          : forward_lattice_hit(y, vscale(flow.xi, -1.0), -sigma);
    if (hit && hit->tau <= std::abs(sigma))
        throw NumericError("profile integral diverges: the ray meets the profile zero at sigma=" +
                           std::to_string(sigma >= 0 ? hit->tau : -hit->tau));
    auto integrand = [&](double s) {
        Vec x(y);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * flow.xi[i];
        const double g = eval_vanishing_base(flow.profile_base, x);
        if (!(g > 0)) throw NumericError("profile integrand hit a non-positive value");
        return std::pow(g, -flow.power);
    };
    return adaptive_quadrature(integrand, 0.0, sigma, {1e-10, 1e-10, 48});
}

double flow_parameter(const StepanoffFlow& flow, const Vec& y, double t, double tol) {
    if (t == 0) return 0;
    if (flow.vanishing) {
        if (lattice_distance(y) <= 1e-13) return 0; // equilibrium
        return vanishing_sigma(flow, y, t, std::max(tol, 1e-12));
    }
    if (!(flow.rho_min > 0)) throw SpecError("flow inversion needs certified rho bounds");
    // rho_min sigma <= F(sigma) <= rho_max sigma gives a guaranteed bracket.
    double lo = (t > 0) ? t / flow.rho_max : t / flow.rho_min;
    double hi = (t > 0) ? t / flow.rho_min : t / flow.rho_max;
    double flo = profile_integral_closed(flow, y, lo) - t;
    double fhi = profile_integral_closed(flow, y, hi) - t;
    if (flo > 0 || fhi < 0) { // roundoff at the ends: widen slightly
        const double pad = 2.0 * tol / flow.rho_min + 1e-15 * std::abs(t);
        lo -= pad;
        hi += pad;
        flo = profile_integral_closed(flow, y, lo) - t;
        fhi = profile_integral_closed(flow, y, hi) - t;
        if (flo > 0 || fhi < 0)
            throw NumericError("profile inversion bracket failed (inconsistent rho bounds)");
    }
    double s = t * flow.underline_a; // F ~ sigma / underline_a on average
    s = std::clamp(s, lo, hi);
    for (int it = 0; it < 200; ++it) {
        Vec x(y);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * flow.xi[i];
        const double F = profile_integral_closed(flow, y, s) - t;
        if (std::abs(F) <= tol) return s;
        if (F > 0)
            hi = s;
        else
            lo = s;
        const double drho = flow.rho.eval(x);
        double step = F / drho;
        double snew = s - step;
        if (!(snew > lo && snew < hi)) snew = 0.5 * (lo + hi); // safeguard: bisect
        if (snew == s) return s;                               // interval at roundoff floor
        s = snew;
    }
    throw NumericError("profile inversion did not converge to tolerance " + std::to_string(tol));
}

Vec flow_exact(const StepanoffFlow& flow, const Vec& y, double t, double tol) {
    const double s = flow_parameter(flow, y, t, tol);
    Vec x(y);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * flow.xi[i];
    return x;
}

CommensurableReport commensurable_zeta(const StepanoffFlow& flow, const Vec& y, double T,
                                       double lattice_tol) {
    if (flow.vanishing)
        throw SpecError("commensurable averaging requires a strictly positive profile");
    if (!(T > 0)) throw SpecError("commensurable averaging needs T > 0");
    const int d = static_cast<int>(flow.xi.size());
    CommensurableReport rep;
    rep.k.resize(d);
    for (int i = 0; i < d; ++i) {
        rep.k[i] = std::llround(T * flow.xi[i]);
        if (std::abs(T * flow.xi[i] - static_cast<double>(rep.k[i])) > lattice_tol)
            throw SpecError("T*xi is not a lattice vector within tolerance (component " +
                            std::to_string(i) + ")");
    }
    // Over a full period, modes with n.k != 0 integrate to exactly zero;
    // modes with n.k == 0 are constant along the ray.
    double mean = flow.rho.mean();
    for (const auto& [n, c] : flow.rho.coefficients()) {
        if (!n.is_canonical() || n.is_zero()) continue;
        if (n.dot_int(rep.k) != 0) continue;
        mean += 2.0 * (c * std::polar(1.0, kTwoPi * n.dot(y))).real();
    }
    if (!(mean > 0)) throw CertificationError("ray average of rho came out non-positive");
    rep.mean_rho_ray = mean;
    rep.m = 1.0 / mean;
    rep.zeta = vscale(flow.xi, rep.m);
    rep.period_time = mean * T;
    return rep;
}

std::optional<RayHit> forward_lattice_hit(const Vec& y, const Vec& xi, double range) {
    if (y.size() != 2 || xi.size() != 2)
        throw SpecError("ray-hit search implemented for d=2 only");
    const double nrm = std::sqrt(dot(xi, xi));
    if (!(nrm > 0)) throw SpecError("ray-hit search needs a nonzero direction");
    const Vec u{xi[0] / nrm, xi[1] / nrm};
    // Walk the ray in unit steps; test the four lattice corners around each
    // position for (near-)zero perpendicular distance to the line.
    const double perp_tol = 1e-7;
    std::optional<RayHit> best;
    const long long nsteps = static_cast<long long>(std::ceil(range * nrm)) + 1;
    for (long long step = 0; step <= nsteps; ++step) {
        const double s = static_cast<double>(step);
        const double px = y[0] + s * u[0], py = y[1] + s * u[1];
        for (int dx = 0; dx <= 1; ++dx) {
            for (int dy = 0; dy <= 1; ++dy) {
                const double kx = std::floor(px) + dx, ky = std::floor(py) + dy;
                const double rx = kx - y[0], ry = ky - y[1];
                const double along = rx * u[0] + ry * u[1];
                if (along < -perp_tol || along > range * nrm + 1.0) continue;
                const double perp = std::abs(-rx * u[1] + ry * u[0]);
                if (perp > perp_tol) continue;
                const double tau = along / nrm; // y + tau*xi = k
                if (tau < -1e-12 || tau > range) continue;
                if (!best || tau < best->tau)
                    best = RayHit{std::max(tau, 0.0),
                                  {static_cast<long long>(std::llround(kx)),
                                   static_cast<long long>(std::llround(ky))}};
            }
        }
    }
    return best;
}

VanishingClass vanishing_analysis(const StepanoffFlow& flow, const Vec& y, double horizon,
                                  double scan_range) {
    if (!flow.vanishing)
        throw SpecError("vanishing analysis applies to vanishing profiles only");
    if (y.size() != 2) throw SpecError("vanishing analysis implemented for d=2 only");
    if (!incommensurable_on_box(flow.xi, 32, 1e-10))
        throw CertificationError(
            "vanishing analysis requires an incommensurable direction (box-32 check failed)");

    VanishingClass out;
    out.zeta = Vec(2, 0.0);
    if (lattice_distance(y) <= 1e-12) {
        out.category = 1;
        out.limit_point = {std::round(y[0]), std::round(y[1])};
        return out;
    }

    if (auto hit = forward_lattice_hit(y, flow.xi, scan_range)) {
        // Refine tau by minimizing g along the ray near the candidate, then
        // gate on the minimum actually being a zero (a near miss is not).
        auto dg_along = [&](double s) {
            Vec x{y[0] + s * flow.xi[0], y[1] + s * flow.xi[1]};
            return dot(flow.profile_base.gradient(x), flow.xi);
        };
        const double nrm = std::sqrt(dot(flow.xi, flow.xi));
        double lo = hit->tau - 0.25 / nrm, hi = hit->tau + 0.25 / nrm;
        if (dg_along(lo) < 0 && dg_along(hi) > 0) {
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                (dg_along(mid) < 0 ? lo : hi) = mid;
            }
        }
        const double tau = 0.5 * (lo + hi);
        Vec xm{y[0] + tau * flow.xi[0], y[1] + tau * flow.xi[1]};
        if (std::abs(flow.profile_base.eval(xm)) <= 1e-12 && tau >= 0) {
            out.category = 2;
            out.tau = tau;
            out.limit_point = {static_cast<double>(hit->k[0]), static_cast<double>(hit->k[1])};
            out.sigma_end = vanishing_sigma(flow, y, horizon, 1e-10);
            return out;
        }
    }

    out.category = 3;
    const double s_full = vanishing_sigma(flow, y, horizon, 1e-10);
    const double s_half = vanishing_sigma(flow, y, horizon / 2.0, 1e-10);
    out.sigma_end = s_full;
    out.zeta = vscale(flow.xi, s_full / horizon);
    const Vec zeta_half = vscale(flow.xi, s_half / (horizon / 2.0));
    out.zeta_error = norm2(vsub(out.zeta, zeta_half));
    return out;
}

std::vector<LargeDeviationRow> large_deviation_demo(const StepanoffFlow& flow,
                                                    const std::vector<double>& tau_list,
                                                    const Vec& v, double horizon) {
    if (!flow.vanishing)
        throw SpecError("large-deviation demo applies to vanishing profiles only");
    if (v.size() != flow.xi.size()) throw SpecError("direction v dimension mismatch");
    std::vector<LargeDeviationRow> rows;
    const double xiv = dot(flow.xi, v);
    for (double tau : tau_list) {
        if (tau < 0) throw SpecError("tau must be nonnegative");
        LargeDeviationRow row;
        row.tau = tau;
        const int d = static_cast<int>(flow.xi.size());
        row.k.resize(d);
        row.x.resize(d);
        for (int i = 0; i < d; ++i) {
            row.k[i] = std::llround(tau * flow.xi[i]);
            row.x[i] = static_cast<double>(row.k[i]) - tau * flow.xi[i];
        }
        const double sigma = vanishing_sigma(flow, row.x, horizon, 1e-10);
        row.measured = sigma * xiv;
        row.predicted = tau * xiv;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace torusflow
