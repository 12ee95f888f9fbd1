#include "torusflow/integrator.hpp"

#include <cmath>
#include <limits>

#include "torusflow/errors.hpp"

namespace torusflow {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights for the quartic continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

double rms(const Vec& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

double initial_step(const OdeRhs& rhs, const Vec& y0, const Vec& f0, double horizon,
                    double h_max) {
    double fn = rms(f0);
    double h0 = 0.01 / (1.0 + fn);
    h0 = std::min({h0, h_max, horizon});
    Vec y1(y0), f1(y0.size());
    axpy_inplace(y1, h0, f0);
    rhs(h0, y1, f1);
    double der = rms(vsub(f1, f0)) / h0;
    der = std::max(der, fn);
    double h1 = der > 1e-15 ? std::pow(0.01 / der, 0.2) : std::max(1e-6, h0 * 1e2);
    return std::min({100 * h0, h1, h_max, horizon});
}

} // namespace

Vec StepView::at(double t) const {
    const double th = (t - t0) / (t1 - t0);
    const double s1 = 1.0 - th;
    const auto& rc = *rcont;
    Vec y(rc[0].size());
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = rc[0][i] + th * (rc[1][i] + s1 * (rc[2][i] + th * (rc[3][i] + s1 * rc[4][i])));
    return y;
}

IntegrateStats integrate_core(const OdeRhs& rhs, int dim, Vec y, double horizon,
                              const IntegratorOptions& opts, const StepSink* sink) {
    if (!(horizon > 0)) throw SpecError("integration horizon must be positive");
    if (!(opts.tol >= 1e-13 && opts.tol <= 1e-1))
        throw SpecError("integrator tolerance out of range");

    const std::size_t d = static_cast<std::size_t>(dim);
    Vec k1(d), k2(d), k3(d), k4(d), k5(d), k6(d), k7(d), ytmp(d), y1(d), errv(d);
    std::array<Vec, 5> rcont;
    for (auto& r : rcont) r.assign(d, 0.0);

    rhs(0.0, y, k1);
    for (double v : k1)
        if (!std::isfinite(v)) throw NumericError("field evaluation not finite at start point");

    const double h_max = opts.h_max > 0 ? opts.h_max : horizon;
    double h = opts.h_init > 0 ? std::min({opts.h_init, h_max, horizon})
                               : initial_step(rhs, y, k1, horizon, h_max);
    double t = 0.0;
    double facold = 1e-4;
    constexpr double beta = 0.08, expo1 = 0.25 - beta * 0.75;
    constexpr double safe = 0.9, fac_min = 0.2, fac_max = 5.0;

    IntegrateStats stats;
    long long nstep = 0;
    while (t < horizon) {
        if (t + h > horizon) h = horizon - t;
        if (h < 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t))
            throw NumericError(
                "step size underflow at t=" + std::to_string(t) +
                "; the requested tolerance is below the roundoff floor of this trajectory "
                "(reduce the horizon or relax tol)");
        if (++nstep > opts.max_steps)
            throw NumericError("step budget exceeded at t=" + std::to_string(t));

        for (std::size_t i = 0; i < d; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < d; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < d; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < d; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < d; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                  a65 * k5[i]);
        rhs(t + h, ytmp, k6);
        for (std::size_t i = 0; i < d; ++i)
            y1[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(t + h, y1, k7);

        for (std::size_t i = 0; i < d; ++i)
            errv[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                           e7 * k7[i]);
        double err_abs = rms(errv);
        if (!std::isfinite(err_abs)) {
            // blow-up inside the step: retry smaller
            h *= 0.25;
            ++stats.rejected;
            continue;
        }
        double err = err_abs / (opts.tol * h); // error per unit time, normalized

        double fac11 = std::pow(std::max(err, 1e-30), expo1);
        if (err <= 1.0) {
            // accept
            double fac = fac11 / std::pow(facold, beta);
            fac = std::clamp(safe / fac, fac_min, fac_max);
            facold = std::max(err, 1e-4);

            if (sink) {
                for (std::size_t i = 0; i < d; ++i) {
                    const double dy = y1[i] - y[i];
                    rcont[0][i] = y[i];
                    rcont[1][i] = dy;
                    rcont[2][i] = h * k1[i] - dy;
                    rcont[3][i] = dy - h * k7[i] - rcont[2][i];
                    rcont[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                       d6 * k6[i] + d7 * k7[i]);
                }
                StepView view{t, t + h, &y, &y1, &rcont};
                if (!(*sink)(view)) {
                    stats.stopped_early = true;
                    y = y1;
                    t += h;
                    break;
                }
            }
            y.swap(y1);
            k1.swap(k7);
            t += h;
            ++stats.accepted;
            h = std::min(h * fac, h_max);
        } else {
            ++stats.rejected;
            h *= std::clamp(safe / fac11, fac_min, 1.0);
        }
    }
    stats.y_end = y;
    stats.t_end = t;
    return stats;
}

namespace {

OdeRhs field_rhs(const FieldSpec& spec, double sign) {
    return [&spec, sign](double, const Vec& y, Vec& f) {
        Vec b = eval_field(spec, y);
        for (std::size_t i = 0; i < b.size(); ++i) f[i] = sign * b[i];
    };
}

} // namespace

Vec Trajectory::state(std::size_t i) const {
    Vec v(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) v[j] = states_flat[i * dim + j];
    return v;
}

Vec Trajectory::sample(double t) const {
    if (times.empty()) throw NumericError("sampling an empty trajectory");
    if (t <= times.front()) return state(0);
    if (t >= times.back()) return state(times.size() - 1);
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
    const double t0 = times[i], t1 = times[i + 1];
    const double th = (t - t0) / (t1 - t0), s1 = 1.0 - th;
    Vec y(static_cast<std::size_t>(dim));
    const double* r = &dense_flat[i * 4 * dim];
    for (int j = 0; j < dim; ++j) {
        double y0 = states_flat[i * dim + j];
        y[j] = y0 + th * (r[j] + s1 * (r[dim + j] + th * (r[2 * dim + j] + s1 * r[3 * dim + j])));
    }
    return y;
}

Trajectory integrate(const FieldSpec& spec, const Vec& x0, double horizon,
                     const IntegratorOptions& opts) {
    Trajectory traj;
    traj.initial = x0;
    traj.tolerance = opts.tol;
    traj.dim = spec.dimension();
    traj.times.push_back(0.0);
    traj.states_flat.insert(traj.states_flat.end(), x0.begin(), x0.end());

    constexpr long long kStorageCap = 4'000'000;
    auto rhs = field_rhs(spec, +1.0);
    StepSink sink = [&](const StepView& sv) {
        if (traj.accepted_steps() >= kStorageCap)
            throw NumericError("stored trajectory exceeds the step cap; use streaming");
        traj.times.push_back(sv.t1);
        traj.states_flat.insert(traj.states_flat.end(), sv.y_end->begin(), sv.y_end->end());
        for (int r = 1; r <= 4; ++r)
            traj.dense_flat.insert(traj.dense_flat.end(), (*sv.rcont)[r].begin(),
                                   (*sv.rcont)[r].end());
        return true;
    };
    auto stats = integrate_core(rhs, spec.dimension(), x0, horizon, opts, &sink);
    traj.rejected_steps = stats.rejected;
    return traj;
}

IntegrateStats integrate_stream(const FieldSpec& spec, const Vec& x0, double horizon,
                                const IntegratorOptions& opts, const StepSink& sink) {
    auto rhs = field_rhs(spec, +1.0);
    return integrate_core(rhs, spec.dimension(), x0, horizon, opts, &sink);
}

IntegrateStats integrate_stream_signed(const FieldSpec& spec, const Vec& x0, double t,
                                       const IntegratorOptions& opts, const StepSink& sink) {
    if (t == 0) {
        IntegrateStats s;
        s.y_end = x0;
        return s;
    }
    auto rhs = field_rhs(spec, t > 0 ? +1.0 : -1.0);
    return integrate_core(rhs, spec.dimension(), x0, std::abs(t), opts, &sink);
}

Vec flow_point(const FieldSpec& spec, const Vec& x0, double t, const IntegratorOptions& opts) {
    if (t == 0) return x0;
    auto rhs = field_rhs(spec, t > 0 ? +1.0 : -1.0);
    return integrate_core(rhs, spec.dimension(), x0, std::abs(t), opts, nullptr).y_end;
}

FlowInvariantReport verify_flow_invariants(const FieldSpec& spec, const Vec& x, double t1,
                                           double t2, const std::vector<long long>& k,
                                           double tol) {
    IntegratorOptions opts;
    opts.tol = tol;
    FlowInvariantReport rep;
    rep.tol = tol;

    Vec y1 = flow_point(spec, x, t1, opts);
    Vec y12 = flow_point(spec, y1, t2, opts);
    Vec z = flow_point(spec, x, t1 + t2, opts);
    rep.semigroup_residual = dist2(y12, z);

    Vec xk(x);
    for (std::size_t i = 0; i < xk.size(); ++i) xk[i] += static_cast<double>(k[i]);
    Vec w = flow_point(spec, xk, t1 + t2, opts);
    Vec zk(z);
    for (std::size_t i = 0; i < zk.size(); ++i) zk[i] += static_cast<double>(k[i]);
    rep.equivariance_residual = dist2(w, zk);
    return rep;
}

std::optional<PeriodicOrbit> detect_periodic_orbit(const FieldSpec& spec, const Vec& x,
                                                   double max_period, double tol) {
    if (!(max_period > 0) || max_period > 1e4)
        throw SpecError("detect_periodic_orbit: max_period must lie in (0, 1e4]");
    const int d = spec.dimension();
    Vec b0 = eval_field(spec, x);
    if (norm2(b0) <= tol) {
        PeriodicOrbit orb;
        orb.period = 1.0;
        orb.k.assign(d, 0);
        orb.residual = norm2(b0);
        return orb;
    }

    IntegratorOptions opts;
    opts.tol = std::min(1e-9, tol / 10);
    const double sup_b = field_sup_bound(spec);
    const double scan_dt = std::min(0.05, 0.2 / std::max(sup_b, 1e-12));
    Trajectory traj = integrate(spec, x, max_period + 2 * scan_dt, opts);

    auto lattice_res = [&](double t) {
        Vec dy = vsub(traj.sample(t), x);
        double s = 0;
        for (double v : dy) {
            double f = v - std::nearbyint(v);
            s += f * f;
        }
        return std::sqrt(s);
    };

    const double enter = 0.25; // coarse gate before refinement
    double rm2 = lattice_res(0.0), rm1 = lattice_res(scan_dt);
    for (double tj = 2 * scan_dt; tj <= max_period + 2 * scan_dt; tj += scan_dt) {
        double rj = lattice_res(tj);
        if (rm1 < rm2 && rm1 <= rj && rm1 < enter) {
            const double tc = tj - scan_dt;
            Vec dy = vsub(traj.sample(tc), x);
            std::vector<long long> k = round_lattice(dy);
            Vec target(x);
            for (int i = 0; i < d; ++i) target[i] += static_cast<double>(k[i]);
            Vec u = eval_field(spec, target);
            double un = norm2(u);
            if (un > 0) {
                for (double& v : u) v /= un;
                // secant on the flow-aligned return coordinate
                double ta = tj - 2 * scan_dt, tb = tj;
                auto phi = [&](double t) { return dot(vsub(traj.sample(t), target), u); };
                double fa = phi(ta), fb = phi(tb);
                for (int it = 0; it < 80 && std::abs(tb - ta) > 1e-14 * std::max(1.0, tb);
                     ++it) {
                    if (fb == fa) break;
                    double tn = tb - fb * (tb - ta) / (fb - fa);
                    tn = std::clamp(tn, tj - 2 * scan_dt, tj);
                    ta = tb;
                    fa = fb;
                    tb = tn;
                    fb = phi(tn);
                }
                double res = dist2(traj.sample(tb), target);
                if (res <= tol && tb > 0.5 * scan_dt && tb <= max_period) {
                    PeriodicOrbit orb;
                    orb.period = tb;
                    orb.k = std::move(k);
                    orb.residual = res;
                    return orb;
                }
            }
        }
        rm2 = rm1;
        rm1 = rj;
    }
    return std::nullopt;
}

} // namespace torusflow
