#include "torusflow/rotation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <random>
#include <thread>

#include "torusflow/errors.hpp"
#include "torusflow/integrator.hpp"
#include "torusflow/reporting.hpp"

namespace torusflow {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 4;
    std::size_t nt = threads > 0 ? static_cast<std::size_t>(threads) : hw;
    nt = std::min(nt, n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t w = 0; w < nt; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

RotationEstimate estimate_rotation(const FieldSpec& spec, const Vec& x, double horizon,
                                   double tol) {
    if (!(horizon >= 10)) throw SpecError("rotation estimation needs horizon >= 10");
    const double half = horizon / 2.0;
    Vec x_half;
    IntegratorOptions opts;
    opts.tol = tol;
    StepSink sink = [&](const StepView& v) {
        if (x_half.empty() && v.t1 >= half) x_half = v.at(half);
        return true;
    };
    const IntegrateStats stats = integrate_stream(spec, x, horizon, opts, sink);
    if (x_half.empty()) x_half = stats.y_end; // single-step run ending exactly at T

    RotationEstimate est;
    est.horizon = horizon;
    est.zeta = vscale(vsub(stats.y_end, x), 1.0 / horizon);
    const Vec zeta_half = vscale(vsub(x_half, x), 1.0 / half);
    est.extrapolation_error = norm2(vsub(est.zeta, zeta_half));
    est.converged = est.extrapolation_error <= 10.0 / std::sqrt(horizon);
    return est;
}

DeviationReport deviation_sup(const FieldSpec& spec, const Vec& x, const Vec& zeta,
                              double horizon, double tol) {
    if (zeta.size() != x.size()) throw SpecError("deviation_sup: zeta dimension mismatch");
    DeviationReport rep;
    rep.zeta = zeta;
    rep.horizon = horizon;
    const double grid = 0.1;
    long long next_k = 1; // t = k * grid; k = 0 gives deviation 0
    auto consider = [&](double t, const Vec& y) {
        double dev = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double di = y[i] - x[i] - t * zeta[i];
            dev += di * di;
        }
        dev = std::sqrt(dev);
        if (dev > rep.sup_deviation) {
            rep.sup_deviation = dev;
            rep.arg_time = t;
        }
    };
    IntegratorOptions opts;
    opts.tol = tol;
    StepSink sink = [&](const StepView& v) {
        while (static_cast<double>(next_k) * grid <= v.t1) {
            const double t = static_cast<double>(next_k) * grid;
            if (t >= v.t0) consider(t, v.at(t));
            ++next_k;
        }
        consider(v.t1, *v.y_end);
        return true;
    };
    integrate_stream(spec, x, horizon, opts, sink);
    return rep;
}

namespace {

// d=2: least-squares principal direction of the sampled zeta cloud.
void segment_fit(HermanSample& out) {
    std::vector<const Vec*> pts;
    for (const auto& p : out.points)
        if (!p.failed) pts.push_back(&p.estimate.zeta);
    if (pts.empty()) return;
    Vec mean(2, 0.0);
    for (const Vec* z : pts) {
        mean[0] += (*z)[0];
        mean[1] += (*z)[1];
    }
    mean[0] /= static_cast<double>(pts.size());
    mean[1] /= static_cast<double>(pts.size());
    double sxx = 0, syy = 0, sxy = 0;
    for (const Vec* z : pts) {
        const double dx = (*z)[0] - mean[0], dy = (*z)[1] - mean[1];
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const double ang = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const Vec e{std::cos(ang), std::sin(ang)};
    double pmin = 0, pmax = 0, dmax = 0;
    bool first = true;
    for (const Vec* z : pts) {
        const double dx = (*z)[0] - mean[0], dy = (*z)[1] - mean[1];
        const double along = dx * e[0] + dy * e[1];
        const double perp = std::abs(-dx * e[1] + dy * e[0]);
        if (first || along < pmin) pmin = along;
        if (first || along > pmax) pmax = along;
        dmax = std::max(dmax, perp);
        first = false;
    }
    out.seg_a = {mean[0] + pmin * e[0], mean[1] + pmin * e[1]};
    out.seg_b = {mean[0] + pmax * e[0], mean[1] + pmax * e[1]};
    out.max_line_distance = dmax;
}

// d>=3 inner approximation: maximizers of deterministic random support
// directions are hull vertices; the gap on fresh directions measures what
// the sweep may have missed.
void hull_sweep(HermanSample& out, int dim) {
    std::vector<const Vec*> pts;
    for (const auto& p : out.points)
        if (!p.failed) pts.push_back(&p.estimate.zeta);
    if (pts.empty()) return;
    std::mt19937_64 rng(0x48657268616eull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&]() {
        Vec w(dim);
        double n2 = 0;
        do {
            n2 = 0;
            for (int i = 0; i < dim; ++i) {
                w[i] = gauss(rng);
                n2 += w[i] * w[i];
            }
        } while (n2 < 1e-12);
        return vscale(w, 1.0 / std::sqrt(n2));
    };
    auto support_idx = [&](const Vec& w) {
        std::size_t best = 0;
        double bv = dot(*pts[0], w);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            const double v = dot(*pts[i], w);
            if (v > bv) {
                bv = v;
                best = i;
            }
        }
        return best;
    };
    std::vector<bool> is_vertex(pts.size(), false);
    const int sweeps = 512 * dim;
    for (int s = 0; s < sweeps; ++s) is_vertex[support_idx(draw())] = true;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (is_vertex[i]) out.hull_vertices.push_back(*pts[i]);
    double gap = 0;
    for (int s = 0; s < 256; ++s) {
        const Vec w = draw();
        double all = dot(*pts[support_idx(w)], w);
        double vert = dot(out.hull_vertices[0], w);
        for (const auto& v : out.hull_vertices) vert = std::max(vert, dot(v, w));
        gap = std::max(gap, all - vert);
    }
    out.hull_tolerance = gap;
}

} // namespace

HermanSample herman_sample(const FieldSpec& spec, const std::vector<Vec>& grid, double horizon,
                           double tol, int threads) {
    if (grid.empty()) throw SpecError("herman sampling needs a nonempty grid");
    HermanSample out;
    out.points.resize(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        HermanPoint& p = out.points[i];
        p.x = grid[i];
        try {
            p.estimate = estimate_rotation(spec, grid[i], horizon, tol);
        } catch (const std::exception& e) {
            p.failed = true;
            p.error = e.what();
        }
    });
    if (spec.dimension() == 2)
        segment_fit(out);
    else
        hull_sweep(out, spec.dimension());
    return out;
}

ZetaInvarianceReport check_zeta_invariance(const FieldSpec& spec, const Vec& x,
                                           const std::vector<double>& t_list, double horizon,
                                           double tol) {
    ZetaInvarianceReport rep;
    rep.t_list = t_list;
    const RotationEstimate base = estimate_rotation(spec, x, horizon, tol);
    rep.zeta_base = base.zeta;
    rep.all_converged = base.converged;
    IntegratorOptions opts;
    opts.tol = tol;
    for (double t : t_list) {
        const Vec xt = flow_point(spec, x, t, opts);
        const RotationEstimate et = estimate_rotation(spec, xt, horizon, tol);
        rep.all_converged = rep.all_converged && et.converged;
        rep.max_residual = std::max(rep.max_residual, norm2(vsub(et.zeta, base.zeta)));
    }
    return rep;
}

void write_rotation_csv(const std::vector<RotationRow>& rows, int dim, std::ostream& out) {
    CsvWriter csv(out);
    std::vector<std::string> cols;
    for (int i = 1; i <= dim; ++i) cols.push_back("x" + std::to_string(i));
    for (int i = 1; i <= dim; ++i) cols.push_back("zeta" + std::to_string(i));
    cols.insert(cols.end(), {"extrap_err", "sup_dev", "arg_time"});
    csv.header(cols);
    for (const auto& r : rows) {
        csv.begin_row();
        for (int i = 0; i < dim; ++i) csv.cell(r.x[i]);
        for (int i = 0; i < dim; ++i) csv.cell(r.zeta[i]);
        csv.cell(r.extrap_err);
        csv.cell(r.sup_dev);
        csv.cell(r.arg_time);
        csv.end_row();
    }
}

} // namespace torusflow
