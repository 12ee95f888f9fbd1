#include "torusflow/construct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <nlohmann/json.hpp>

#include "torusflow/errors.hpp"

namespace torusflow {

using nlohmann::json;

namespace {

// Cell-center grid over the torus; max distance from any point to a center
// is sqrt(d)/(2n), which feeds the Lipschitz slack below.
template <typename F>
void for_grid(int dim, int n, F&& fn) {
    std::vector<int> idx(dim, 0);
    Vec x(static_cast<std::size_t>(dim), 0.0);
    while (true) {
        for (int i = 0; i < dim; ++i) x[static_cast<std::size_t>(i)] = (idx[i] + 0.5) / n;
        fn(x);
        int c = 0;
        while (c < dim && ++idx[c] == n) {
            idx[c] = 0;
            ++c;
        }
        if (c == dim) break;
    }
}

double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// Uniform bound for every entry of grad Psi.
double jac_entry_bound(const Mat& m, const std::vector<FourierSeries>& ps) {
    double e = 0;
    const int d = m.n;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            e = std::max(e, std::abs(m(i, j)) + ps[static_cast<std::size_t>(i)].derivative(j).sup_bound());
    return e;
}

std::string point_str(const Vec& x) {
    std::string s = "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(x[i]);
    }
    return s + ")";
}

// c_i = sum_j w_j f_j accumulated on canonical modes only, so each conjugate
// pair is inserted exactly once.
FourierSeries series_combination(const std::vector<FourierSeries>& fs, const Vec& w, int dim) {
    FourierSeries r(dim);
    for (std::size_t j = 0; j < fs.size(); ++j) {
        if (w[j] == 0.0) continue;
        for (const auto& [n, c] : fs[j].coefficients()) {
            if (!n.is_canonical()) continue;
            r.add_pair(n, w[j] * c);
        }
    }
    return r;
}

} // namespace

Vec DiffeoSpec::psi(const Vec& x) const {
    Vec y = m.apply(x);
    for (int i = 0; i < dim(); ++i) y[static_cast<std::size_t>(i)] += psi_sharp[static_cast<std::size_t>(i)].eval(x);
    return y;
}

Mat DiffeoSpec::psi_jacobian(const Vec& x) const {
    const int d = dim();
    Mat j = m;
    for (int i = 0; i < d; ++i) {
        Vec g = psi_sharp[static_cast<std::size_t>(i)].gradient(x);
        for (int c = 0; c < d; ++c) j(i, c) += g[static_cast<std::size_t>(c)];
    }
    return j;
}

Vec DiffeoSpec::phi(const Vec& x) const {
    Vec s(static_cast<std::size_t>(dim()));
    for (int i = 0; i < dim(); ++i) s[static_cast<std::size_t>(i)] = psi_sharp[static_cast<std::size_t>(i)].eval(x);
    return vscale(m_inv.apply(s), -1.0);
}

Vec DiffeoSpec::psi_inverse(const Vec& y, double tol) const {
    const int d = dim();
    Vec mean_sharp(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) mean_sharp[static_cast<std::size_t>(i)] = psi_sharp[static_cast<std::size_t>(i)].mean();
    Vec z = m_inv.apply(vsub(y, mean_sharp));
    const double eps = tol * (1.0 + norm_inf(y));
    for (int it = 0; it < 100; ++it) {
        const Vec r = vsub(psi(z), y);
        const double rn = norm2(r);
        if (rn <= eps) return z;
        const Vec step = solve(psi_jacobian(z), r);
        double lam = newton_damping;
        bool improved = false;
        for (int half = 0; half < 40; ++half) {
            Vec zt = z;
            axpy_inplace(zt, -lam, step);
            if (norm2(vsub(psi(zt), y)) < rn) {
                z = std::move(zt);
                improved = true;
                break;
            }
            lam *= 0.5;
        }
        if (!improved) {
            if (rn <= 64 * eps) return z; // roundoff floor for distant lift points
            throw NumericError("Psi inversion stalled at residual " + std::to_string(rn));
        }
    }
    throw NumericError("Psi inversion did not converge");
}

DiffeoSpec make_diffeo(Mat m_int, std::vector<FourierSeries> psi_sharp, int grid) {
    const int d = static_cast<int>(psi_sharp.size());
    if (d < 1) throw SpecError("diffeo needs at least one component");
    if (m_int.n != d) throw SpecError("diffeo linear part dimension mismatch");
    if (grid < 2) throw SpecError("diffeo certification grid must have >= 2 nodes per axis");
    for (int i = 0; i < d; ++i) {
        if (psi_sharp[static_cast<std::size_t>(i)].dimension() != d)
            throw SpecError("diffeo periodic part dimension mismatch in component " + std::to_string(i));
        for (int j = 0; j < d; ++j) {
            const double v = m_int(i, j);
            if (std::abs(v - std::nearbyint(v)) > 1e-9)
                throw SpecError("diffeo linear part must have integer entries");
            m_int(i, j) = std::nearbyint(v);
        }
    }
    const double detm = determinant(m_int);
    if (std::abs(std::abs(detm) - 1.0) > 1e-9)
        throw CertificationError("diffeo linear part is not unimodular (det = " + std::to_string(detm) + ")");

    DiffeoSpec s;
    s.m = std::move(m_int);
    s.psi_sharp = std::move(psi_sharp);
    s.m_inv = inverse(s.m);

    // Certify det grad Psi != 0: grid minimum minus a Lipschitz slack that
    // covers every point of each cell.
    double dmin = std::numeric_limits<double>::infinity();
    bool seen_pos = false, seen_neg = false;
    for_grid(d, grid, [&](const Vec& x) {
        const double v = determinant(s.psi_jacobian(x));
        (v > 0 ? seen_pos : seen_neg) = true;
        dmin = std::min(dmin, std::abs(v));
    });
    if (seen_pos && seen_neg)
        throw CertificationError("det grad Psi changes sign on the certification grid");
    const double entry = jac_entry_bound(s.m, s.psi_sharp);
    double second = 0; // bound for |grad of any grad-Psi entry|
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            second = std::max(second, s.psi_sharp[static_cast<std::size_t>(i)].derivative(j).gradient_sup_bound());
    // |grad det| <= d! * d * entry^{d-1} * second (product rule over each of
    // the d! signed products of d entries).
    const double lip = factorial(d) * d * std::pow(entry, d - 1) * second;
    const double slack = lip * std::sqrt(static_cast<double>(d)) / (2.0 * grid);
    if (!(dmin - slack > 0))
        throw CertificationError("det grad Psi not certified nonzero: grid min |det| = " +
                                 std::to_string(dmin) + ", Lipschitz slack = " + std::to_string(slack));
    s.det_min = dmin - slack;

    // Contraction rate of the fixed-point form z -> M^{-1}(y - psi_sharp(z))
    // gates the first Newton step; backtracking handles the rest.
    double maxgrad = 0;
    for (int i = 0; i < d; ++i)
        maxgrad = std::max(maxgrad, s.psi_sharp[static_cast<std::size_t>(i)].gradient_sup_bound());
    const double kappa = s.m_inv.max_abs() * d * maxgrad;
    s.newton_damping = kappa < 1.0 ? 1.0 : 1.0 / (1.0 + kappa);
    return s;
}

namespace {

class DiffeoProductBackend final : public FieldBackend {
public:
    DiffeoProductBackend(DiffeoSpec psi, std::vector<FourierSeries> zeta, double sup, double tol)
        : psi_(std::move(psi)), zeta_(std::move(zeta)), sup_(sup), tol_(tol) {}

    int dimension() const override { return psi_.dim(); }

    Vec eval_zeta(const Vec& x) const {
        Vec z(static_cast<std::size_t>(dimension()));
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = zeta_[i].eval(x);
        return z;
    }

    Vec eval(const Vec& x) const override { return solve(psi_.psi_jacobian(x), eval_zeta(x)); }

    std::optional<Vec> exact_flow(double t, const Vec& x) const override {
        Vec target = psi_.psi(x);
        axpy_inplace(target, t, eval_zeta(x));
        return psi_.psi_inverse(target);
    }

    double sup_bound() const override { return sup_; }

    json serialize() const override {
        json p;
        p["builder"] = "diffeo";
        p["tol"] = tol_;
        json rows = json::array();
        for (int i = 0; i < psi_.m.n; ++i) {
            json row = json::array();
            for (int j = 0; j < psi_.m.n; ++j) row.push_back(psi_.m(i, j));
            rows.push_back(row);
        }
        p["m"] = rows;
        json sharp = json::array();
        for (const auto& f : psi_.psi_sharp) sharp.push_back(fourier_to_json(f));
        p["psi_sharp"] = sharp;
        json zs = json::array();
        for (const auto& f : zeta_) zs.push_back(fourier_to_json(f));
        p["zeta"] = zs;
        return p;
    }

private:
    DiffeoSpec psi_;
    std::vector<FourierSeries> zeta_;
    double sup_;
    double tol_;
};

} // namespace

std::pair<FieldSpec, CoboundaryCorrector> build_from_diffeo(const DiffeoSpec& psi,
                                                            const std::vector<FourierSeries>& zeta,
                                                            double tol, int grid) {
    const int d = psi.dim();
    if (static_cast<int>(zeta.size()) != d) throw SpecError("zeta needs one series per dimension");
    for (const auto& zi : zeta)
        if (zi.dimension() != d) throw SpecError("zeta component dimension mismatch");
    if (psi.det_min <= 0) throw SpecError("diffeo is not certified; build it with make_diffeo");
    if (grid < 2) throw SpecError("compatibility grid must have >= 2 nodes per axis");
    if (!(tol > 0)) throw SpecError("tolerance must be positive");

    // Compatibility gate: grad(zeta) (grad Psi)^{-1} zeta = 0.
    double worst = 0;
    Vec worst_x;
    for_grid(d, grid, [&](const Vec& x) {
        Vec zx(static_cast<std::size_t>(d));
        Mat dz(d);
        for (int i = 0; i < d; ++i) {
            zx[static_cast<std::size_t>(i)] = zeta[static_cast<std::size_t>(i)].eval(x);
            Vec g = zeta[static_cast<std::size_t>(i)].gradient(x);
            for (int j = 0; j < d; ++j) dz(i, j) = g[static_cast<std::size_t>(j)];
        }
        const double rn = norm2(dz.apply(solve(psi.psi_jacobian(x), zx)));
        if (rn > worst) {
            worst = rn;
            worst_x = x;
        }
    });
    if (worst > tol)
        throw CertificationError("compatibility grad(zeta)(grad Psi)^{-1} zeta = 0 fails: residual " +
                                 std::to_string(worst) + " at " + point_str(worst_x));

    // Certified |b| <= ||adj grad Psi||_F |zeta| / min|det|, with adjugate
    // entries bounded by (d-1)! entry^{d-1}.
    double zeta_sup_sq = 0;
    for (const auto& zi : zeta) zeta_sup_sq += zi.sup_bound() * zi.sup_bound();
    const double entry = jac_entry_bound(psi.m, psi.psi_sharp);
    const double sup =
        d * factorial(d - 1) * std::pow(entry, d - 1) * std::sqrt(zeta_sup_sq) / psi.det_min;

    auto backend = std::make_shared<DiffeoProductBackend>(psi, zeta, sup, tol);
    FieldSpec spec = FieldSpec::constructed(backend);

    CoboundaryCorrector corr;
    DiffeoSpec psi_copy = psi;
    corr.phi = [psi_copy](const Vec& x) { return psi_copy.phi(x); };
    const Mat minv = psi.m_inv;
    const auto zeta_copy = zeta;
    corr.zeta = [minv, zeta_copy, d](const Vec& x) {
        Vec z(static_cast<std::size_t>(d));
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = zeta_copy[i].eval(x);
        return minv.apply(z);
    };
    corr.periodic = true;
    corr.bounded = true;
    double cb_sq = 0;
    for (int i = 0; i < d; ++i) {
        double row = 0;
        for (int j = 0; j < d; ++j)
            row += std::abs(minv(i, j)) * psi.psi_sharp[static_cast<std::size_t>(j)].sup_bound();
        cb_sq += row * row;
    }
    corr.certified_bound = std::sqrt(cb_sq);
    double sampled = 0;
    for_grid(d, grid, [&](const Vec& x) { sampled = std::max(sampled, norm2(corr.phi(x))); });
    corr.sampled_sup = sampled;
    corr.note = "diffeo product (rotation map is M^{-1} zeta)";
    return {std::move(spec), std::move(corr)};
}

namespace {

// Hitting time of {u = 0} along the orbit of p. The sign of u(p) picks the
// integration direction (u increases along the flow when b.grad u > 0).
double equipotential_tau(const FieldSpec& spec, const LinearPlusPeriodic& u, const Vec& p,
                         double tol, double horizon) {
    const double u0 = u.eval(p);
    if (u0 == 0.0) return 0.0;
    const double dir = u0 > 0 ? -1.0 : 1.0;
    IntegratorOptions opts;
    opts.tol = std::min(tol, 1e-10);
    double found = 0;
    bool crossed = false;
    auto sink = [&](const StepView& v) -> bool {
        const double ua = u.eval(*v.y_begin);
        const double ub = u.eval(*v.y_end);
        if ((ua <= 0) == (ub <= 0)) return true;
        double lo = v.t0, hi = v.t1;
        double glo = ua;
        for (int i = 0; i < 100 && hi - lo > 1e-16 * (1.0 + hi); ++i) {
            const double mid = 0.5 * (lo + hi);
            const double gm = u.eval(v.at(mid));
            if ((gm <= 0) == (glo <= 0)) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        found = 0.5 * (lo + hi);
        crossed = true;
        return false;
    };
    integrate_stream_signed(spec, p, dir * horizon, opts, sink);
    if (!crossed)
        throw NumericError("no equipotential crossing within horizon " + std::to_string(horizon) +
                           " from " + point_str(p));
    return dir * found;
}

} // namespace

EquipotentialCorrector phi_from_equipotential(const FieldSpec& spec, const LinearPlusPeriodic& u,
                                              const Vec& zeta, const Vec& x, double tol,
                                              double horizon) {
    const int d = spec.dimension();
    if (static_cast<int>(u.linear.size()) != d || u.periodic.dimension() != d)
        throw SpecError("equipotential u dimension mismatch");
    if (static_cast<int>(x.size()) != d || static_cast<int>(zeta.size()) != d)
        throw SpecError("point/zeta dimension mismatch");

    double gmin = std::numeric_limits<double>::infinity();
    Vec gmin_x;
    for_grid(d, 16, [&](const Vec& p) {
        const double g = dot(eval_field(spec, p), u.gradient(p));
        if (g < gmin) {
            gmin = g;
            gmin_x = p;
        }
    });
    if (!(gmin > 0))
        throw CertificationError("b.grad(u) > 0 fails on the grid: min " + std::to_string(gmin) +
                                 " at " + point_str(gmin_x));

    EquipotentialCorrector out;
    out.tau = equipotential_tau(spec, u, x, tol, horizon);

    // phi = integral of (zeta - b(X(s,x))) over [0,tau]; the b part telescopes
    // through the adaptive integration to X(tau,x) - x.
    IntegratorOptions opts;
    opts.tol = std::min(tol, 1e-10);
    const Vec x_tau = flow_point(spec, x, out.tau, opts);
    out.phi_x = vsub(vadd(vscale(zeta, out.tau), x), x_tau);

    // Time-shift identity tau(X(t,x)) = tau(x) - t at one probe time.
    const double t_probe = std::clamp(std::abs(out.tau), 0.25, 2.0);
    const Vec y = flow_point(spec, x, t_probe, opts);
    const double tau_y = equipotential_tau(spec, u, y, tol, horizon + t_probe);
    out.tau_shift_residual = std::abs(tau_y - (out.tau - t_probe));

    out.strip_bound = 2.0 * (std::abs(dot(x, u.linear)) + u.periodic.sup_bound()) *
                      (norm2(zeta) + field_sup_bound(spec));
    return out;
}

KozlovReduction kozlov_reduction(const KozlovInput& input, int grid, double tol) {
    const int d = input.b.dimension();
    if (static_cast<int>(input.u.size()) != d)
        throw SpecError("reduction needs one u component per dimension");
    for (const auto& ui : input.u)
        if (static_cast<int>(ui.linear.size()) != d || ui.periodic.dimension() != d)
            throw SpecError("u component dimension mismatch");
    if (grid < 2) throw SpecError("reduction grid must have >= 2 nodes per axis");

    // mean grad U is exactly the matrix of linear rows.
    Mat l(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) l(i, j) = input.u[static_cast<std::size_t>(i)].linear[static_cast<std::size_t>(j)];
    if (std::abs(determinant(l)) < 1e-12)
        throw CertificationError("mean grad U is singular");
    const Mat m = inverse(l);

    KozlovReduction out;
    out.m = m;
    out.xi = Vec(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) out.xi[static_cast<std::size_t>(i)] = m(i, 0);
    out.zeta = out.xi;

    // Psi = M U = x + M U_sharp.
    std::vector<FourierSeries> sharp_in;
    sharp_in.reserve(static_cast<std::size_t>(d));
    for (const auto& ui : input.u) sharp_in.push_back(ui.periodic);
    std::vector<FourierSeries> psi_sharp;
    psi_sharp.reserve(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        Vec row(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        psi_sharp.push_back(series_combination(sharp_in, row, d));
    }
    out.psi = make_diffeo(Mat::identity(d), std::move(psi_sharp), std::max(grid, 32));

    // Grid gates and residuals.
    double du1_min = std::numeric_limits<double>::infinity();
    Vec offending;
    double max_du1_dev = 0, max_duj = 0, psi_b_res = 0;
    Vec duj_x, du_det_x;
    bool det_bad = false;
    for_grid(d, grid, [&](const Vec& x) {
        const Vec bx = eval_field(input.b, x);
        Mat du(d);
        for (int i = 0; i < d; ++i) {
            const Vec g = input.u[static_cast<std::size_t>(i)].gradient(x);
            for (int j = 0; j < d; ++j) du(i, j) = g[static_cast<std::size_t>(j)];
        }
        const double s1 = dot(bx, input.u[0].gradient(x));
        if (s1 < du1_min) {
            du1_min = s1;
            offending = x;
        }
        max_du1_dev = std::max(max_du1_dev, std::abs(s1 - 1.0));
        for (int j = 1; j < d; ++j) {
            const double sj = std::abs(dot(bx, input.u[static_cast<std::size_t>(j)].gradient(x)));
            if (sj > max_duj) {
                max_duj = sj;
                duj_x = x;
            }
        }
        if (std::abs(determinant(du)) < 1e-12 && !det_bad) {
            det_bad = true;
            du_det_x = x;
        }
        // grad Psi b = (b.grad u1) xi, the straightening identity.
        Vec lhs = out.psi.psi_jacobian(x).apply(bx);
        axpy_inplace(lhs, -s1, out.xi);
        psi_b_res = std::max(psi_b_res, norm2(lhs));
    });
    if (!(du1_min > 0))
        throw CertificationError("b.grad(u1) > 0 fails: value " + std::to_string(du1_min) + " at " +
                                 point_str(offending));
    if (max_duj > tol)
        throw CertificationError("b.grad(u_j) = 0 (j >= 2) fails: residual " + std::to_string(max_duj) +
                                 " at " + point_str(duj_x));
    if (det_bad)
        throw CertificationError("det grad U vanishes at " + point_str(du_det_x));
    out.max_du1_deviation = max_du1_dev;
    out.max_duj_residual = max_duj;
    out.psi_b_residual = psi_b_res;
    out.unit_profile = max_du1_dev <= 1e-12;

    const DiffeoSpec psi_copy = out.psi;
    const FieldSpec b_copy = input.b;
    const LinearPlusPeriodic u1 = input.u[0];
    out.reduced_profile = [psi_copy, b_copy, u1](const Vec& y) {
        const Vec z = psi_copy.psi_inverse(y);
        return dot(eval_field(b_copy, z), u1.gradient(z));
    };

    out.corrector.phi = [psi_copy](const Vec& x) { return psi_copy.phi(x); };
    const Vec zeta_c = out.zeta;
    out.corrector.zeta = [zeta_c](const Vec&) { return zeta_c; };
    out.corrector.periodic = true;
    out.corrector.bounded = true;
    double cb_sq = 0;
    for (const auto& f : out.psi.psi_sharp) cb_sq += f.sup_bound() * f.sup_bound();
    out.corrector.certified_bound = std::sqrt(cb_sq);
    double sampled = 0;
    for_grid(d, grid, [&](const Vec& x) { sampled = std::max(sampled, norm2(out.corrector.phi(x))); });
    out.corrector.sampled_sup = sampled;
    out.corrector.note = "mean-gradient reduction";
    if (out.unit_profile) out.certified_bound = 2.0 * *out.corrector.certified_bound;
    return out;
}

CoboundaryReport verify_coboundary(const FieldSpec& spec, const CoboundaryCorrector& corr,
                                   const std::vector<std::pair<double, Vec>>& samples,
                                   const IntegratorOptions& opts, int grid, double fd_h) {
    const int d = spec.dimension();
    CoboundaryReport rep;
    for (const auto& [t, x] : samples) {
        Vec y;
        if (auto ex = field_exact_flow(spec, t, x))
            y = *ex;
        else
            y = flow_point(spec, x, t, opts);
        Vec resid = vsub(y, x);
        axpy_inplace(resid, -t, corr.zeta(x));
        resid = vsub(resid, vsub(corr.phi(y), corr.phi(x)));
        rep.flow_residual = std::max(rep.flow_residual, norm2(resid));
    }
    for_grid(d, grid, [&](const Vec& x) {
        const Vec bx = eval_field(spec, x);
        // (I - grad phi) b - zeta with a finite-difference gradient.
        Vec r = vsub(bx, corr.zeta(x));
        for (int j = 0; j < d; ++j) {
            Vec xp = x, xm = x;
            xp[static_cast<std::size_t>(j)] += fd_h;
            xm[static_cast<std::size_t>(j)] -= fd_h;
            const Vec col = vscale(vsub(corr.phi(xp), corr.phi(xm)), 1.0 / (2.0 * fd_h));
            axpy_inplace(r, -bx[static_cast<std::size_t>(j)], col);
        }
        rep.identity_residual = std::max(rep.identity_residual, norm2(r));
    });
    return rep;
}

FieldSpec parse_constructed_field(const json& params, int dim) {
    const std::string builder = params.value("builder", "");
    if (builder != "diffeo")
        throw SpecError("unknown constructed builder '" + builder + "'");
    if (!params.contains("m") || !params["m"].is_array() ||
        static_cast<int>(params["m"].size()) != dim)
        throw SpecError("constructed diffeo needs a d x d integer matrix 'm'");
    Mat m(dim);
    for (int i = 0; i < dim; ++i) {
        const auto& row = params["m"][static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != dim)
            throw SpecError("constructed diffeo matrix row size mismatch");
        for (int j = 0; j < dim; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    auto parse_tuple = [&](const char* key) {
        if (!params.contains(key) || !params[key].is_array() ||
            static_cast<int>(params[key].size()) != dim)
            throw SpecError(std::string("constructed diffeo needs '") + key +
                            "' with one series per dimension");
        std::vector<FourierSeries> out;
        out.reserve(static_cast<std::size_t>(dim));
        for (const auto& f : params[key]) out.push_back(fourier_from_json(f, dim));
        return out;
    };
    auto sharp = parse_tuple("psi_sharp");
    auto zeta = parse_tuple("zeta");
    const double tol = params.value("tol", 1e-8);
    return build_from_diffeo(make_diffeo(std::move(m), std::move(sharp)), zeta, tol).first;
}

} // namespace torusflow
