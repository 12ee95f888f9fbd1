#include "torusflow/quadrature.hpp"

#include <cmath>

#include "torusflow/errors.hpp"

namespace torusflow {

namespace {

// Gauss-Kronrod 7/15 nodes and weights on [-1,1], positive half.
const double kXgk[8] = {0.991455371120812639206854697526329,
                        0.949107912342758524526189684047851,
                        0.864864423359769072789712788640926,
                        0.741531185599394439863864773280788,
                        0.586087235467691130294144838258730,
                        0.405845151377397166906606412076961,
                        0.207784955007898467600689403773245,
                        0.0};
const double kWgk[8] = {0.022935322010529224963732008058970,
                        0.063092092629978553290700663189204,
                        0.104790010322250183839876322541518,
                        0.140653259715525918745189590510238,
                        0.169004726639267902826583426598550,
                        0.190350578064785409913256402421014,
                        0.204432940075298892414161999234649,
                        0.209482141084727828012999174891714};
const double kWg[4] = {0.129484966168869693270611432679082,
                       0.279705391489276667901467771423780,
                       0.381830050505118944950369775488975,
                       0.417959183673469387755102040816327};

struct Panel {
    double kronrod;
    double err;
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fk = 0, fg = 0;
    for (int i = 0; i < 8; ++i) {
        double v;
        if (i == 7) {
            v = f(c);
        } else {
            v = f(c - h * kXgk[i]) + f(c + h * kXgk[i]);
        }
        fk += kWgk[i] * v;
        if (i % 2 == 1) fg += kWg[i / 2] * v;
    }
    return {fk * h, std::abs(fk - fg) * h};
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol, int depth,
             const QuadratureOptions& opts) {
    Panel p = gk15(f, a, b);
    if (p.err <= std::max(tol, opts.rel_tol * std::abs(p.kronrod)) || !std::isfinite(p.err))
        return p.kronrod;
    if (depth >= opts.max_depth)
        throw NumericError("adaptive quadrature: depth exhausted near [" + std::to_string(a) +
                           "," + std::to_string(b) + "]");
    double m = 0.5 * (a + b);
    return adapt(f, a, m, tol / 2, depth + 1, opts) + adapt(f, m, b, tol / 2, depth + 1, opts);
}

} // namespace

double adaptive_quadrature(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts) {
    if (a == b) return 0.0;
    double sgn = 1.0;
    if (b < a) {
        std::swap(a, b);
        sgn = -1.0;
    }
    return sgn * adapt(f, a, b, opts.abs_tol, 0, opts);
}

double torus_mean(const std::function<double(const Vec&)>& f, int dim, int n_per_dim) {
    std::vector<int> idx(dim, 0);
    Vec x(dim, 0.0);
    const double h = 1.0 / n_per_dim;
    double s = 0;
    long long cnt = 0;
    while (true) {
        for (int j = 0; j < dim; ++j) x[j] = idx[j] * h;
        s += f(x);
        ++cnt;
        int j = 0;
        while (j < dim && ++idx[j] == n_per_dim) idx[j++] = 0;
        if (j == dim) break;
    }
    return s / static_cast<double>(cnt);
}

} // namespace torusflow
