#pragma once

// Small dense vectors/matrices for ambient dimensions 2..6. Row-major square
// matrices with LU solves; nothing here is tuned for large n.

#include <cmath>
#include <cstdint>
#include <vector>

#include "torusflow/errors.hpp"

namespace torusflow {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
    double m = 0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline Vec vadd(const Vec& a, const Vec& b) {
    Vec r(a);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

inline Vec vsub(const Vec& a, const Vec& b) {
    Vec r(a);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

inline Vec vscale(const Vec& a, double s) {
    Vec r(a);
    for (double& v : r) v *= s;
    return r;
}

// y += a*x
inline void axpy_inplace(Vec& y, double a, const Vec& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline double dist2(const Vec& a, const Vec& b) { return norm2(vsub(a, b)); }

inline std::vector<long long> round_lattice(const Vec& x) {
    std::vector<long long> k(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) k[i] = std::llround(x[i]);
    return k;
}

// Euclidean distance to the nearest integer lattice point.
inline double lattice_distance(const Vec& x) {
    double s = 0;
    for (double v : x) {
        double f = v - std::nearbyint(v);
        s += f * f;
    }
    return std::sqrt(s);
}

struct Mat {
    int n = 0;
    std::vector<double> a; // row-major n*n

    Mat() = default;
    explicit Mat(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_, 0.0) {}

    static Mat identity(int n_) {
        Mat m(n_);
        for (int i = 0; i < n_; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    Vec apply(const Vec& x) const {
        Vec y(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0;
            for (int j = 0; j < n; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    Mat times(const Mat& o) const {
        Mat r(n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                double v = (*this)(i, k);
                for (int j = 0; j < n; ++j) r(i, j) += v * o(k, j);
            }
        return r;
    }

    Mat transposed() const {
        Mat r(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r(j, i) = (*this)(i, j);
        return r;
    }

    double max_abs() const {
        double m = 0;
        for (double v : a) m = std::max(m, std::abs(v));
        return m;
    }
};

// LU with partial pivoting. Throws NumericError on (near-)singular input.
namespace detail {
struct Lu {
    Mat lu;
    std::vector<int> piv;
    int sign = 1;
};

inline Lu lu_factor(const Mat& m) {
    Lu f{m, std::vector<int>(m.n), 1};
    const int n = m.n;
    for (int i = 0; i < n; ++i) f.piv[i] = i;
    for (int c = 0; c < n; ++c) {
        int p = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(f.lu(r, c)) > std::abs(f.lu(p, c))) p = r;
        if (std::abs(f.lu(p, c)) < 1e-14 * (1.0 + m.max_abs()))
            throw NumericError("singular matrix in LU factorization");
        if (p != c) {
            for (int j = 0; j < n; ++j) std::swap(f.lu(p, j), f.lu(c, j));
            std::swap(f.piv[p], f.piv[c]);
            f.sign = -f.sign;
        }
        for (int r = c + 1; r < n; ++r) {
            f.lu(r, c) /= f.lu(c, c);
            for (int j = c + 1; j < n; ++j) f.lu(r, j) -= f.lu(r, c) * f.lu(c, j);
        }
    }
    return f;
}

inline Vec lu_solve(const Lu& f, const Vec& b) {
    const int n = f.lu.n;
    Vec y(n);
    for (int i = 0; i < n; ++i) y[i] = b[f.piv[i]];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) y[i] -= f.lu(i, j) * y[j];
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) y[i] -= f.lu(i, j) * y[j];
        y[i] /= f.lu(i, i);
    }
    return y;
}
} // namespace detail

inline Vec solve(const Mat& m, const Vec& b) {
    return detail::lu_solve(detail::lu_factor(m), b);
}

inline double determinant(const Mat& m) {
    detail::Lu f;
    try {
        f = detail::lu_factor(m);
    } catch (const NumericError&) {
        return 0.0;
    }
    double d = f.sign;
    for (int i = 0; i < m.n; ++i) d *= f.lu(i, i);
    return d;
}

inline Mat inverse(const Mat& m) {
    auto f = detail::lu_factor(m);
    Mat r(m.n);
    Vec e(m.n, 0.0);
    for (int j = 0; j < m.n; ++j) {
        e[j] = 1.0;
        Vec col = detail::lu_solve(f, e);
        for (int i = 0; i < m.n; ++i) r(i, j) = col[i];
        e[j] = 0.0;
    }
    return r;
}

} // namespace torusflow
