#include "torusflow/fourier.hpp"

#include <cmath>

#include "torusflow/errors.hpp"

namespace torusflow {

FourierSeries FourierSeries::constant(int dim, double value) {
    FourierSeries f(dim);
    if (value != 0.0) f.add_pair(LatticeVector(std::vector<long long>(dim, 0)), value);
    return f;
}

FourierSeries FourierSeries::single_pair(int dim, const LatticeVector& n, std::complex<double> c,
                                         double dc) {
    FourierSeries f(dim);
    if (dc != 0.0) f.add_pair(LatticeVector(std::vector<long long>(dim, 0)), dc);
    f.add_pair(n, c);
    return f;
}

FourierSeries FourierSeries::cosine_1d(double dc, long long k, double amp, double amp_sin) {
    FourierSeries f(1);
    if (dc != 0.0) f.add_pair(LatticeVector{0}, dc);
    // amp*cos + amp_sin*sin = 2 Re[(amp/2 - i*amp_sin/2) e(kx)]
    if (amp != 0.0 || amp_sin != 0.0)
        f.add_pair(LatticeVector{k}, std::complex<double>(amp / 2, -amp_sin / 2));
    return f;
}

void FourierSeries::add_pair(const LatticeVector& n, std::complex<double> c) {
    if (n.dim() != dim_) throw SpecError("Fourier mode dimension mismatch");
    if (n.is_zero()) {
        if (std::abs(c.imag()) > 1e-14 * (1.0 + std::abs(c.real())))
            throw SpecError("zero mode of a real series must be real");
        coef_[n] += c.real();
        return;
    }
    coef_[n] += c;
    coef_[n.negated()] += std::conj(c);
}

void FourierSeries::set_pair(const LatticeVector& n, std::complex<double> c) {
    if (n.dim() != dim_) throw SpecError("Fourier mode dimension mismatch");
    if (n.is_zero()) {
        if (std::abs(c.imag()) > 1e-14 * (1.0 + std::abs(c.real())))
            throw SpecError("zero mode of a real series must be real");
        coef_[n] = c.real();
        return;
    }
    coef_[n] = c;
    coef_[n.negated()] = std::conj(c);
}

std::complex<double> FourierSeries::coefficient(const LatticeVector& n) const {
    auto it = coef_.find(n);
    return it == coef_.end() ? std::complex<double>(0, 0) : it->second;
}

double FourierSeries::mean() const {
    return coefficient(LatticeVector(std::vector<long long>(dim_, 0))).real();
}

double FourierSeries::eval(const Vec& x) const {
    // Conjugate pairs make each term's contribution Re[c e(n.x)]; summing the
    // full stored support therefore yields the real synthesis exactly.
    double s = 0;
    for (const auto& [n, c] : coef_) {
        double ph = kTwoPi * n.dot(x);
        s += c.real() * std::cos(ph) - c.imag() * std::sin(ph);
    }
    return s;
}

std::complex<double> FourierSeries::eval_complex(const Vec& x) const {
    std::complex<double> s(0, 0);
    for (const auto& [n, c] : coef_) {
        double ph = kTwoPi * n.dot(x);
        s += c * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    return s;
}

Vec FourierSeries::gradient(const Vec& x) const {
    Vec g(dim_, 0.0);
    for (const auto& [n, c] : coef_) {
        double ph = kTwoPi * n.dot(x);
        // d/dx_j Re[c e(n.x)] = -2 pi n_j (c_re sin + c_im cos)
        double w = -kTwoPi * (c.real() * std::sin(ph) + c.imag() * std::cos(ph));
        for (int j = 0; j < dim_; ++j) g[j] += w * static_cast<double>(n[j]);
    }
    return g;
}

Mat FourierSeries::hessian(const Vec& x) const {
    Mat h(dim_);
    for (const auto& [n, c] : coef_) {
        double ph = kTwoPi * n.dot(x);
        double w = -kTwoPi * kTwoPi * (c.real() * std::cos(ph) - c.imag() * std::sin(ph));
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                h(i, j) += w * static_cast<double>(n[i]) * static_cast<double>(n[j]);
    }
    return h;
}

FourierSeries FourierSeries::derivative(int j) const {
    FourierSeries d(dim_);
    for (const auto& [n, c] : coef_) {
        if (n[j] == 0) continue;
        d.coef_[n] = c * std::complex<double>(0, kTwoPi * static_cast<double>(n[j]));
    }
    return d;
}

FourierSeries FourierSeries::scaled(double s) const {
    FourierSeries r(*this);
    for (auto& [n, c] : r.coef_) c *= s;
    return r;
}

FourierSeries FourierSeries::plus_constant(double c) const {
    FourierSeries r(*this);
    if (c != 0.0) r.add_pair(LatticeVector(std::vector<long long>(dim_, 0)), c);
    return r;
}

double FourierSeries::sup_bound() const {
    double s = 0;
    for (const auto& [n, c] : coef_) s += std::abs(c);
    return s;
}

double FourierSeries::first_moment() const {
    double s = 0;
    for (const auto& [n, c] : coef_) s += n.norm2() * std::abs(c);
    return s;
}

double FourierSeries::gradient_sup_bound() const { return kTwoPi * first_moment(); }

double FourierSeries::third_moment_bound() const {
    double s = 0;
    for (const auto& [n, c] : coef_) {
        double m = n.norm2();
        s += m * m * m * std::abs(c);
    }
    return kTwoPi * kTwoPi * kTwoPi * s;
}

double FourierSeries::certified_min(int grid_per_dim) const {
    const double h = 1.0 / grid_per_dim;
    const double slack = gradient_sup_bound() * h * std::sqrt(static_cast<double>(dim_)) / 2.0;
    double gmin = 0;
    bool first = true;
    std::vector<int> idx(dim_, 0);
    Vec x(dim_, 0.0);
    while (true) {
        for (int j = 0; j < dim_; ++j) x[j] = idx[j] * h;
        double v = eval(x);
        if (first || v < gmin) gmin = v;
        first = false;
        int j = 0;
        while (j < dim_ && ++idx[j] == grid_per_dim) idx[j++] = 0;
        if (j == dim_) break;
    }
    return gmin - slack;
}

FourierSeries FourierSeries::truncated(long long cap) const {
    FourierSeries r(dim_);
    for (const auto& [n, c] : coef_)
        if (n.norm_inf() <= cap) r.coef_[n] = c;
    return r;
}

} // namespace torusflow
