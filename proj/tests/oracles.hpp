#pragma once

// Independent numerical oracles for the test suite. Deliberately primitive:
// fixed-step RK4, composite Simpson, centered differences, and a raw
// trigonometric sum. None of them share code with the library so a bug there
// cannot cancel a bug here.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kTau = 6.283185307179586476925286766559;

using Vecd = std::vector<double>;

// Classical RK4 with n fixed steps on dx/dt = f(x).
inline Vecd rk4_flow(const std::function<Vecd(const Vecd&)>& f, Vecd x, double t, long long n) {
    const double h = t / static_cast<double>(n);
    const std::size_t d = x.size();
    Vecd k1, k2, k3, k4, tmp(d);
    for (long long s = 0; s < n; ++s) {
        k1 = f(x);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        k2 = f(tmp);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        k3 = f(tmp);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + h * k3[i];
        k4 = f(tmp);
        for (std::size_t i = 0; i < d; ++i)
            x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return x;
}

// Composite Simpson with n panels (n forced even).
inline double simpson(const std::function<double(double)>& f, double a, double b, long long n) {
    if (n % 2) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double s = f(a) + f(b);
    for (long long i = 1; i < n; ++i) s += f(a + h * i) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double fd_derivative(const std::function<double(double)>& f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

inline Vecd fd_gradient(const std::function<double(const Vecd&)>& f, const Vecd& x,
                        double h = 1e-6) {
    Vecd g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        Vecd p = x, m = x;
        p[j] += h;
        m[j] -= h;
        g[j] = (f(p) - f(m)) / (2 * h);
    }
    return g;
}

// Raw trig sum over explicit (mode, coefficient) pairs given for n only:
// value = dc + sum_n 2*(re cos(tau n.x) - im sin(tau n.x)).
struct TrigTerm {
    std::vector<long long> n;
    double re = 0, im = 0;
};

inline double trig_sum(double dc, const std::vector<TrigTerm>& terms, const Vecd& x) {
    double v = dc;
    for (const auto& t : terms) {
        double ph = 0;
        for (std::size_t i = 0; i < x.size(); ++i) ph += kTau * static_cast<double>(t.n[i]) * x[i];
        v += 2.0 * (t.re * std::cos(ph) - t.im * std::sin(ph));
    }
    return v;
}

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(g);
}

inline Vecd random_point(std::mt19937_64& g, std::size_t d, double a = 0.0, double b = 1.0) {
    Vecd x(d);
    for (auto& v : x) v = uniform(g, a, b);
    return x;
}

} // namespace oracle
