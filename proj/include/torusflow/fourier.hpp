#pragma once

// Finite trigonometric polynomials on the torus R^d/Z^d with the conjugate
// symmetry c(-n) = conj(c(n)) enforced at insertion, so evaluation is real.

#include <complex>
#include <map>

#include "torusflow/lattice.hpp"
#include "torusflow/linalg.hpp"

namespace torusflow {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

class FourierSeries {
public:
    using CoefMap = std::map<LatticeVector, std::complex<double>>;

    FourierSeries() = default;
    explicit FourierSeries(int dim) : dim_(dim) {}

    static FourierSeries constant(int dim, double value);
    // Convenience: c at +n and conj at -n, i.e. 2*Re[c e(n.x)] summed in.
    static FourierSeries single_pair(int dim, const LatticeVector& n, std::complex<double> c,
                                     double dc = 0.0);
    // 1-d helper: dc + amp*cos(2 pi k x) (+ amp_s * sin(2 pi k x)).
    static FourierSeries cosine_1d(double dc, long long k, double amp, double amp_sin = 0.0);

    int dimension() const { return dim_; }
    bool empty() const { return coef_.empty(); }
    std::size_t mode_count() const { return coef_.size(); }

    // Stores c at n and conj(c) at -n; accumulates onto existing entries.
    // The zero mode must be real.
    void add_pair(const LatticeVector& n, std::complex<double> c);
    void set_pair(const LatticeVector& n, std::complex<double> c);

    std::complex<double> coefficient(const LatticeVector& n) const;
    const CoefMap& coefficients() const { return coef_; }

    double mean() const; // zero-mode value

    double eval(const Vec& x) const;
    // Full complex synthesis; the imaginary part is a symmetry diagnostic.
    std::complex<double> eval_complex(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    // d^2/dx_i dx_j at x.
    Mat hessian(const Vec& x) const;

    FourierSeries derivative(int j) const; // coefficient-level: c -> 2 pi i n_j c
    FourierSeries scaled(double s) const;
    FourierSeries plus_constant(double c) const;

    double sup_bound() const;           // sum |c(n)| >= sup |f|
    double first_moment() const;        // sum |n|_2 |c(n)|
    double gradient_sup_bound() const;  // 2 pi * first moment >= sup |grad f|
    double third_moment_bound() const;  // (2 pi)^3 sum |n|^3 |c| >= sup |D^3 f|

    // Certified lower bound for min over the torus: grid minimum minus the
    // Lipschitz slack (grad bound) * (max distance to a grid node).
    double certified_min(int grid_per_dim = 64) const;

    // Truncate to modes with |n|_inf <= cap.
    FourierSeries truncated(long long cap) const;

private:
    int dim_ = 0;
    CoefMap coef_;
};

} // namespace torusflow
