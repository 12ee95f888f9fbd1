#pragma once

// Adaptive Gauss-Kronrod 7/15 on an interval, plus the rectangle rule for
// smooth periodic integrands (spectrally accurate on the torus).

#include <functional>

#include "torusflow/linalg.hpp"

namespace torusflow {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_depth = 48;
};

// Throws NumericError when the depth budget is exhausted before convergence.
double adaptive_quadrature(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts = {});

// Mean of f over [0,1]^d with n nodes per dimension (periodic rectangle rule).
double torus_mean(const std::function<double(const Vec&)>& f, int dim, int n_per_dim);

} // namespace torusflow
