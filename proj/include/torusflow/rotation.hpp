#pragma once

// Rotation vectors by endpoint quotient (X(T,x)-x)/T with a T vs T/2
// comparison as the convergence gauge, supremum deviation tracking on a dense
// time grid, flow-invariance spot checks of the estimate, and sampled
// inner approximations of the rotation set (segment in d=2, support-swept
// hull vertices in d>=3).

#include <iosfwd>
#include <string>
#include <vector>

#include "torusflow/field_spec.hpp"

namespace torusflow {

struct RotationEstimate {
    Vec zeta;
    double horizon = 0;
    double extrapolation_error = 0; // |zeta_T - zeta_{T/2}|
    bool converged = true;          // extrapolation_error <= 10/sqrt(horizon)
};

// Requires horizon >= 10. One integration; the half-horizon state is read
// off the dense output.
RotationEstimate estimate_rotation(const FieldSpec& spec, const Vec& x, double horizon,
                                   double tol = 1e-8);

struct DeviationReport {
    Vec zeta;
    double sup_deviation = 0;
    double arg_time = 0;
    double horizon = 0;
};

// sup over t in a dense grid (step <= 0.1, plus every accepted step end) of
// |X(t,x) - x - t*zeta|.
DeviationReport deviation_sup(const FieldSpec& spec, const Vec& x, const Vec& zeta,
                              double horizon, double tol = 1e-8);

struct HermanPoint {
    Vec x;
    RotationEstimate estimate;
    bool failed = false;
    std::string error;
};

struct HermanSample {
    std::vector<HermanPoint> points;
    // d=2: segment endpoints along the principal direction of the samples.
    Vec seg_a, seg_b;
    double max_line_distance = 0; // d=2: worst distance of a sample to the segment line
    // d>=3: vertex candidates from a deterministic support-direction sweep.
    std::vector<Vec> hull_vertices;
    double hull_tolerance = 0; // worst support-function gap on fresh directions
};

// Per-point failures are recorded, not fatal. threads = 0 picks the hardware
// count.
HermanSample herman_sample(const FieldSpec& spec, const std::vector<Vec>& grid, double horizon,
                           double tol = 1e-8, int threads = 0);

struct ZetaInvarianceReport {
    double max_residual = 0; // max over t of |zeta_est(X(t,x)) - zeta_est(x)|
    bool all_converged = true;
    std::vector<double> t_list;
    Vec zeta_base;
};

ZetaInvarianceReport check_zeta_invariance(const FieldSpec& spec, const Vec& x,
                                           const std::vector<double>& t_list, double horizon,
                                           double tol = 1e-8);

struct RotationRow {
    Vec x;
    Vec zeta;
    double extrap_err = 0;
    double sup_dev = 0;
    double arg_time = 0;
};

// Columns: x1..xd, zeta1..zetad, extrap_err, sup_dev, arg_time.
void write_rotation_csv(const std::vector<RotationRow>& rows, int dim, std::ostream& out);

// Deterministic worker fan-out: fn(i) for i in [0,n), results independent.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace torusflow
