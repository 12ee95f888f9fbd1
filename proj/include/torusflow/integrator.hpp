#pragma once

// Adaptive embedded 5(4) Runge-Kutta (Dormand-Prince pair) with PI step
// control, absolute error-per-unit-time semantics, and a 4th-order dense
// interpolant. The streaming core hands each accepted step to a sink so long
// horizons never require storing the trajectory.

#include <array>
#include <functional>
#include <optional>

#include "torusflow/field_spec.hpp"

namespace torusflow {

using OdeRhs = std::function<void(double t, const Vec& y, Vec& f)>;

struct IntegratorOptions {
    double tol = 1e-8;   // target local error per unit time (absolute)
    double h_init = 0;   // 0 = automatic
    double h_max = 0;    // 0 = horizon
    long long max_steps = 200'000'000;
};

// View of one accepted step; valid only inside the sink callback.
struct StepView {
    double t0 = 0, t1 = 0;
    const Vec* y_begin = nullptr;
    const Vec* y_end = nullptr;
    const std::array<Vec, 5>* rcont = nullptr;

    double h() const { return t1 - t0; }
    // Quartic interpolant through the step (same family as the pair).
    Vec at(double t) const;
};

// Return false to stop the run after the current step.
using StepSink = std::function<bool(const StepView&)>;

struct IntegrateStats {
    Vec y_end;
    double t_end = 0;
    long long accepted = 0;
    long long rejected = 0;
    bool stopped_early = false;
};

IntegrateStats integrate_core(const OdeRhs& rhs, int dim, Vec y0, double horizon,
                              const IntegratorOptions& opts, const StepSink* sink);

// Stored trajectory of the lifted flow. Storage is flat (times, states, dense
// coefficients) so sample() can re-evaluate any interior time afterwards.
struct Trajectory {
    Vec initial;
    double tolerance = 0;
    long long rejected_steps = 0;
    int dim = 0;
    std::vector<double> times;       // strictly increasing, times[0] == 0
    std::vector<double> states_flat; // (times.size()) x dim, states_flat[0..d) == initial
    std::vector<double> dense_flat;  // (times.size()-1) x 4*dim interpolant data

    long long accepted_steps() const { return static_cast<long long>(times.size()) - 1; }
    Vec state(std::size_t i) const;
    Vec lift_end() const { return state(times.size() - 1); }
    double duration() const { return times.empty() ? 0.0 : times.back(); }
    Vec sample(double t) const; // t within [0, duration()]
};

Trajectory integrate(const FieldSpec& spec, const Vec& x0, double horizon,
                     const IntegratorOptions& opts = {});

IntegrateStats integrate_stream(const FieldSpec& spec, const Vec& x0, double horizon,
                                const IntegratorOptions& opts, const StepSink& sink);

// Signed endpoint evaluation; t < 0 integrates the reversed field.
Vec flow_point(const FieldSpec& spec, const Vec& x0, double t,
               const IntegratorOptions& opts = {});

// Streams X(sign(t)*s) for s in [0,|t|].
IntegrateStats integrate_stream_signed(const FieldSpec& spec, const Vec& x0, double t,
                                       const IntegratorOptions& opts, const StepSink& sink);

struct FlowInvariantReport {
    double semigroup_residual = 0;   // |X(t2, X(t1,x)) - X(t1+t2, x)|
    double equivariance_residual = 0; // |X(t, x+k) - X(t,x) - k|
    double tol = 0;
    bool pass(double factor = 5.0) const {
        return semigroup_residual <= factor * tol && equivariance_residual <= factor * tol;
    }
};

FlowInvariantReport verify_flow_invariants(const FieldSpec& spec, const Vec& x, double t1,
                                           double t2, const std::vector<long long>& k,
                                           double tol);

struct PeriodicOrbit {
    double period = 0;
    std::vector<long long> k; // lattice translation over one period
    double residual = 0;      // |X(T,x) - x - k|
};

// Smallest return to x + k within (0, max_period]; equilibria (|b(x)| <= tol)
// reported with the (T=1, k=0) convention. Candidates are located on a dense
// scan of the lattice-distance function and refined by secant iteration.
std::optional<PeriodicOrbit> detect_periodic_orbit(const FieldSpec& spec, const Vec& x,
                                                   double max_period, double tol);

} // namespace torusflow
