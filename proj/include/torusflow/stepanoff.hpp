#pragma once

// Unidirectional fields b = a(x) * xi handled through the internal
// parametrization: along the ray y + sigma*xi the travel time is
// F_y(sigma) = int_0^sigma rho(y + s xi) ds (rho = 1/a), so the lifted flow
// is X(t,y) = y + F_y^{-1}(t) xi. F is integrated termwise per Fourier mode,
// which keeps every small divisor explicit where quadrature would drown it.
// Vanishing profiles a = g^power (g zero exactly on the lattice) use a 1-D
// adaptive ODE for sigma(t) instead; their harmonic mean comes from a polar
// singular quadrature around the zero.

#include <map>
#include <optional>
#include <vector>

#include "torusflow/field_spec.hpp"

namespace torusflow {

struct StepanoffFlow {
    Vec xi;                     // direction as given (presets use |xi| = 1)
    FourierSeries rho;          // 1/a, non-vanishing mode
    bool vanishing = false;
    FourierSeries profile_base; // g with a = g^power, vanishing mode
    double power = 0.75;
    double underline_a = 0;     // harmonic mean of a: 1/mean(rho), resp. 1/int g^-power
    double rho_min = 0;         // certified profile bounds (non-vanishing)
    double rho_max = 0;
    std::map<LatticeVector, double> divisor_override; // exact xi.n per mode

    // Accepts a stepanoff FieldSpec or a preset wrapping one.
    static StepanoffFlow from_spec(const FieldSpec& spec);

    // xi.n with the override applied (sign-aware for -n lookups).
    double xi_dot(const LatticeVector& n) const;
};

// No |n.xi| <= tol for 0 < |n|_inf <= box: finite-depth incommensurability.
bool incommensurable_on_box(const Vec& xi, long long box, double tol);

// F_y(sigma): time to travel sigma along the ray. Non-vanishing: closed form;
// vanishing: adaptive quadrature, NumericError if the ray hits the profile
// zero within [0, sigma].
double profile_integral(const StepanoffFlow& flow, const Vec& y, double sigma);

// sigma(t) solving F_y(sigma) = t. Non-vanishing: bracketed safeguarded
// Newton with |F(sigma) - t| <= tol. Vanishing: 1-D adaptive ODE
// sigma' = a(y + sigma xi).
double flow_parameter(const StepanoffFlow& flow, const Vec& y, double t, double tol = 1e-12);

// X(t,y) = y + sigma(t) xi.
Vec flow_exact(const StepanoffFlow& flow, const Vec& y, double t, double tol = 1e-12);

struct CommensurableReport {
    std::vector<long long> k; // T xi, verified integer
    double mean_rho_ray = 0;  // F_y(T) / T, exact mode cancellation
    double m = 0;             // 1 / mean_rho_ray
    Vec zeta;                 // m * xi
    double period_time = 0;   // F_y(T): X(t + period_time, y) = X(t,y) + k
};

// Requires T xi in Z^d within lattice_tol. Modes with n.k != 0 integrate to
// exactly zero over the full period and are dropped; the rest are constant
// along the ray.
CommensurableReport commensurable_zeta(const StepanoffFlow& flow, const Vec& y, double T,
                                       double lattice_tol = 1e-9);

// Forward ray hit: smallest tau >= 0 with y + tau xi on the lattice, found by
// a walk along the ray plus 1-D refinement of the profile minimum.
struct RayHit {
    double tau = 0;
    std::vector<long long> k;
};
std::optional<RayHit> forward_lattice_hit(const Vec& y, const Vec& xi, double range);

struct VanishingClass {
    int category = 3;   // 1: lattice point; 2: forward ray hits the zero; 3: generic
    Vec limit_point;    // categories 1-2: the lattice point reached
    double tau = 0;     // category 2: y + tau xi = limit_point (total displacement)
    Vec zeta;           // category 3: rotation estimate, else zero vector
    double zeta_error = 0; // horizon vs horizon/2 comparison (category 3)
    double sigma_end = 0;  // sigma(horizon), diagnostic
};

// Prop-style trichotomy for a vanishing profile in d=2. scan_range bounds the
// ray search for category 2.
VanishingClass vanishing_analysis(const StepanoffFlow& flow, const Vec& y, double horizon,
                                  double scan_range = 64.0);

struct LargeDeviationRow {
    double tau = 0;      // requested ray length to the lattice target
    Vec x;               // start point k - tau xi
    std::vector<long long> k;
    double measured = 0;  // (X(horizon,x) - x) . v
    double predicted = 0; // tau * (xi . v)
};

// Starts at x = -tau xi + k and shows the terminal displacement growing
// linearly in tau: the deviation from "x + t zeta" is unbounded over the
// family even though each orbit individually converges.
std::vector<LargeDeviationRow> large_deviation_demo(const StepanoffFlow& flow,
                                                    const std::vector<double>& tau_list,
                                                    const Vec& v, double horizon = 1e4);

} // namespace torusflow
