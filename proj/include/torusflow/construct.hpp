#pragma once

// Builders for flows with a known coboundary structure:
//   - diffeo products: b = (grad Psi)^{-1} zeta with the closed-form flow
//     X(t,x) = Psi^{-1}(t zeta(x) + Psi(x)),
//   - orbit-integral correctors from an equipotential hitting time,
//   - the mean-gradient reduction U -> (Psi, xi, profile) that straightens a
//     field with b.grad(u1) > 0 into a directional profile flow,
// plus the verifier for the identity X = x + t zeta + Phi(X) - Phi(x).

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "torusflow/field_spec.hpp"
#include "torusflow/fourier.hpp"
#include "torusflow/integrator.hpp"
#include "torusflow/linalg.hpp"

namespace torusflow {

// Psi(x) = M x + psi_sharp(x): integer unimodular linear part plus a periodic
// part, so Psi descends to a torus diffeomorphism. Built via make_diffeo,
// which fills the cached certification fields.
struct DiffeoSpec {
    Mat m;                                // integer entries, |det| = 1
    std::vector<FourierSeries> psi_sharp; // one series per component
    // filled by make_diffeo
    Mat m_inv;
    double det_min = 0;        // certified min |det grad Psi| over the torus
    double newton_damping = 1; // initial step scale for psi_inverse

    int dim() const { return static_cast<int>(psi_sharp.size()); }
    Vec psi(const Vec& x) const;
    Mat psi_jacobian(const Vec& x) const;
    // The periodic corrector of the normalized diffeo M^{-1} Psi = x + M^{-1} psi_sharp:
    // phi(x) = -M^{-1} psi_sharp(x) = x - M^{-1} Psi(x).
    Vec phi(const Vec& x) const;
    // Damped Newton seeded at M^{-1}(y - mean psi_sharp); tolerance is scaled
    // by 1 + |y| so distant lift points stay solvable.
    Vec psi_inverse(const Vec& y, double tol = 1e-12) const;
};

// Validates |det M| = 1 and certifies det grad Psi != 0 on a grid with a
// Lipschitz slack covering the cells; throws CertificationError otherwise.
DiffeoSpec make_diffeo(Mat m_int, std::vector<FourierSeries> psi_sharp, int grid = 32);

struct CoboundaryCorrector {
    std::function<Vec(const Vec&)> phi;
    std::function<Vec(const Vec&)> zeta;
    bool periodic = false; // Z^d-periodic by construction
    bool bounded = false;
    std::optional<double> certified_bound; // sup|phi| <= bound, when claimable
    double sampled_sup = 0;                // grid-sampled sup |phi|
    std::string note;
};

// Checks the compatibility grad(zeta) (grad Psi)^{-1} zeta = 0 on a grid
// (within tol), then returns the constructed field b = (grad Psi)^{-1} zeta
// with its exact flow, and the corrector of the M-normalized identity
//   X(t,x) = x + t M^{-1}zeta(x) + phi(X(t,x)) - phi(x),
// whose phi = -M^{-1} psi_sharp is periodic and bounded.
std::pair<FieldSpec, CoboundaryCorrector> build_from_diffeo(const DiffeoSpec& psi,
                                                            const std::vector<FourierSeries>& zeta,
                                                            double tol, int grid = 24);

// u(x) = linear.x + periodic(x): the gradient is periodic, u itself is not.
struct LinearPlusPeriodic {
    Vec linear;
    FourierSeries periodic;

    double eval(const Vec& x) const { return dot(linear, x) + periodic.eval(x); }
    Vec gradient(const Vec& x) const {
        Vec g = periodic.gradient(x);
        for (std::size_t i = 0; i < linear.size(); ++i) g[i] += linear[i];
        return g;
    }
};

struct EquipotentialCorrector {
    double tau = 0;                // time for the orbit of x to reach {u = 0}
    Vec phi_x;                     // integral of zeta - b(X(s,x)) over [0, tau]
    double tau_shift_residual = 0; // |tau(X(t,x)) - (tau(x) - t)| at the probe t
    // 2(|x.xi| + sup|v|)(|zeta| + sup|b|), the uniform bound available on the
    // strip x.xi = const when b.grad(u) == 1 (xi = u.linear, v = -u.periodic).
    double strip_bound = 0;
};

// tau(x) solves u(X(tau,x)) = 0 by a bracketed search along the orbit
// (integrating backward when u(x) > 0); requires b.grad(u) > 0 on a grid.
// zeta is the value of the rotation map at x.
EquipotentialCorrector phi_from_equipotential(const FieldSpec& spec, const LinearPlusPeriodic& u,
                                              const Vec& zeta, const Vec& x, double tol = 1e-10,
                                              double horizon = 1e4);

struct KozlovInput {
    std::vector<LinearPlusPeriodic> u; // U components; mean grad U = the linear rows
    FieldSpec b;
};

struct KozlovReduction {
    DiffeoSpec psi; // Psi = M U = x + M U_sharp (normalized linear part)
    Mat m;          // (mean grad U)^{-1}, exact from the linear rows
    Vec xi;         // M e1: direction of the reduced profile flow
    Vec zeta;       // equals xi; the rotation vector when b.grad(u1) == 1
    std::function<double(const Vec&)> reduced_profile; // (b.grad u1)(Psi^{-1}(y))
    CoboundaryCorrector corrector;                     // phi = -M U_sharp
    bool unit_profile = false;  // b.grad(u1) == 1 on the grid to roundoff
    double certified_bound = 0; // 2 sup|phi| when unit_profile
    double max_du1_deviation = 0; // max |b.grad(u1) - 1| over the grid
    double max_duj_residual = 0;  // max_{j>=2} |b.grad(u_j)| over the grid
    double psi_b_residual = 0;    // max |grad Psi b - (b.grad u1) xi| over the grid
};

KozlovReduction kozlov_reduction(const KozlovInput& input, int grid = 32, double tol = 1e-8);

struct CoboundaryReport {
    double flow_residual = 0;     // max |X(t,x) - x - t zeta(x) - phi(X) + phi(x)|
    double identity_residual = 0; // max grid |(I - grad phi) b - zeta|, FD gradient
};

CoboundaryReport verify_coboundary(const FieldSpec& spec, const CoboundaryCorrector& corr,
                                   const std::vector<std::pair<double, Vec>>& samples,
                                   const IntegratorOptions& opts = {}, int grid = 12,
                                   double fd_h = 1e-6);

// Rebuilds a diffeo product from its serialized params (round trip of the
// ConstructedField backend).
FieldSpec parse_constructed_field(const nlohmann::json& params, int dim);

} // namespace torusflow
