#include "torusflow/presets.hpp"

#include <cmath>
#include <memory>

#include "torusflow/arithmetic.hpp"
#include "torusflow/errors.hpp"
#include "torusflow/fourier.hpp"
#include "torusflow/stepanoff.hpp"

namespace torusflow {

using nlohmann::json;

namespace {

// Unit direction with golden-ratio slope: badly approximable, the canonical
// small-divisor-friendly choice.
constexpr double kGoldenXi1 = 0.8506508083520399;
constexpr double kGoldenXi2 = 0.5257311121191336;

Vec param_vec(const json& params, const char* key, const Vec& fallback, int dim) {
    if (!params.contains(key)) return fallback;
    const auto& v = params[key];
    if (!v.is_array() || static_cast<int>(v.size()) != dim)
        throw SpecError(std::string("preset parameter '") + key + "' must be a " +
                        std::to_string(dim) + "-vector");
    Vec out;
    for (const auto& e : v) out.push_back(e.get<double>());
    return out;
}

// arctan(sign * e^s) on a log scale; never forms e^s when it would overflow.
double arctan_exp(double s, double sign) {
    const double v = s <= 0 ? std::atan(std::exp(s)) : kTwoPi / 4.0 - std::atan(std::exp(-s));
    return sign < 0 ? -v : v;
}

std::shared_ptr<Preset> preset_example_5_1(const json& params) {
    auto p = std::make_shared<Preset>();
    p->name = "example_5_1";
    p->dim = 2;
    const Vec xi = param_vec(params, "xi", {kGoldenXi1, kGoldenXi2}, 2);
    if (xi[0] == 0.0) throw SpecError("example_5_1 needs xi1 != 0");
    FourierSeries rho = FourierSeries::single_pair(2, LatticeVector{1, 0}, 0.5, 2.0);
    p->field = FieldSpec::stepanoff(std::move(rho), xi);
    auto flow = std::make_shared<const StepanoffFlow>(StepanoffFlow::from_spec(p->field));
    p->exact_flow = [flow](double t, const Vec& x) { return flow_exact(*flow, x, t); };
    p->known_zeta = vscale(xi, 0.5);
    p->known_deviation_bound = norm2(xi) / (kTwoPi * std::abs(xi[0]));
    p->notes = "profile flow along xi with inverse density 2 + cos(2 pi x1); rotation vector "
               "xi/2 for incommensurable xi, deviation within |xi|/(2 pi |xi1|)";
    p->params = json{{"name", p->name}, {"xi", xi}};
    return p;
}

std::shared_ptr<Preset> preset_gradient_arctan(const json&) {
    auto p = std::make_shared<Preset>();
    p->name = "gradient_arctan";
    p->dim = 2;
    std::vector<FourierSeries> comps;
    comps.push_back(FourierSeries::constant(2, 1.0));
    // 2 pi sin(2 pi x2) = 2 Re[-i pi e(x2)]
    comps.push_back(FourierSeries::single_pair(2, LatticeVector{0, 1},
                                               std::complex<double>(0.0, -kTwoPi / 2.0)));
    p->field = FieldSpec::general_fourier(std::move(comps));
    p->exact_flow = [](double t, const Vec& x) -> Vec {
        const double n = std::nearbyint(x[1]);
        const double r = x[1] - n; // in [-1/2, 1/2]
        Vec out = {x[0] + t, 0.0};
        if (0.5 - std::abs(r) <= 1e-12) { // invariant line x2 = n +- 1/2
            out[1] = x[1];
            return out;
        }
        const double tan0 = std::tan(kTwoPi / 2.0 * r);
        if (tan0 == 0.0) {
            out[1] = n;
            return out;
        }
        const double s = kTwoPi * kTwoPi * t + std::log(std::abs(tan0));
        out[1] = n + arctan_exp(s, tan0) / (kTwoPi / 2.0);
        return out;
    };
    p->known_zeta = Vec{1.0, 0.0};
    p->known_deviation_bound = 1.0;
    p->notes = "gradient field e1 + 2 pi sin(2 pi x2) e2 with arctan closed form; orbits "
               "shear onto the lines x2 = n + 1/2, deviation from x + t e1 within 1";
    p->params = json{{"name", p->name}};
    return p;
}

std::shared_ptr<Preset> preset_separable(const json& params) {
    auto p = std::make_shared<Preset>();
    p->name = "separable";
    p->dim = params.value("d", 2);
    if (p->dim < 2 || p->dim > 6) throw SpecError("separable preset supports d in [2,6]");
    Vec amps(static_cast<std::size_t>(p->dim), 1.0);
    if (params.contains("amplitudes"))
        amps = param_vec(params, "amplitudes", amps, p->dim);
    std::vector<FourierSeries> profiles;
    for (double a : amps) {
        if (!(a > 0)) throw SpecError("separable amplitudes must be positive");
        profiles.push_back(FourierSeries::cosine_1d(a, 1, -a));
    }
    p->field = FieldSpec::separable(std::move(profiles));
    p->exact_flow = [amps](double t, const Vec& x) -> Vec {
        Vec out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double k = std::floor(x[i]);
            const double f = x[i] - k;
            if (f == 0.0) { // equilibrium at the lattice
                out[i] = x[i];
                continue;
            }
            // cot(pi X) decreases at constant rate 2 pi a along the orbit.
            const double pi_v = kTwoPi / 2.0;
            const double c0 = std::cos(pi_v * f) / std::sin(pi_v * f);
            out[i] = k + std::atan2(1.0, c0 - kTwoPi * amps[i] * t) / pi_v;
        }
        return out;
    };
    p->known_zeta = Vec(static_cast<std::size_t>(p->dim), 0.0);
    p->known_deviation_bound = std::sqrt(static_cast<double>(p->dim));
    p->notes = "separate-variable field a_i (1 - cos(2 pi x_i)) per axis; each orbit stays in "
               "its starting unit cell, rotation vector 0";
    p->params = json{{"name", p->name}, {"d", p->dim}, {"amplitudes", amps}};
    return p;
}

std::shared_ptr<Preset> preset_cos2_profile(const json& params) {
    auto p = std::make_shared<Preset>();
    p->name = "cos2_profile";
    p->dim = 2;
    const double gamma = params.value("gamma", 1.0);
    // cos^2(pi x1) = 1/2 + cos(2 pi x1)/2
    std::vector<FourierSeries> comps;
    comps.push_back(FourierSeries::single_pair(2, LatticeVector{1, 0}, 0.25, 0.5));
    comps.push_back(FourierSeries::single_pair(2, LatticeVector{1, 0}, 0.25 * gamma, 0.5 * gamma));
    p->field = FieldSpec::general_fourier(std::move(comps));
    p->exact_flow = [gamma](double t, const Vec& x) -> Vec {
        const double n = std::nearbyint(x[0]);
        const double r = x[0] - n;
        if (0.5 - std::abs(r) <= 1e-12) return x; // invariant line x1 = n + 1/2
        const double pi_v = kTwoPi / 2.0;
        const double w = std::atan(pi_v * t + std::tan(pi_v * r)) / pi_v + n - x[0];
        return {x[0] + w, x[1] + gamma * w};
    };
    p->known_zeta = Vec{0.0, 0.0};
    p->known_deviation_bound = std::sqrt(1.0 + gamma * gamma);
    p->notes = "profile cos^2(pi x1) along e1 + gamma e2; profile vanishes on whole lines, "
               "orbits creep to the next line, displacement within sqrt(1 + gamma^2)";
    p->params = json{{"name", p->name}, {"gamma", gamma}};
    return p;
}

std::shared_ptr<Preset> preset_vanishing_stepanoff(const json& params) {
    auto p = std::make_shared<Preset>();
    p->name = "vanishing_stepanoff";
    p->dim = 2;
    const Vec xi = param_vec(params, "xi", {kGoldenXi1, kGoldenXi2}, 2);
    const double power = params.value("power", 0.75);
    FourierSeries base;
    if (params.contains("profile_base")) {
        base = fourier_from_json(params["profile_base"], 2);
    } else {
        base = FourierSeries::single_pair(2, LatticeVector{1, 0}, -0.25, 1.0);
        base.add_pair(LatticeVector{0, 1}, -0.25);
    }
    p->field = FieldSpec::stepanoff_vanishing(base, power, xi);
    auto flow = std::make_shared<const StepanoffFlow>(StepanoffFlow::from_spec(p->field));
    p->exact_flow = [flow](double t, const Vec& x) { return flow_exact(*flow, x, t); };
    p->notes = "profile g^s along xi with g vanishing only at the lattice; rotation vector "
               "depends on whether the forward ray hits a lattice point (exact flow is "
               "forward-time only)";
    p->params = json{{"name", p->name},
                     {"xi", xi},
                     {"power", power},
                     {"profile_base", fourier_to_json(base)}};
    return p;
}

std::shared_ptr<Preset> preset_liouville(const json& params) {
    auto p = std::make_shared<Preset>();
    p->name = "liouville";
    p->dim = 2;
    const int count = params.value("count", 3);
    const int sign = params.value("sign", 1);
    const LiouvilleConstruction c = build_liouville_construction(count, sign);
    p->field = liouville_field(c);
    auto flow = std::make_shared<const StepanoffFlow>(StepanoffFlow::from_spec(p->field));
    p->exact_flow = [flow](double t, const Vec& x) { return flow_exact(*flow, x, t); };
    {
        PrecisionGuard guard(2500);
        p->known_zeta = Vec{c.xi1.convert_to<double>(), c.xi2.convert_to<double>()};
    }
    p->notes = "near-resonant positive profile along a unit direction whose slope admits "
               "factorially close rational approximations; the corrector sum diverges along "
               "the direction line, so no uniform deviation bound is carried";
    p->params = json{{"name", p->name}, {"count", count}, {"sign", sign}};
    return p;
}

} // namespace

std::shared_ptr<const Preset> make_preset(const std::string& name, const json& raw) {
    const json params = raw.is_null() ? json::object() : raw;
    if (!params.is_object()) throw SpecError("preset parameters must be a JSON object");
    if (name == "example_5_1") return preset_example_5_1(params);
    if (name == "gradient_arctan") return preset_gradient_arctan(params);
    if (name == "separable") return preset_separable(params);
    if (name == "cos2_profile") return preset_cos2_profile(params);
    if (name == "vanishing_stepanoff") return preset_vanishing_stepanoff(params);
    if (name == "liouville") return preset_liouville(params);
    throw SpecError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
    return {"example_5_1",  "gradient_arctan",     "separable",
            "cos2_profile", "vanishing_stepanoff", "liouville"};
}

} // namespace torusflow
