#include "torusflow/field_spec.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "torusflow/construct.hpp"
#include "torusflow/errors.hpp"
#include "torusflow/presets.hpp"

namespace torusflow {

using nlohmann::json;

Mat FieldBackend::jacobian(const Vec&) const {
    throw SpecError("field backend does not provide an analytic Jacobian");
}

namespace {

void check_dim_range(int d) {
    if (d < 2 || d > 6) throw SpecError("dimension must be in [2,6], got " + std::to_string(d));
}

// sup over the torus of g^s * |xi| for the vanishing profile a = g^s.
double vanishing_sup(const StepanoffField& f) {
    return std::pow(f.profile_base.sup_bound(), f.power) * norm2(f.xi);
}

} // namespace

void certify_positive(const FourierSeries& f, const std::string& what, int grid) {
    double m = f.certified_min(grid);
    if (!(m > 0))
        throw CertificationError(what + ": positivity not certified (grid minimum minus "
                                        "Lipschitz slack = " +
                                 std::to_string(m) + ")");
}

void certify_single_lattice_zero(const FourierSeries& g, int grid) {
    const int d = g.dimension();
    const Vec zero(d, 0.0);
    const double scale = g.sup_bound();
    if (std::abs(g.eval(zero)) > 1e-12 * (1.0 + scale))
        throw CertificationError("vanishing profile base must vanish at the lattice");

    // Positive-definite Hessian at the zero, certified via Gershgorin discs.
    Mat h = g.hessian(zero);
    double lambda_min = 0;
    for (int i = 0; i < d; ++i) {
        double off = 0;
        for (int j = 0; j < d; ++j)
            if (j != i) off += std::abs(h(i, j));
        double lo = h(i, i) - off;
        lambda_min = (i == 0) ? lo : std::min(lambda_min, lo);
    }
    if (!(lambda_min > 0))
        throw CertificationError("vanishing profile base: Hessian at the zero not certified "
                                 "positive definite (Gershgorin bound " +
                                 std::to_string(lambda_min) + ")");

    // Near zone: g >= lambda_min/2 |x|^2 - M3 |x|^3 / 6 > 0 for |x| < 3 lambda_min / M3.
    const double m3 = g.third_moment_bound();
    double r0 = 0.45;
    if (m3 > 0) r0 = std::min(r0, 0.9 * 3.0 * lambda_min / m3);

    // Complement: certified grid minimum over points at lattice distance >= r0 - h sqrt(d)/2.
    const double hstep = 1.0 / grid;
    const double cover = hstep * std::sqrt(static_cast<double>(d)) / 2.0;
    if (r0 <= 2.0 * cover)
        throw CertificationError("vanishing profile base: certification grid too coarse for "
                                 "the positive zone radius " +
                                 std::to_string(r0));
    const double slack = g.gradient_sup_bound() * cover;
    double gmin = 0;
    bool first = true;
    std::vector<int> idx(d, 0);
    Vec x(d, 0.0);
    while (true) {
        for (int j = 0; j < d; ++j) x[j] = idx[j] * hstep;
        if (lattice_distance(x) >= r0 - cover) {
            double v = g.eval(x);
            if (first || v < gmin) gmin = v;
            first = false;
        }
        int j = 0;
        while (j < d && ++idx[j] == grid) idx[j++] = 0;
        if (j == d) break;
    }
    if (first || !(gmin - slack > 0))
        throw CertificationError("vanishing profile base: positivity away from the lattice "
                                 "zero not certified (margin " +
                                 std::to_string(first ? 0.0 : gmin - slack) + ")");
}

FieldSpec FieldSpec::general_fourier(std::vector<FourierSeries> components) {
    const int d = static_cast<int>(components.size());
    check_dim_range(d);
    for (const auto& c : components)
        if (c.dimension() != d) throw SpecError("component series dimension mismatch");
    FieldSpec s;
    s.dim_ = d;
    s.var_ = GeneralFourierField{std::move(components)};
    return s;
}

FieldSpec FieldSpec::stepanoff(FourierSeries rho, Vec xi) {
    const int d = rho.dimension();
    check_dim_range(d);
    if (static_cast<int>(xi.size()) != d) throw SpecError("direction xi dimension mismatch");
    if (!(norm2(xi) > 0)) throw SpecError("direction xi must be nonzero");
    StepanoffField f;
    f.xi = std::move(xi);
    f.rho = std::move(rho);
    f.vanishing = false;
    certify_positive(f.rho, "stepanoff inverse profile rho");
    f.rho_min_cert = f.rho.certified_min(64);
    f.rho_max_bound = f.rho.sup_bound();
    FieldSpec s;
    s.dim_ = d;
    s.var_ = std::move(f);
    return s;
}

FieldSpec FieldSpec::stepanoff_vanishing(FourierSeries base, double power, Vec xi) {
    const int d = base.dimension();
    check_dim_range(d);
    if (static_cast<int>(xi.size()) != d) throw SpecError("direction xi dimension mismatch");
    if (!(norm2(xi) > 0)) throw SpecError("direction xi must be nonzero");
    if (!(power > 0.5 && power <= 0.95))
        throw SpecError("vanishing profile power must lie in (0.5, 0.95]");
    certify_single_lattice_zero(base);
    StepanoffField f;
    f.xi = std::move(xi);
    f.profile_base = std::move(base);
    f.power = power;
    f.vanishing = true;
    FieldSpec s;
    s.dim_ = d;
    s.var_ = std::move(f);
    return s;
}

FieldSpec FieldSpec::separable(std::vector<FourierSeries> profiles) {
    const int d = static_cast<int>(profiles.size());
    check_dim_range(d);
    for (const auto& p : profiles)
        if (p.dimension() != 1)
            throw SpecError("separable profiles must be one-dimensional series");
    FieldSpec s;
    s.dim_ = d;
    s.var_ = SeparableField{std::move(profiles)};
    return s;
}

FieldSpec FieldSpec::constructed(std::shared_ptr<const FieldBackend> backend) {
    if (!backend) throw SpecError("null constructed backend");
    const int d = backend->dimension();
    check_dim_range(d);
    FieldSpec s;
    s.dim_ = d;
    s.var_ = ConstructedField{std::move(backend)};
    return s;
}

FieldSpec FieldSpec::preset(std::shared_ptr<const Preset> p) {
    if (!p) throw SpecError("null preset");
    FieldSpec s;
    s.dim_ = p->dim;
    s.var_ = PresetField{p->name, std::move(p)};
    return s;
}

void FieldSpec::set_invariant_density(FourierSeries sigma) {
    if (sigma.dimension() != dim_) throw SpecError("invariant density dimension mismatch");
    if (std::abs(sigma.mean() - 1.0) > 1e-12)
        throw SpecError("invariant density must have mean exactly 1");
    certify_positive(sigma, "invariant density");
    density_ = std::move(sigma);
}

Vec eval_field(const FieldSpec& spec, const Vec& x) {
    if (!spec.validated()) throw SpecError("eval_field: field spec not validated");
    if (static_cast<int>(x.size()) != spec.dimension())
        throw SpecError("eval_field: point dimension mismatch");
    const int d = spec.dimension();
    return std::visit(
        [&](const auto& f) -> Vec {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, GeneralFourierField>) {
                Vec b(d);
                for (int i = 0; i < d; ++i) b[i] = f.components[i].eval(x);
                return b;
            } else if constexpr (std::is_same_v<T, StepanoffField>) {
                double a;
                if (f.vanishing) {
                    a = std::pow(std::max(f.profile_base.eval(x), 0.0), f.power);
                } else {
                    a = 1.0 / f.rho.eval(x);
                }
                return vscale(f.xi, a);
            } else if constexpr (std::is_same_v<T, SeparableField>) {
                Vec b(d);
                for (int i = 0; i < d; ++i) b[i] = f.profiles[i].eval({x[i]});
                return b;
            } else if constexpr (std::is_same_v<T, ConstructedField>) {
                return f.backend->eval(x);
            } else if constexpr (std::is_same_v<T, PresetField>) {
                return eval_field(f.preset->field, x);
            } else {
                throw SpecError("eval_field: empty field spec");
            }
        },
        spec.variant());
}

Mat eval_jacobian(const FieldSpec& spec, const Vec& x) {
    if (!spec.validated()) throw SpecError("eval_jacobian: field spec not validated");
    if (static_cast<int>(x.size()) != spec.dimension())
        throw SpecError("eval_jacobian: point dimension mismatch");
    const int d = spec.dimension();
    return std::visit(
        [&](const auto& f) -> Mat {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, GeneralFourierField>) {
                Mat j(d);
                for (int i = 0; i < d; ++i) {
                    Vec g = f.components[i].gradient(x);
                    for (int c = 0; c < d; ++c) j(i, c) = g[c];
                }
                return j;
            } else if constexpr (std::is_same_v<T, StepanoffField>) {
                Vec grad_a(d, 0.0);
                if (f.vanishing) {
                    double g = std::max(f.profile_base.eval(x), 0.0);
                    if (g > 0) {
                        // a = g^s, grad a = s g^(s-1) grad g; tends to 0 at the
                        // zero because the profile order exceeds 1 (s > 1/2).
                        double w = f.power * std::pow(g, f.power - 1.0);
                        grad_a = vscale(f.profile_base.gradient(x), w);
                    }
                } else {
                    double r = f.rho.eval(x);
                    grad_a = vscale(f.rho.gradient(x), -1.0 / (r * r));
                }
                Mat j(d);
                for (int i = 0; i < d; ++i)
                    for (int c = 0; c < d; ++c) j(i, c) = f.xi[i] * grad_a[c];
                return j;
            } else if constexpr (std::is_same_v<T, SeparableField>) {
                Mat j(d);
                for (int i = 0; i < d; ++i) j(i, i) = f.profiles[i].gradient({x[i]})[0];
                return j;
            } else if constexpr (std::is_same_v<T, ConstructedField>) {
                if (!f.backend->has_jacobian())
                    throw SpecError("constructed field has no analytic Jacobian");
                return f.backend->jacobian(x);
            } else if constexpr (std::is_same_v<T, PresetField>) {
                return eval_jacobian(f.preset->field, x);
            } else {
                throw SpecError("eval_jacobian: empty field spec");
            }
        },
        spec.variant());
}

double field_sup_bound(const FieldSpec& spec) {
    if (!spec.validated()) throw SpecError("field_sup_bound: field spec not validated");
    return std::visit(
        [&](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, GeneralFourierField>) {
                double s = 0;
                for (const auto& c : f.components) s += c.sup_bound() * c.sup_bound();
                return std::sqrt(s);
            } else if constexpr (std::is_same_v<T, StepanoffField>) {
                if (f.vanishing) return vanishing_sup(f);
                return norm2(f.xi) / f.rho_min_cert;
            } else if constexpr (std::is_same_v<T, SeparableField>) {
                double s = 0;
                for (const auto& p : f.profiles) s += p.sup_bound() * p.sup_bound();
                return std::sqrt(s);
            } else if constexpr (std::is_same_v<T, ConstructedField>) {
                return f.backend->sup_bound();
            } else if constexpr (std::is_same_v<T, PresetField>) {
                return field_sup_bound(f.preset->field);
            } else {
                throw SpecError("field_sup_bound: empty field spec");
            }
        },
        spec.variant());
}

std::optional<Vec> field_exact_flow(const FieldSpec& spec, double t, const Vec& x) {
    if (const auto* p = std::get_if<PresetField>(&spec.variant())) {
        if (p->preset->exact_flow) return p->preset->exact_flow(t, x);
        return std::nullopt;
    }
    if (const auto* c = std::get_if<ConstructedField>(&spec.variant()))
        return c->backend->exact_flow(t, x);
    return std::nullopt;
}

json fourier_to_json(const FourierSeries& f) {
    json coeffs = json::array();
    for (const auto& [n, c] : f.coefficients()) {
        if (!n.is_canonical()) continue; // emit one representative per pair
        json mode = json::array();
        for (long long v : n.n) mode.push_back(v);
        coeffs.push_back(json::array({mode, c.real(), c.imag()}));
    }
    return json{{"coefficients", coeffs}};
}

FourierSeries fourier_from_json(const json& j, int expect_dim) {
    if (!j.is_object() || !j.contains("coefficients") || !j["coefficients"].is_array())
        throw SpecError("Fourier series document needs a 'coefficients' array");
    FourierSeries f(expect_dim);
    std::map<LatticeVector, std::complex<double>> seen;
    for (const auto& triple : j["coefficients"]) {
        if (!triple.is_array() || triple.size() != 3 || !triple[0].is_array())
            throw SpecError("coefficient entries must be [[n1..nd], re, im] triples");
        LatticeVector n;
        for (const auto& v : triple[0]) {
            if (!v.is_number_integer()) throw SpecError("mode entries must be integers");
            n.n.push_back(v.get<long long>());
        }
        if (n.dim() != expect_dim)
            throw SpecError("mode dimension " + std::to_string(n.dim()) + " != spec dimension " +
                            std::to_string(expect_dim));
        std::complex<double> c(triple[1].get<double>(), triple[2].get<double>());
        LatticeVector canon = n.is_canonical() ? n : n.negated();
        std::complex<double> canon_c = n.is_canonical() ? c : std::conj(c);
        auto it = seen.find(canon);
        if (it != seen.end()) {
            if (std::abs(it->second - canon_c) > 1e-12 * (1.0 + std::abs(canon_c)))
                throw SpecError("mode " + n.str() + " listed twice with inconsistent values");
            continue; // both halves of a pair given consistently
        }
        seen.emplace(canon, canon_c);
        f.set_pair(canon, canon_c);
    }
    return f;
}

FieldSpec parse_spec(const json& doc) {
    if (!doc.is_object()) throw SpecError("field spec document must be a JSON object");
    if (!doc.contains("dimension") || !doc["dimension"].is_number_integer())
        throw SpecError("field spec needs an integer 'dimension'");
    const int d = doc["dimension"].get<int>();
    check_dim_range(d);
    if (!doc.contains("variant") || !doc["variant"].is_string())
        throw SpecError("field spec needs a 'variant' string");
    const std::string variant = doc["variant"].get<std::string>();
    const json params = doc.value("params", json::object());

    FieldSpec spec;
    if (variant == "general_fourier") {
        if (!params.contains("components") || !params["components"].is_array() ||
            static_cast<int>(params["components"].size()) != d)
            throw SpecError("general_fourier needs 'components', one series per dimension");
        std::vector<FourierSeries> comps;
        for (const auto& c : params["components"]) comps.push_back(fourier_from_json(c, d));
        spec = FieldSpec::general_fourier(std::move(comps));
    } else if (variant == "stepanoff") {
        if (!params.contains("xi") || !params["xi"].is_array() ||
            static_cast<int>(params["xi"].size()) != d)
            throw SpecError("stepanoff needs a d-vector 'xi'");
        Vec xi;
        for (const auto& v : params["xi"]) xi.push_back(v.get<double>());
        if (params.value("vanishing", false)) {
            FourierSeries base = fourier_from_json(
                params.contains("profile_base") ? params["profile_base"] : json(), d);
            spec = FieldSpec::stepanoff_vanishing(std::move(base), params.value("power", 0.75),
                                                  std::move(xi));
        } else {
            if (!params.contains("rho"))
                throw SpecError("stepanoff needs 'rho' (inverse profile) or vanishing mode");
            spec = FieldSpec::stepanoff(fourier_from_json(params["rho"], d), std::move(xi));
        }
        if (params.contains("divisor_override")) {
            auto& f = std::get<StepanoffField>(spec.variant_mut());
            for (const auto& e : params["divisor_override"]) {
                if (!e.is_object() || !e.contains("n") || !e.contains("value"))
                    throw SpecError("divisor_override entries need 'n' and 'value'");
                LatticeVector n{e["n"].get<std::vector<long long>>()};
                if (n.dim() != d) throw SpecError("divisor_override mode dimension mismatch");
                f.divisor_override[n] = e["value"].get<double>();
            }
        }
    } else if (variant == "separable") {
        if (!params.contains("profiles") || !params["profiles"].is_array() ||
            static_cast<int>(params["profiles"].size()) != d)
            throw SpecError("separable needs 'profiles', one 1-d series per dimension");
        std::vector<FourierSeries> profs;
        for (const auto& p : params["profiles"]) profs.push_back(fourier_from_json(p, 1));
        spec = FieldSpec::separable(std::move(profs));
    } else if (variant == "preset") {
        if (!params.contains("name") || !params["name"].is_string())
            throw SpecError("preset variant needs params.name");
        auto p = make_preset(params["name"].get<std::string>(), params);
        if (p->dim != d) throw SpecError("preset dimension does not match document dimension");
        spec = FieldSpec::preset(std::move(p));
    } else if (variant == "constructed") {
        spec = parse_constructed_field(params, d);
    } else {
        throw SpecError("unknown field spec variant '" + variant + "'");
    }

    if (doc.contains("invariant_density"))
        spec.set_invariant_density(fourier_from_json(doc["invariant_density"], d));
    return spec;
}

FieldSpec parse_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open spec file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw SpecError("invalid JSON in " + path + ": " + e.what());
    }
    return parse_spec(doc);
}

json serialize_spec(const FieldSpec& spec) {
    if (!spec.validated()) throw SpecError("serialize_spec: field spec not validated");
    json doc;
    doc["dimension"] = spec.dimension();
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, GeneralFourierField>) {
                doc["variant"] = "general_fourier";
                json comps = json::array();
                for (const auto& c : f.components) comps.push_back(fourier_to_json(c));
                doc["params"] = json{{"components", comps}};
            } else if constexpr (std::is_same_v<T, StepanoffField>) {
                doc["variant"] = "stepanoff";
                json p;
                p["xi"] = f.xi;
                if (f.vanishing) {
                    p["vanishing"] = true;
                    p["power"] = f.power;
                    p["profile_base"] = fourier_to_json(f.profile_base);
                } else {
                    p["rho"] = fourier_to_json(f.rho);
                }
                if (!f.divisor_override.empty()) {
                    json ov = json::array();
                    for (const auto& [n, v] : f.divisor_override)
                        ov.push_back(json{{"n", n.n}, {"value", v}});
                    p["divisor_override"] = ov;
                }
                doc["params"] = p;
            } else if constexpr (std::is_same_v<T, SeparableField>) {
                doc["variant"] = "separable";
                json profs = json::array();
                for (const auto& p : f.profiles) profs.push_back(fourier_to_json(p));
                doc["params"] = json{{"profiles", profs}};
            } else if constexpr (std::is_same_v<T, ConstructedField>) {
                doc["variant"] = "constructed";
                doc["params"] = f.backend->serialize();
            } else if constexpr (std::is_same_v<T, PresetField>) {
                doc["variant"] = "preset";
                doc["params"] = f.preset->params;
            } else {
                throw SpecError("serialize_spec: empty field spec");
            }
        },
        spec.variant());
    if (spec.invariant_density())
        doc["invariant_density"] = fourier_to_json(*spec.invariant_density());
    return doc;
}

} // namespace torusflow
