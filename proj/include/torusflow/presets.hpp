#pragma once

// Catalogued flows with closed-form solutions, used as oracles and demo
// inputs: a smooth inverse-density profile flow, a gradient field with an
// explicit arctan flow, a separable confined flow, a degenerate-profile flow
// with invariant lines, a single-zero vanishing profile flow, and the
// near-resonant profile built from the exact rational layer.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "torusflow/field_spec.hpp"
#include "torusflow/linalg.hpp"

namespace torusflow {

struct Preset {
    std::string name;
    int dim = 0;
    FieldSpec field;
    // Lifted flow (t, x) -> X(t, x); empty when no closed form is carried.
    // May be domain-restricted (see notes); throws outside its domain.
    std::function<Vec(double, const Vec&)> exact_flow;
    std::optional<Vec> known_zeta;               // constant rotation vector, when known
    std::optional<double> known_deviation_bound; // sup_t |X(t,x) - x - t zeta|
    std::string notes;
    nlohmann::json params; // normalized parameters for round-tripping
};

// Builds a catalogue entry; unknown names throw SpecError. Recognized
// parameters (all optional) by preset:
//   example_5_1:         xi (2-vector, default the golden unit direction)
//   gradient_arctan:     -
//   separable:           d (default 2), amplitudes (per-component scale)
//   cos2_profile:        gamma (default 1)
//   vanishing_stepanoff: xi, power (default 0.75), profile_base (series)
//   liouville:           count (default 3), sign (+1/-1)
std::shared_ptr<const Preset> make_preset(const std::string& name, const nlohmann::json& params);

std::vector<std::string> preset_names();

} // namespace torusflow
