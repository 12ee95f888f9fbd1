#pragma once

#include <stdexcept>
#include <string>

namespace torusflow {

// Malformed documents, bad dimensions, out-of-range knobs. CLI exit code 2.
struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical breakdown: step underflow, divergent Newton, quadrature depth
// exhaustion, exact-zero divisors. CLI exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A validity gate failed: positivity not certified, residual above tolerance,
// incompatible builder data. CLI exit code 4.
struct CertificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace torusflow
