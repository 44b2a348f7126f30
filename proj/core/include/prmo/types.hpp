#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace prmo {

using cxd = std::complex<double>;

// Thrown when a retraction denominator (column norm / modulus) vanishes;
// the caller is expected to shrink the step and retry.
struct DegenerateRetraction : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when two sub-array centres coincide and the separation gradient
// direction is undefined.
struct SingularGeometry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when the requested number of sub-arrays cannot be packed into the
// placement region at the required minimum separation.
struct PackingInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when no admissible starting beamformer can be produced (neither the
// semidefinite-relaxation path nor the matched-filter fallback succeeds
// within the power cap).
struct InitFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on malformed scenario-config files or inconsistent parameter sets.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace prmo
