#pragma once

#include <stdexcept>
#include <string>

namespace srl {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Integrator produced a non-finite state.
struct SimulationDiverged : Error {
  using Error::Error;
};

// Mass matrix factorization failed; cannot happen for positive masses.
struct SingularConfiguration : Error {
  using Error::Error;
};

// Riccati iteration did not converge or produced an unstable closed loop.
struct SynthesisFailure : Error {
  using Error::Error;
};

// Perplexity calibration could not match the target for some point.
struct CalibrationError : Error {
  using Error::Error;
};

// Embedding objective became non-finite.
struct OptimizationFailure : Error {
  using Error::Error;
};

struct InsufficientData : Error {
  using Error::Error;
};

// Gaussian sampler exhausted its rejection budget.
struct DegenerateModel : Error {
  using Error::Error;
};

struct TrainingFailure : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace srl
