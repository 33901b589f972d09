#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "srl/error.hpp"

namespace srl {

// [theta1, theta2, theta3, dtheta1, dtheta2, dtheta3]. theta1 is measured
// from the upward vertical; theta2 and theta3 are relative to the preceding
// link. The zero state is the upright configuration.
using State = Eigen::Matrix<double, 6, 1>;

// Joint torques [u1, u2, u3] in newton-meters.
using Control = Eigen::Vector3d;

using Matrix6d = Eigen::Matrix<double, 6, 6>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Ground constraint: the first link must stay above horizontal.
inline bool hits_ground(const State& x) { return std::abs(x(0)) >= kPi / 2.0; }

struct PendulumParams {
  double m1 = 1.0, m2 = 1.0, m3 = 1.0;  // link masses, kg
  double l1 = 1.0, l2 = 1.0, l3 = 1.0;  // link lengths, m
  double gravity = 9.81;                // m/s^2
  double u_max = 100.0;                 // N*m
  double u_min = -100.0;
  double delta = 1.0;  // mass mismatch, applied to links 1 and 2 only

  static PendulumParams nominal() { return PendulumParams{}; }

  PendulumParams with_delta(double d) const {
    PendulumParams p = *this;
    p.delta = d;
    return p;
  }

  void validate() const {
    if (!(m1 > 0 && m2 > 0 && m3 > 0)) throw ConfigError("pendulum masses must be positive");
    if (!(l1 > 0 && l2 > 0 && l3 > 0)) throw ConfigError("pendulum lengths must be positive");
    if (!(u_min < u_max)) throw ConfigError("u_min must be below u_max");
    if (!(delta > 0)) throw ConfigError("mass mismatch factor must be positive");
  }
};

struct SimConfig {
  double dt_physics = 1e-3;  // integrator step, s
  double dt_control = 1e-2;  // zero-order-hold control period, s

  int substeps() const {
    return static_cast<int>(std::llround(dt_control / dt_physics));
  }

  void validate() const {
    if (!(dt_physics > 0)) throw ConfigError("dt_physics must be positive");
    const int n = substeps();
    if (n < 1 || std::abs(n * dt_physics - dt_control) > 1e-12 * dt_control)
      throw ConfigError("dt_control must be a positive integer multiple of dt_physics");
  }
};

// Per-dimension sampling bounds, also used for range normalization.
struct StateRanges {
  State lower;
  State upper;

  static StateRanges defaults() {
    StateRanges r;
    r.lower << -kPi / 2, -kPi, -kPi, -10.0, -20.0, -20.0;
    r.upper << kPi / 2, kPi, kPi, 10.0, 20.0, 20.0;
    return r;
  }

  State width() const { return upper - lower; }

  bool contains(const State& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }

  void validate() const {
    if (!((upper - lower).array() > 0).all())
      throw ConfigError("state ranges must have lower < upper in every dimension");
  }
};

struct LabeledSample {
  State state;
  int label = 0;  // 1 safe, 0 unsafe
};

}  // namespace srl
