#pragma once

#include <vector>

#include "srl/dynamics.hpp"
#include "srl/types.hpp"

namespace srl {

struct LinearModel {
  Matrix6d A;
  Eigen::Matrix<double, 6, 3> B;
};

// Stabilizing state feedback u = -K x. Construction validates that the
// closed loop A - B K has all eigenvalues strictly in the left half plane.
struct FeedbackGain {
  Eigen::Matrix<double, 3, 6> K = Eigen::Matrix<double, 3, 6>::Zero();
};

// R is sized so the fastest closed-loop pole stays well inside the stability
// region of the 100 Hz zero-order hold (|pole| * dt_control ~ 0.55).
struct LqrWeights {
  Matrix6d Q = (State() << 10, 10, 10, 1, 1, 1).finished().asDiagonal();
  Eigen::Matrix3d R = 10.0 * Eigen::Matrix3d::Identity();
};

struct RecoverySettings {
  double horizon = 10.0;     // seconds
  double tolerance = 0.01;   // range-normalized norm threshold for convergence
  StateRanges ranges = StateRanges::defaults();
};

struct RecoveryOutcome {
  bool success = false;
  bool violation = false;  // first link reached the ground
  std::vector<State> trajectory;
};

// Jacobian of the dynamics at the upright equilibrium, central differences.
LinearModel linearize(const PendulumParams& params);

// Solve A'P + PA - P B R^-1 B' P + Q = 0 by the matrix sign function.
// Returns the stabilizing solution; throws SynthesisFailure on
// non-convergence or when the residual exceeds 1e-8 * ||P||.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

// K = R^-1 B' P from the Riccati solution; validates closed-loop stability.
FeedbackGain lqr_gain(const LinearModel& model, const LqrWeights& weights = {});

// Saturated linear state feedback.
Control corrective_control(const State& x, const FeedbackGain& gain,
                           const PendulumParams& params);

// Closed-loop simulation from a state: success when the range-normalized norm
// drops below the tolerance before the horizon with |theta1| < pi/2
// throughout. Simulation divergence counts as failure without a violation.
RecoveryOutcome recovery_rollout(const State& x0, const FeedbackGain& gain,
                                 const PendulumParams& params, const SimConfig& config,
                                 const RecoverySettings& settings = {});

double max_closed_loop_real_eig(const LinearModel& model, const FeedbackGain& gain);

}  // namespace srl
