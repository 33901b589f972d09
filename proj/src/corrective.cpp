#include "srl/corrective.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "srl/safety_oracle.hpp"

namespace srl {

LinearModel linearize(const PendulumParams& params) {
  const double h = 1e-6;
  LinearModel m;
  for (int i = 0; i < 6; ++i) {
    State lo = State::Zero(), hi = State::Zero();
    lo(i) = -h;
    hi(i) = h;
    m.A.col(i) = (dynamics_eval(hi, Control::Zero(), params) -
                  dynamics_eval(lo, Control::Zero(), params)) /
                 (2 * h);
  }
  for (int i = 0; i < 3; ++i) {
    Control lo = Control::Zero(), hi = Control::Zero();
    lo(i) = -h;
    hi(i) = h;
    m.B.col(i) =
        (dynamics_eval(State::Zero(), hi, params) - dynamics_eval(State::Zero(), lo, params)) /
        (2 * h);
  }
  return m;
}

Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols())
    throw SynthesisFailure("riccati: inconsistent matrix dimensions");

  Eigen::LLT<Eigen::MatrixXd> r_chol(R);
  if (r_chol.info() != Eigen::Success)
    throw SynthesisFailure("riccati: R must be positive definite");

  // Matrix sign function of the Hamiltonian, with determinant scaling.
  Eigen::MatrixXd H(2 * n, 2 * n);
  H << A, B * r_chol.solve(B.transpose()), Q, -A.transpose();

  Eigen::MatrixXd Z = H;
  const double p = static_cast<double>(2 * n);
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::MatrixXd Z_old = Z;
    double ck = std::pow(std::abs(Z.determinant()), -1.0 / p);
    if (!std::isfinite(ck) || ck <= 0) ck = 1.0;
    Z *= ck;
    Z = Z - 0.5 * (Z - Z.inverse());
    if (!Z.allFinite()) throw SynthesisFailure("riccati: sign iteration diverged");
    if ((Z - Z_old).norm() <= 1e-10 * std::max(1.0, Z.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) throw SynthesisFailure("riccati: sign iteration did not converge");

  const Eigen::MatrixXd W11 = Z.topLeftCorner(n, n);
  const Eigen::MatrixXd W12 = Z.topRightCorner(n, n);
  const Eigen::MatrixXd W21 = Z.bottomLeftCorner(n, n);
  const Eigen::MatrixXd W22 = Z.bottomRightCorner(n, n);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd lhs(2 * n, n), rhs(2 * n, n);
  lhs << W12, W22 + eye;
  rhs << W11 + eye, W21;
  Eigen::MatrixXd P =
      Eigen::JacobiSVD<Eigen::MatrixXd>(lhs, Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
  P = 0.5 * (P + P.transpose()).eval();

  const Eigen::MatrixXd residual =
      A.transpose() * P + P * A - P * B * r_chol.solve(B.transpose()) * P + Q;
  if (!(residual.norm() <= 1e-8 * P.norm() + 1e-12))
    throw SynthesisFailure("riccati: residual check failed");
  return P;
}

FeedbackGain lqr_gain(const LinearModel& model, const LqrWeights& weights) {
  const Eigen::MatrixXd P = solve_care(model.A, model.B, weights.Q, weights.R);
  FeedbackGain gain;
  gain.K = weights.R.llt().solve(model.B.transpose() * P);
  if (!(max_closed_loop_real_eig(model, gain) < 0))
    throw SynthesisFailure("lqr: closed loop is not strictly stable");
  return gain;
}

double max_closed_loop_real_eig(const LinearModel& model, const FeedbackGain& gain) {
  const Matrix6d acl = model.A - model.B * gain.K;
  return Eigen::EigenSolver<Matrix6d>(acl, /*computeEigenvectors=*/false)
      .eigenvalues()
      .real()
      .maxCoeff();
}

Control corrective_control(const State& x, const FeedbackGain& gain,
                           const PendulumParams& params) {
  return saturate(-gain.K * x, params);
}

RecoveryOutcome recovery_rollout(const State& x0, const FeedbackGain& gain,
                                 const PendulumParams& params, const SimConfig& config,
                                 const RecoverySettings& settings) {
  RecoveryOutcome out;
  out.trajectory.push_back(x0);

  if (hits_ground(x0)) {
    out.violation = true;
    return out;
  }
  if (normalized_distance(x0, State::Zero(), settings.ranges) < settings.tolerance) {
    out.success = true;
    return out;
  }

  const int max_steps = static_cast<int>(std::ceil(settings.horizon / config.dt_control));
  State x = x0;
  for (int step = 0; step < max_steps; ++step) {
    const Control u = corrective_control(x, gain, params);
    try {
      x = integrate_step(x, u, params, config);
    } catch (const SimulationDiverged&) {
      return out;  // failure, violation unset
    }
    out.trajectory.push_back(x);
    if (hits_ground(x)) {
      out.violation = true;
      return out;
    }
    if (normalized_distance(x, State::Zero(), settings.ranges) < settings.tolerance) {
      out.success = true;
      return out;
    }
  }
  return out;
}

}  // namespace srl
