#include "srl/dynamics.hpp"

#include <cmath>

namespace srl {

namespace {

// The dynamics are assembled in absolute link angles phi = L q, where L is the
// lower-triangular ones matrix. With point masses at link midpoints the
// absolute-coordinate mass matrix is Mt(j,k) = beta(j,k) cos(phi_j - phi_k),
// the velocity term ct(j) = sum_k beta(j,k) sin(phi_j - phi_k) w_k^2 and the
// gravity term gt(j) = -gamma(j) sin(phi_j), with constants
//   beta(j,k) = sum_i m_i a_ij a_ik,   gamma(j) = g sum_i m_i a_ij,
// where a_ij is the distance the j-th absolute angle moves the i-th mass:
// a_ij = l_j for j < i, l_i / 2 for j = i, 0 otherwise. Transforming back to
// relative coordinates gives L^T Mt L q" = u - L^T (ct + gt).
struct ChainCoefficients {
  Eigen::Matrix3d beta;
  Eigen::Vector3d gamma;
};

ChainCoefficients chain_coefficients(const PendulumParams& p) {
  const double m1 = p.m1 * p.delta;
  const double m2 = p.m2 * p.delta;
  const double m3 = p.m3;

  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  a(0, 0) = p.l1 / 2;
  a(1, 0) = p.l1;
  a(1, 1) = p.l2 / 2;
  a(2, 0) = p.l1;
  a(2, 1) = p.l2;
  a(2, 2) = p.l3 / 2;

  const Eigen::Vector3d m(m1, m2, m3);
  ChainCoefficients c;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      c.beta(j, k) = (m.array() * a.col(j).array() * a.col(k).array()).sum();
  c.gamma = p.gravity * (a.transpose() * m);
  return c;
}

const Eigen::Matrix3d kCumSum = (Eigen::Matrix3d() << 1, 0, 0, 1, 1, 0, 1, 1, 1).finished();

Eigen::Matrix3d absolute_mass_matrix(const ChainCoefficients& c, const Eigen::Vector3d& phi) {
  Eigen::Matrix3d mt;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) mt(j, k) = c.beta(j, k) * std::cos(phi(j) - phi(k));
  return mt;
}

}  // namespace

Control saturate(const Control& u, const PendulumParams& params) {
  return u.cwiseMax(params.u_min).cwiseMin(params.u_max);
}

State dynamics_eval(const State& x, const Control& u, const PendulumParams& params) {
  const ChainCoefficients c = chain_coefficients(params);
  const Eigen::Vector3d phi = kCumSum * x.head<3>();
  const Eigen::Vector3d omega = kCumSum * x.tail<3>();

  const Eigen::Matrix3d mt = absolute_mass_matrix(c, phi);

  Eigen::Vector3d ct;
  for (int j = 0; j < 3; ++j) {
    double s = 0;
    for (int k = 0; k < 3; ++k)
      s += c.beta(j, k) * std::sin(phi(j) - phi(k)) * omega(k) * omega(k);
    ct(j) = s;
  }
  const Eigen::Vector3d gt = -c.gamma.array() * phi.array().sin();

  const Eigen::Matrix3d mass = kCumSum.transpose() * mt * kCumSum;
  const Eigen::Vector3d rhs = u - kCumSum.transpose() * (ct + gt);

  Eigen::LLT<Eigen::Matrix3d> llt(mass);
  if (llt.info() != Eigen::Success)
    throw SingularConfiguration("mass matrix is not positive definite");
  const Eigen::Vector3d qdd = llt.solve(rhs);

  State dx;
  dx.head<3>() = x.tail<3>();
  dx.tail<3>() = qdd;
  return dx;
}

double total_energy(const State& x, const PendulumParams& params) {
  const ChainCoefficients c = chain_coefficients(params);
  const Eigen::Vector3d phi = kCumSum * x.head<3>();
  const Eigen::Vector3d omega = kCumSum * x.tail<3>();
  const Eigen::Matrix3d mt = absolute_mass_matrix(c, phi);
  return 0.5 * omega.dot(mt * omega) + c.gamma.dot(phi.array().cos().matrix());
}

State integrate_step(const State& x, const Control& u, const PendulumParams& params,
                     const SimConfig& config) {
  const int n = config.substeps();
  const double h = config.dt_physics;
  State s = x;
  for (int i = 0; i < n; ++i) {
    const State k1 = dynamics_eval(s, u, params);
    const State k2 = dynamics_eval(s + (h / 2) * k1, u, params);
    const State k3 = dynamics_eval(s + (h / 2) * k2, u, params);
    const State k4 = dynamics_eval(s + h * k3, u, params);
    s += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!s.allFinite()) throw SimulationDiverged("state became non-finite during integration");
  }
  return s;
}

Eigen::Vector2d forward_kinematics(const State& x, const PendulumParams& params) {
  const Eigen::Vector3d phi = kCumSum * x.head<3>();
  const Eigen::Vector3d l(params.l1, params.l2, params.l3);
  return {l.dot(phi.array().sin().matrix()), l.dot(phi.array().cos().matrix())};
}

}  // namespace srl
