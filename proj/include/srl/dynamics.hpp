#pragma once

#include "srl/types.hpp"

namespace srl {

// Three serial links in a vertical plane, point masses at the link midpoints,
// no friction. Manipulator form M(q)q" + C(q,q')q' + G(q) = u in the relative
// joint coordinates q = (theta1, theta2, theta3). The real system differs from
// the nominal one only through the mass mismatch factor delta on links 1 and 2.

// Clamp each torque component to [u_min, u_max].
Control saturate(const Control& u, const PendulumParams& params);

// Time derivative of the state. The input is assumed already saturated.
// Throws SingularConfiguration if the mass matrix cannot be factorized.
State dynamics_eval(const State& x, const Control& u, const PendulumParams& params);

// Kinetic plus potential energy; conserved under zero input.
double total_energy(const State& x, const PendulumParams& params);

// Advance by one control period with fixed-step RK4 at dt_physics, holding the
// input constant. Throws SimulationDiverged on a non-finite state.
State integrate_step(const State& x, const Control& u, const PendulumParams& params,
                     const SimConfig& config);

// Cartesian end-effector position, base joint at the origin.
Eigen::Vector2d forward_kinematics(const State& x, const PendulumParams& params);

}  // namespace srl
