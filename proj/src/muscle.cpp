#include "exosim/muscle.hpp"

#include "exosim/control.hpp"

#include <cmath>

namespace exosim {

namespace {

int leg_of(const MuscleActuator& m) { return m.side == Side::left ? 0 : 1; }

}  // namespace

VecX lower_limb_angles(const ModelAssembly& a, const VecX& q) {
  require_size(q.size(), a.layout.total, "q");
  VecX q8(8);
  for (int i = 0; i < 8; ++i) q8[i] = q[a.layout.lower_limb[static_cast<std::size_t>(i)]];
  return q8;
}

MatX moment_arm_matrix(const std::vector<MuscleActuator>& muscles, const VecX& q8) {
  require_size(q8.size(), 8, "q8");
  MatX R = MatX::Zero(8, static_cast<Eigen::Index>(muscles.size()));
  for (std::size_t i = 0; i < muscles.size(); ++i) {
    const MuscleActuator& m = muscles[i];
    for (const auto& [slot, c] : m.moment_arms) {
      const int row = 4 * leg_of(m) + slot;
      const double th = q8[row];
      R(row, static_cast<Eigen::Index>(i)) = c[0] + c[1] * th + c[2] * th * th;
    }
  }
  return R;
}

double musculotendon_length(const MuscleActuator& m, const VecX& q8) {
  require_size(q8.size(), 8, "q8");
  double len = m.rest_length;
  for (const auto& [slot, c] : m.moment_arms) {
    const double th = q8[4 * leg_of(m) + slot];
    len -= c[0] * th + c[1] * th * th / 2.0 + c[2] * th * th * th / 3.0;
  }
  return len;
}

MuscleSolution solve_muscle_forces(const VecX& tau, const std::vector<MuscleActuator>& muscles,
                                   const VecX& q8, double p, double w) {
  require_size(tau.size(), 8, "tau_demand");
  if (p != 2.0) throw ValidationError("only p = 2 is supported");
  if (!(w > 0.0)) throw ValidationError("residual weight w must be positive");
  const auto n = static_cast<Eigen::Index>(muscles.size());
  const MatX R = moment_arm_matrix(muscles, q8);
  VecX fmax(n);
  for (Eigen::Index i = 0; i < n; ++i) fmax[i] = muscles[static_cast<std::size_t>(i)].f_max;

  // In activations: || [I; sqrt(w) R diag(fmax)] a - [0; sqrt(w) tau] ||^2.
  const double sw = std::sqrt(w);
  MatX A(n + 8, n);
  A.topRows(n).setIdentity();
  A.bottomRows(8) = sw * R * fmax.asDiagonal();
  VecX b = VecX::Zero(n + 8);
  b.tail(8) = sw * tau;
  const auto sol = bounded_least_squares(A, b, VecX::Zero(n), VecX::Ones(n));

  MuscleSolution out;
  out.activations = sol.x;
  out.forces = sol.x.cwiseProduct(fmax);
  out.residual = tau - R * out.forces;
  out.objective = sol.x.squaredNorm() + w * out.residual.squaredNorm();
  out.converged = sol.converged;
  return out;
}

double knee_axial_reaction(const ModelAssembly& a, const Mat3& tibia_rotation, const Vec3& knee_force,
                           const VecX& muscle_forces, Side side) {
  require_size(muscle_forces.size(), static_cast<Eigen::Index>(a.muscles.size()), "muscle forces");
  const Vec3 axis = tibia_rotation.col(1);  // toward the femur
  double r = knee_force.dot(axis);
  for (std::size_t i = 0; i < a.muscles.size(); ++i) {
    const MuscleActuator& m = a.muscles[i];
    if (m.side != side || !m.spans(3)) continue;
    r -= muscle_forces[static_cast<Eigen::Index>(i)] * std::cos(m.knee_line_angle);
  }
  return r;
}

}  // namespace exosim
