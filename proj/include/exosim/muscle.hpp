#pragma once

#include "exosim/model.hpp"

#include <vector>

namespace exosim {

/// Lower-limb coordinate subvector (hip flex/add/rot, knee; left then right).
VecX lower_limb_angles(const ModelAssembly& assembly, const VecX& q);

/// 8 x n signed moment arms; positive arms produce positive joint torque.
MatX moment_arm_matrix(const std::vector<MuscleActuator>& muscles, const VecX& q8);

/// Musculotendon length consistent with the moment arms: r = -d length / d angle.
double musculotendon_length(const MuscleActuator& muscle, const VecX& q8);

struct MuscleSolution {
  VecX forces;       // N
  VecX activations;  // forces / f_max
  VecX residual;     // C = tau_demand - R f, 8-vector
  double objective = 0.0;
  bool converged = true;
};

/// Static optimization: minimize sum (f/f_max)^p + w C'C over 0 <= f <= f_max.
/// Only p = 2 is supported.
MuscleSolution solve_muscle_forces(const VecX& tau_demand, const std::vector<MuscleActuator>& muscles,
                                   const VecX& q8, double p = 2.0, double w = 100.0);

/// Axial tibiofemoral reaction for one leg: intersegmental force on the tibia
/// (world frame) projected on the tibia long axis, minus the axial pull of the
/// muscles crossing the knee. Negative values are compressive.
double knee_axial_reaction(const ModelAssembly& assembly, const Mat3& tibia_rotation,
                           const Vec3& knee_force, const VecX& muscle_forces, Side side);

}  // namespace exosim
