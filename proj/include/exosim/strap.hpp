#pragma once

// Strap interaction forces and the generalized moment-arm matrices that map
// actuator and strap forces to joint torques.
//
// F_S ordering: femur-L, femur-R, tibia-L, tibia-R, each (x, y, z) resolved in
// the frame of the strapped human segment. A positive component pushes the
// exoskeleton point along +axis and the human point along -axis.

#include "exosim/model.hpp"

#include <array>
#include <string>
#include <vector>

namespace exosim {

inline constexpr int kStrapCount = 4;
inline constexpr int kActuatorCount = 6;

struct StrapDiagnostics {
  Vec3 displacement = Vec3::Zero();  // d - d0, body frame
  Vec3 velocity = Vec3::Zero();      // d-dot, body frame
  Vec3 force = Vec3::Zero();         // body frame
  Vec3 world_force = Vec3::Zero();   // applied to the exoskeleton point
  Vec3 body_point = Vec3::Zero();    // world
  Vec3 exo_point = Vec3::Zero();     // world
};

struct SpringForces {
  VecX F_S = VecX::Zero(3 * kStrapCount);
  std::array<StrapDiagnostics, kStrapCount> straps;
};

/// Test hook: flips the sign of the exoskeleton-side reaction of one strap.
struct StrapFault {
  std::string flip_exo_side;
};

/// Evaluates every strap from the combined coordinates (human + exo).
SpringForces strap_forces(const ModelAssembly& assembly, const VecX& q, const VecX& qd);

/// World-frame point loads on the human and exoskeleton bodies produced by a
/// force vector F_S at the given configuration.
struct StrapLoads {
  std::vector<ExternalLoad> human;
  std::vector<ExternalLoad> exo;
};
StrapLoads strap_loads(const ModelAssembly& assembly, const VecX& q, const VecX& F_S,
                       const StrapFault* fault = nullptr);

struct MomentArmSet {
  MatX M_A;   // 6 x 6, exo DOFs x actuators
  MatX M_SE;  // 6 x 12, exo DOFs x strap components
  MatX M_SH;  // 8 x 12, lower-limb DOFs x strap components
  VecX evaluated_at;
};

/// Throws DegenerateError when an actuator has coincident endpoints.
MomentArmSet moment_arms(const ModelAssembly& assembly, const VecX& q,
                         const StrapFault* fault = nullptr);

/// Actuator lengths (endpoint separation), m.
VecX actuator_lengths(const ModelAssembly& assembly, const VecX& q);

/// Fore-aft pressure |f_x| / area per strap, Pa.
std::array<double, kStrapCount> strap_pressure(const VecX& F_S, const std::vector<StrapElement>& straps);

}  // namespace exosim
