#pragma once

// Generic rigid-body tree built from 1-DOF primitives. Every joint of the
// human and exoskeleton models (revolute, spherical, free, fixed) expands into
// a short chain of revolute/prismatic primitives that share the joint origin.
// All kinematic quantities are expressed in the world frame.

#include "exosim/common.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace exosim {

struct Primitive {
  bool prismatic = false;
  Vec3 axis = Vec3::UnitZ();  // unit, in the frame produced by the preceding primitives
};

struct TreeBody {
  std::string name;
  int parent = -1;
  Vec3 anchor = Vec3::Zero();  // joint origin in the parent frame
  std::vector<Primitive> primitives;
  int first_dof = 0;
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();  // about the COM, body frame
};

class MultibodyTree {
 public:
  /// Appends a body. Parents must be added before children.
  int add_body(TreeBody body);

  int body_count() const { return static_cast<int>(bodies_.size()); }
  int dof_count() const { return dof_count_; }
  const TreeBody& body(int i) const { return bodies_.at(static_cast<std::size_t>(i)); }
  TreeBody& body(int i) { return bodies_.at(static_cast<std::size_t>(i)); }
  const std::vector<TreeBody>& bodies() const { return bodies_; }

  std::optional<int> find(const std::string& name) const;
  int index_of(const std::string& name) const;  // throws LookupError

  /// DOFs on the root-to-body path, in increasing order.
  const std::vector<int>& support(int body) const { return support_.at(static_cast<std::size_t>(body)); }
  /// Body owning each DOF.
  int dof_body(int dof) const { return dof_body_.at(static_cast<std::size_t>(dof)); }
  bool is_ancestor_or_self(int ancestor, int body) const;

 private:
  std::vector<TreeBody> bodies_;
  std::vector<std::vector<int>> support_;
  std::vector<int> dof_body_;
  int dof_count_ = 0;
};

struct BodyState {
  Mat3 rotation = Mat3::Identity();
  Vec3 origin = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();  // of the origin
  Vec3 angular_acceleration = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();  // of the origin

  Vec3 point(const Vec3& local) const { return origin + rotation * local; }
  Vec3 point_velocity(const Vec3& local) const {
    return velocity + angular_velocity.cross(rotation * local);
  }
  Vec3 point_acceleration(const Vec3& local) const {
    const Vec3 r = rotation * local;
    return acceleration + angular_acceleration.cross(r) +
           angular_velocity.cross(angular_velocity.cross(r));
  }
};

struct DofAxis {
  bool prismatic = false;
  Vec3 axis = Vec3::UnitZ();
  Vec3 point = Vec3::Zero();
};

struct TreeKinematics {
  std::vector<BodyState> bodies;
  std::vector<DofAxis> dofs;
};

/// Positions, velocities and accelerations of every body. Velocity and
/// acceleration inputs may be empty, in which case they are taken as zero.
TreeKinematics compute_kinematics(const MultibodyTree& tree, const VecX& q,
                                  const VecX& qd = VecX(), const VecX& qdd = VecX());

/// 3 x N linear Jacobian of a body-fixed point.
MatX point_jacobian(const MultibodyTree& tree, const TreeKinematics& kin, int body,
                    const Vec3& local_point);

/// A world-frame force (and optional free moment) applied at a world point.
struct ExternalLoad {
  int body = 0;
  Vec3 point = Vec3::Zero();
  Vec3 force = Vec3::Zero();
  Vec3 moment = Vec3::Zero();
};

struct NewtonEulerResult {
  VecX tau;
  // Force and moment (about the joint origin) exerted on each body by its
  // parent across the joint, world frame.
  std::vector<Vec3> joint_force;
  std::vector<Vec3> joint_moment;
};

/// Recursive Newton-Euler inverse dynamics. Bodies with active[i] == false
/// (and, by construction, their descendants) are ignored; their DOFs get zero
/// torque. An empty mask means all bodies are active.
NewtonEulerResult inverse_dynamics(const MultibodyTree& tree, const TreeKinematics& kin,
                                   std::span<const ExternalLoad> loads,
                                   const Vec3& gravity = kGravityVector,
                                   const std::vector<bool>& active = {});

/// Joint-space mass matrix restricted to the given DOFs (rows and columns).
MatX mass_matrix_block(const MultibodyTree& tree, const VecX& q, std::span<const int> dofs,
                       const std::vector<bool>& active = {});

Mat3 world_inertia(const TreeBody& body, const BodyState& state);

}  // namespace exosim
