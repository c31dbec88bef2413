#pragma once

#include "exosim/common.hpp"
#include "exosim/multibody.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace exosim {

enum class Side { left, right };

inline const char* side_suffix(Side s) { return s == Side::left ? "L" : "R"; }

struct BodySegment {
  std::string name;
  double mass = 0.0;          // kg
  Vec3 inertia_diag = Vec3::Zero();  // kg m^2 about the COM, segment frame
  Vec3 com_offset = Vec3::Zero();    // m, segment frame
  double length = 0.0;        // m
};

enum class JointKind { revolute, spherical, free, fixed };
enum class JointMode { prescribed, forward_dynamics };

struct JointSpec {
  std::string name;
  JointKind kind = JointKind::revolute;
  std::string parent;  // empty for the root
  std::string child;
  Vec3 axis = Vec3::UnitZ();  // revolute only
  // Intrinsic rotation sequence for spherical and free joints
  // (flexion, adduction, rotation).
  std::array<Vec3, 3> rotation_axes{Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitY()};
  Vec3 anchor = Vec3::Zero();  // parent frame
  JointMode mode = JointMode::prescribed;
  std::vector<std::pair<double, double>> limits;  // per DOF, optional

  int dof_count() const;
};

struct PointRef {
  std::string segment;
  Vec3 local = Vec3::Zero();
};

/// Linear actuator between two segments. Positive force pulls the endpoints
/// together.
struct ActuatorSpec {
  std::string name;
  PointRef endpoint_a;
  PointRef endpoint_b;
  double force_limit = 4000.0;  // N, symmetric
};

/// Tri-directional damped spring between an exoskeleton point and a body point.
/// Displacements are resolved in the frame of the human segment.
struct StrapElement {
  std::string name;
  PointRef exo_point;
  PointRef body_point;
  Vec3 rest_offset = Vec3::Zero();   // m
  Vec3 stiffness{160000.0, 1600.0, 1600.0};  // N/m
  Vec3 damping{400.0, 40.0, 40.0};           // N s/m
  // Optional stiffness for negative displacement (six-direction element).
  std::optional<Vec3> stiffness_negative;
  double contact_area = 0.02;  // m^2
};

/// Hill-free muscle: constant maximum force and polynomial moment arms.
struct MuscleActuator {
  std::string name;
  Side side = Side::left;
  double f_max = 1000.0;  // N
  // Lower-limb DOF slot (0..3 within a leg: hip flex, hip add, hip rot, knee)
  // -> moment-arm polynomial coefficients r(theta) = c0 + c1 theta + c2 theta^2.
  std::map<int, std::array<double, 3>> moment_arms;
  double rest_length = 0.3;  // m, musculotendon length at zero angles
  // Angle between the line of action and the tibia long axis; only used when
  // the muscle spans the knee.
  double knee_line_angle = 0.0;

  bool spans(int slot) const { return moment_arms.contains(slot); }
};

struct TieConstraint {
  std::string support = "load-support";
  std::string body = "pelvis";
};

/// Indices of the generalized coordinates, resolved from joint names.
struct DofLayout {
  std::vector<std::string> names;
  std::vector<int> human;                // all human DOFs, root first
  std::vector<int> exo;                  // exo-pelvis, exo-hip, exo-knee per side (L then R)
  std::array<int, 8> lower_limb{};       // hip flex/add/rot, knee per side (L then R)
  std::array<int, 6> root{};             // tx ty tz rz rx ry
  std::array<int, 2> ankle{};
  int total = 0;
};

/// Foot-length window limiting the centre of pressure around the ankle projection.
struct FootWindow {
  double heel = 0.08;
  double toe = 0.18;
  double half_width = 0.05;
};

struct ModelAssembly {
  std::vector<BodySegment> human_segments;
  std::vector<BodySegment> exo_segments;
  std::vector<JointSpec> joints;
  std::vector<ActuatorSpec> actuators;
  std::vector<StrapElement> straps;
  std::vector<MuscleActuator> muscles;
  TieConstraint tie;
  double subject_mass = 65.9;
  FootWindow foot_window;

  // Compiled from the description above by compile_assembly().
  MultibodyTree tree;
  DofLayout layout;
  std::vector<bool> exo_body;  // per tree body
  std::array<int, 2> foot_body{};
  std::array<int, 2> tibia_body{};

  double exo_mass() const;
  double total_mass() const { return subject_mass + exo_mass(); }
  const BodySegment& segment(const std::string& name) const;
};

/// Human anthropometry: mass fraction of the subject, COM, radii of gyration
/// (absolute, m) along x/y/z of the segment frame.
struct HumanSegmentParams {
  double mass_fraction = 0.0;
  Vec3 com = Vec3::Zero();
  Vec3 gyration = Vec3::Zero();
  double length = 0.0;
};

struct ExoSegmentParams {
  double mass = 0.0;
  Vec3 inertia = Vec3::Zero();
  Vec3 com = Vec3::Zero();
  double length = 0.0;
};

/// All model parameters. Geometry is given for the left side (z < 0) and
/// mirrored for the right side.
struct ModelConfig {
  double subject_mass = 65.9;
  double length_scale = 1.0;  // applied to human lengths and offsets

  HumanSegmentParams pelvis{0.142, {0.0, 0.0, 0.0}, {0.10, 0.10, 0.08}, 0.10};
  HumanSegmentParams torso{0.536, {0.0, 0.25, 0.0}, {0.16, 0.09, 0.15}, 0.55};
  HumanSegmentParams femur{0.100, {0.0, -0.182, 0.0}, {0.136, 0.042, 0.136}, 0.42};
  HumanSegmentParams tibia{0.0465, {0.0, -0.182, 0.0}, {0.127, 0.038, 0.127}, 0.42};
  HumanSegmentParams foot{0.0145, {0.05, -0.04, 0.0}, {0.045, 0.11, 0.105}, 0.08};
  Vec3 torso_anchor{0.0, 0.10, 0.0};
  Vec3 hip_anchor{0.0, -0.05, -0.085};

  ExoSegmentParams load_support{3.0, {0.150, 0.050, 0.110}, {-0.15, 0.10, 0.0}, 0.40};
  ExoSegmentParams exo_pelvis{5.0, {0.0181, 0.0311, 0.0172}, {0.03, -0.05, 0.0}, 0.15};
  ExoSegmentParams exo_femur{3.0, {0.0640, 0.0011, 0.0640}, {0.0, -0.18, 0.0}, 0.42};
  ExoSegmentParams exo_tibia{2.0, {0.0420, 0.0007, 0.0420}, {0.0, -0.17, 0.0}, 0.40};
  Vec3 exo_pelvis_anchor{-0.06, 0.06, -0.15};  // in the load-support frame
  Vec3 exo_hip_anchor{0.06, -0.11, 0.0};       // in the exo-pelvis frame
  Vec3 exo_knee_anchor{0.0, -0.42, 0.0};       // in the exo-femur frame

  double force_limit = 4000.0;
  // Actuator endpoints (left side, segment-local).
  Vec3 pelvis_actuator_support{-0.06, 0.18, -0.12};
  Vec3 pelvis_actuator_exo{0.0, 0.0, -0.09};
  Vec3 hip_actuator_pelvis{0.14, -0.03, 0.0};
  Vec3 hip_actuator_femur{0.06, -0.17, 0.0};
  Vec3 knee_actuator_femur{-0.07, -0.20, 0.0};
  Vec3 knee_actuator_tibia{-0.06, -0.21, 0.0};

  // Strap anchors (left side, segment-local).
  Vec3 femur_strap_exo{0.0, -0.20, 0.01};
  Vec3 femur_strap_body{0.0, -0.20, -0.055};
  Vec3 tibia_strap_exo{0.0, -0.25, 0.02};
  Vec3 tibia_strap_body{0.0, -0.25, -0.045};
  Vec3 strap_stiffness{160000.0, 1600.0, 1600.0};
  Vec3 strap_damping{400.0, 40.0, 40.0};
  std::optional<Vec3> strap_stiffness_negative;
  double strap_contact_area = 0.02;

  FootWindow foot_window;

  // Default muscle set per leg; mirrored to both sides.
  std::vector<MuscleActuator> muscles = default_muscles();

  static std::vector<MuscleActuator> default_muscles();
};

/// Reads a sectioned key-value model file. Keys left out keep their defaults;
/// unknown sections or keys are rejected with their path.
ModelConfig load_model_config(const std::string& path);

/// Builds, validates and compiles the human + exoskeleton assembly. Throws
/// ModelError naming the first invalid field.
ModelAssembly build_default_assembly(const ModelConfig& config = {});

/// Rebuilds the multibody tree and DOF layout from the description. Throws
/// ModelError when the description is structurally unusable.
void compile_assembly(ModelAssembly& assembly);

/// Lists every violated invariant; empty iff the assembly is valid.
std::vector<std::string> validate_assembly(const ModelAssembly& assembly);

struct SegmentPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

std::vector<SegmentPose> forward_kinematics(const ModelAssembly& assembly, const VecX& q);

/// 3 x N Jacobian of a point fixed on a segment.
MatX point_jacobian(const ModelAssembly& assembly, const VecX& q, const std::string& segment,
                    const Vec3& local_point);

struct ComKinematics {
  std::vector<Vec3> position;
  std::vector<Vec3> velocity;
  std::vector<Vec3> acceleration;
};

ComKinematics com_kinematics(const ModelAssembly& assembly, const VecX& q, const VecX& qd,
                             const VecX& qdd);

/// Human + exo coordinate vector with the exo joints aligned to the human
/// hip/knee angles.
VecX aligned_configuration(const ModelAssembly& assembly, const VecX& q_human);

}  // namespace exosim
