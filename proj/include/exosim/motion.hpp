#pragma once

#include "exosim/common.hpp"
#include "exosim/spline.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace exosim {

/// Stance interval as fractions of the gait cycle, begin < end.
struct StanceInterval {
  double begin = 0.0;
  double end = 0.0;
};

struct MotionSample {
  VecX q, qd, qdd;
  std::array<bool, 2> contact{false, false};  // left, right
  double phase = 0.0;                         // [0, 1) within the cycle
};

class GaitTrajectory {
 public:
  /// Validates and builds the interpolant. Throws ValidationError.
  GaitTrajectory(std::vector<std::string> names, VecX times, MatX coords, double cycle_duration,
                 bool periodic, std::array<std::vector<StanceInterval>, 2> stance);

  const std::vector<std::string>& names() const { return names_; }
  const VecX& times() const { return times_; }
  const MatX& coords() const { return coords_; }
  double cycle_duration() const { return cycle_; }
  bool periodic() const { return periodic_; }
  const std::array<std::vector<StanceInterval>, 2>& stance() const { return stance_; }
  int coordinate_count() const { return static_cast<int>(names_.size()); }
  int column(const std::string& name) const;  // throws LookupError

  /// Periodic trajectories wrap t into the cycle; others throw RangeError
  /// outside the sampled span.
  MotionSample sample(double t) const;
  std::array<bool, 2> contact_at_phase(double phase) const;

 private:
  std::vector<std::string> names_;
  VecX times_;
  MatX coords_;
  double cycle_ = 0.0;
  bool periodic_ = false;
  std::array<std::vector<StanceInterval>, 2> stance_;
  std::shared_ptr<const CubicSpline> spline_;
};

GaitTrajectory load_trajectory(const std::string& path);
void write_trajectory(const std::string& path, const GaitTrajectory& traj);

/// Human coordinate names in model order (root, then left and right legs).
const std::vector<std::string>& human_coordinate_names();

/// Synthetic running gait. Angles in degrees, lengths in m.
struct GaitParams {
  double speed = 3.96;           // m/s, treadmill belt speed (metadata only)
  double cadence = 1.25;         // strides per second
  double stance_fraction = 0.3;  // per foot, fraction of the stride
  int knots_per_cycle = 400;

  double pelvis_height = 0.93;
  double vertical_bounce = 1.0;  // 1: ballistic flight; 0: static standing
  double stance_ramp = 0.25;     // fraction of stance spent ramping vertical load
  double lateral_sway = 0.02;
  double pelvis_tilt = 0.0;      // deg, constant anterior tilt is negative
  double pelvis_list = 3.0;      // deg amplitude
  double pelvis_rotation = 4.0;  // deg amplitude

  double hip_flexion_mean = 15.0;
  double hip_flexion_amplitude = 25.0;
  double hip_flexion_peak_phase = 0.9;
  double hip_adduction_amplitude = 5.0;
  double hip_rotation_amplitude = 5.0;
  double knee_flexion_offset = 12.0;
  double knee_stance_flexion = 28.0;
  double knee_swing_flexion = 95.0;
  double knee_swing_peak_phase = 0.60;
  bool flat_foot = true;

  // Centre of pressure roll-over during stance, relative to the ankle (m), and
  // the foot extent it must stay within.
  double cop_touchdown = -0.02;
  double cop_toe_off = 0.12;
  double cop_margin_heel = 0.08;
  double cop_margin_toe = 0.18;

  // Planar point-mass body model (fractions of body mass, lengths in m) that
  // shapes the pelvis fore-aft path.
  double thigh_mass_fraction = 0.100;
  double shank_mass_fraction = 0.0465;
  double foot_mass_fraction = 0.0145;
  double thigh_length = 0.42;
  double thigh_com = 0.182;
  double shank_length = 0.42;
  double shank_com = 0.182;
  double hip_drop = 0.05;
  double foot_com_forward = 0.05;
  double trunk_com_height = 0.28;

  /// All motion amplitudes zero: a motionless pose on the left foot.
  static GaitParams standing();
};

GaitTrajectory synthesize_running_gait(const GaitParams& params);

}  // namespace exosim
