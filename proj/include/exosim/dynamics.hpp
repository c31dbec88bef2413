#pragma once

// Hybrid simulation: the human follows the prescribed gait (inverse dynamics)
// while the exoskeleton joints evolve under actuator and strap forces (forward
// dynamics), coupled through the straps and the load-support tie.

#include "exosim/control.hpp"
#include "exosim/model.hpp"
#include "exosim/motion.hpp"
#include "exosim/muscle.hpp"
#include "exosim/strap.hpp"

#include <array>
#include <optional>
#include <vector>

namespace exosim {

struct GrfResult {
  Vec3 force = Vec3::Zero();
  std::optional<Vec3> cop;
  Vec3 residual_moment = Vec3::Zero();  // whole-body moment not carried by force at the CoP
  int stance_foot = -1;                 // 0 left, 1 right, -1 flight
  double friction_clamp = 0.0;          // N removed from the horizontal force
  bool cop_clamped = false;
};

/// Whole-system equivalent force: F = sum m (a - g) over active bodies, applied
/// at the CoP found from moment balance on the ground plane y = 0.
GrfResult predict_grf(const ModelAssembly& assembly, const TreeKinematics& kin,
                      const std::array<bool, 2>& contact, double mu = 0.8,
                      const std::vector<bool>& active = {});

struct HumanTorques {
  VecX tau;    // human DOFs in layout order (root first)
  VecX tau_M;  // lower-limb 8-subvector
  NewtonEulerResult raw;
};

/// Newton-Euler over the combined tree. Exoskeleton strap reactions always
/// load the exoskeleton bodies; the human-side strap loads are applied only
/// when include_straps is set.
HumanTorques inverse_dynamics_human(const ModelAssembly& assembly, const TreeKinematics& kin,
                                    const GrfResult& grf, const StrapLoads& straps, bool include_straps,
                                    const std::vector<bool>& active = {});

/// Generalized exo torque needed for the given motion, net of strap loads.
VecX inverse_dynamics_exo(const ModelAssembly& assembly, const VecX& q, const VecX& qd, const VecX& qdd,
                          const VecX& F_S);

/// Solves M_ee qdd_e = tau_exo + tau_SE - bias with the human coordinates (and
/// accelerations) prescribed. Throws DegenerateError on a singular mass matrix.
VecX forward_dynamics_exo_torque(const ModelAssembly& assembly, const VecX& q, const VecX& qd,
                                 const VecX& qdd, const VecX& tau_exo, const VecX& F_S);

/// Same with tau_exo = M_A F_A.
VecX forward_dynamics_exo(const ModelAssembly& assembly, const VecX& q, const VecX& qd, const VecX& qdd,
                          const VecX& F_A, const VecX& F_S);

/// Exoskeleton kinetic + gravitational + strap elastic energy (human held still).
double exo_mechanical_energy(const ModelAssembly& assembly, const VecX& q, const VecX& qd);

enum class MacDemand { exclude_straps, include_straps };

struct SimulationOptions {
  ControllerKind controller = ControllerKind::passive;
  double dt = 1e-3;
  int cycles = 2;
  double mu = 0.8;
  MacDemand mac_demand = MacDemand::include_straps;
  double muscle_p = 2.0;
  double muscle_w = 100.0;
  bool discard_first_cycle = true;
};

struct SimulationState {
  double t = 0.0;
  long step = 0;
  VecX q_e, qd_e;
  VecX qdd_e_prev;  // exoskeleton accelerations from the previous step
};

struct SimulationFrame {
  double t = 0.0;
  double gait_pct = 0.0;
  GrfResult grf;
  VecX tau_human;   // 16, with straps
  VecX tau_req;     // 8, lower-limb demand without human-side strap loads
  VecX F_S;         // 12
  VecX F_A;         // 6
  std::optional<double> phi;
  VecX activations;
  std::array<double, 2> knee_reaction{0.0, 0.0};
  std::array<double, kStrapCount> strap_pressure{};
  VecX desired_F_S;  // 12, zero unless MAC
  std::vector<bool> bound_active;
  bool limit_warning = false;
  bool solver_fallback = false;
};

class Simulator {
 public:
  Simulator(const ModelAssembly& assembly, const GaitTrajectory& trajectory, SimulationOptions options);

  /// Exoskeleton aligned to the human pose at t = 0, at rest.
  SimulationState initial_state() const;
  std::pair<SimulationFrame, SimulationState> step(const SimulationState& state, double dt) const;

  /// Combined coordinate vectors at time t for the given exo state.
  void assemble(const MotionSample& s, const SimulationState& state, VecX& q, VecX& qd, VecX& qdd) const;

  const ModelAssembly& assembly() const { return *assembly_; }
  const GaitTrajectory& trajectory() const { return *trajectory_; }
  const SimulationOptions& options() const { return options_; }
  bool exo_active() const { return options_.controller != ControllerKind::none; }

 private:
  const ModelAssembly* assembly_;
  const GaitTrajectory* trajectory_;
  SimulationOptions options_;
  std::vector<int> column_of_dof_;  // trajectory column per human DOF
  std::vector<bool> active_;
  VecX limits_;
  std::vector<std::pair<double, double>> exo_limits_;
};

struct TorquePeaks {
  double hip_flexion = 0.0;
  double hip_extension = 0.0;
  double hip_abduction = 0.0;
  double hip_rotation = 0.0;
  double knee_extension = 0.0;
};

struct CycleSummary {
  TorquePeaks peaks;  // left leg
  Vec3 peak_grf = Vec3::Zero();  // max |component|; vertical is max upward
  double strap_rms = 0.0;
  std::array<double, kStrapCount> strap_rms_per_strap{};
  double peak_strap_pressure = 0.0;
  VecX peak_activation;
  double peak_knee_compression = 0.0;  // magnitude, both legs
  double peak_actuator_force = 0.0;
  double max_muscle_excess = 0.0;  // max(f - f_max, -f) over the run; <= 0 when bounds hold
  int limit_warnings = 0;
  int solver_fallbacks = 0;
};

struct RunResult {
  std::vector<SimulationFrame> frames;  // recorded frames (transient cycle dropped)
  CycleSummary summary;
  double dt_effective = 0.0;
  int steps_per_cycle = 0;
  std::vector<std::string> muscle_names;
};

/// Runs options.cycles whole gait cycles. dt is snapped so that each cycle
/// holds an integer number of steps.
RunResult run_cycle(const ModelAssembly& assembly, const GaitTrajectory& trajectory,
                    const SimulationOptions& options);

CycleSummary summarize(const ModelAssembly& assembly, const std::vector<SimulationFrame>& frames);

}  // namespace exosim
