#pragma once

// Property suite behind `validate`: each check reports the measured value next
// to its threshold so that marginal passes are visible.

#include "exosim/dynamics.hpp"

#include <string>
#include <vector>

namespace exosim {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ValidationOptions {
  unsigned long seed = 1;
  StrapFault fault;  // test hook; empty name = pristine
  bool include_dynamic = true;  // impulse balance and energy drift (a few seconds)
};

/// Max relative mismatch between the analytic moment arms and central
/// differences of actuator lengths / strap point positions.
CheckResult check_moment_arms(const ModelAssembly& assembly, const VecX& q, const StrapFault* fault = nullptr);

/// Every strap load pair must cancel, and the exo-side loads must produce
/// M_SE F_S through Newton-Euler. Names the first offending strap.
CheckResult check_strap_action_reaction(const ModelAssembly& assembly, const VecX& q, const StrapFault* fault = nullptr);

/// tau = ID(qdd); FD(tau) must return qdd.
CheckResult check_id_fd_round_trip(const ModelAssembly& assembly, const VecX& q, const VecX& qd, unsigned long seed);

CheckResult check_bounded_lsq(unsigned long seed, int problems = 200);
CheckResult check_min_norm(unsigned long seed, int problems = 200);
CheckResult check_muscle_kkt(const ModelAssembly& assembly, unsigned long seed, int problems = 200);

/// |integral of GRF - weight * T| / (weight * T) over a recorded cycle.
double impulse_balance_error(const ModelAssembly& assembly, const RunResult& result, bool exo_on);
CheckResult check_impulse_balance(const ModelAssembly& assembly, const GaitTrajectory& gait);

/// Free exoskeleton oscillation about a still subject with undamped straps:
/// max energy deviation at dt and dt/2. Returns {drift(dt), drift(dt/2)}.
std::pair<double, double> energy_drift_pair(const ModelAssembly& assembly, double dt, double horizon);
CheckResult check_energy_drift(const ModelAssembly& assembly);

std::vector<CheckResult> run_validation(const ValidationOptions& options = {});

std::string format_check(const CheckResult& r);

}  // namespace exosim
