#pragma once

#include "exosim/common.hpp"

#include <optional>
#include <vector>

namespace exosim {

struct BoundedLsqResult {
  VecX x;
  int iterations = 0;
  bool converged = true;
};

/// min ||A x - b||^2 subject to lo <= x <= hi, by a primal active-set method
/// seeded with the clamped minimum-norm solution. Among several minimizers on
/// a face the minimum-norm one (in the free coordinates) is returned.
BoundedLsqResult bounded_least_squares(const MatX& A, const VecX& b, const VecX& lo, const VecX& hi);

struct MinNormResult {
  VecX x;
  double residual = 0.0;  // ||A x - b||
  int rank = 0;
};

/// Minimum-norm least-squares solution via complete orthogonal decomposition;
/// pivots below 1e-10 of the largest are treated as zero.
MinNormResult min_norm_solve(const MatX& A, const VecX& b);

enum class ControllerKind { none, passive, mic, mac };

const char* controller_name(ControllerKind kind);
ControllerKind parse_controller(const std::string& name);  // throws ConfigError

struct ControllerOutput {
  VecX F_A = VecX::Zero(6);
  std::optional<double> objective;  // phi1 (MIC) or phi2 (MAC)
  std::optional<VecX> desired_F_S;  // MAC only
  std::vector<bool> bound_active = std::vector<bool>(6, false);
  double desired_residual = 0.0;  // MAC: ||M_SH F'_S - tau_req||
  bool converged = true;
};

ControllerOutput passive_controller();

/// Minimizes ||M_A F_A - M_SE F_S||^2 within +-limits.
ControllerOutput mic_step(const MatX& M_A, const MatX& M_SE, const VecX& F_S, const VecX& limits);

/// Desired strap forces F'_S = min-norm solution of M_SH F'_S = tau_req, then
/// minimizes ||M_A F_A + M_SE F'_S||^2 within +-limits.
ControllerOutput mac_step(const MatX& M_SH, const MatX& M_SE, const MatX& M_A, const VecX& tau_req,
                          const VecX& limits);

}  // namespace exosim
