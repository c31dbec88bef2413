#include "exosim/control.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace exosim {

MinNormResult min_norm_solve(const MatX& A, const VecX& b) {
  require_size(b.size(), A.rows(), "b");
  MinNormResult r;
  if (A.cols() == 0) {
    r.x = VecX();
    r.residual = b.norm();
    return r;
  }
  Eigen::CompleteOrthogonalDecomposition<MatX> cod;
  cod.setThreshold(1e-10);
  cod.compute(A);
  r.x = cod.solve(b);
  r.rank = static_cast<int>(cod.rank());
  r.residual = (A * r.x - b).norm();
  return r;
}

BoundedLsqResult bounded_least_squares(const MatX& A, const VecX& b, const VecX& lo, const VecX& hi) {
  const Eigen::Index n = A.cols();
  require_size(b.size(), A.rows(), "b");
  require_size(lo.size(), n, "lo");
  require_size(hi.size(), n, "hi");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lo[i] <= hi[i])) throw ValidationError("bounded_least_squares: lo must not exceed hi");
  }
  if (!A.allFinite() || !b.allFinite()) throw ValidationError("bounded_least_squares: non-finite input");

  BoundedLsqResult res;
  // 0 free, -1 at lower, +1 at upper.
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  VecX x = min_norm_solve(A, b).x;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x[i] <= lo[i]) {
      x[i] = lo[i];
      state[static_cast<std::size_t>(i)] = -1;
    } else if (x[i] >= hi[i]) {
      x[i] = hi[i];
      state[static_cast<std::size_t>(i)] = 1;
    }
  }

  const double scale = A.norm() * (b.norm() + A.norm() * std::max(1.0, x.lpNorm<Eigen::Infinity>()));
  const double tol = 1e-12 * std::max(scale, std::numeric_limits<double>::min());
  const int max_iter = 20 * static_cast<int>(n) + 50;

  auto subproblem = [&]() {
    // Least squares over the free coordinates with the rest held at bounds.
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] == 0) free.push_back(i);
    }
    VecX rhs = b;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] != 0) rhs -= A.col(i) * x[i];
    }
    MatX Af(A.rows(), static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) Af.col(static_cast<Eigen::Index>(k)) = A.col(free[k]);
    const VecX z = min_norm_solve(Af, rhs).x;
    return std::make_pair(free, z);
  };

  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    // Inner loop: move toward the free-set minimizer, fixing blocking bounds.
    bool inner_done = false;
    for (int guard = 0; guard <= n && !inner_done; ++guard) {
      auto [free, z] = subproblem();
      double alpha = 1.0;
      Eigen::Index blocking = -1;
      for (std::size_t k = 0; k < free.size(); ++k) {
        const Eigen::Index i = free[k];
        const double zi = z[static_cast<Eigen::Index>(k)];
        if (zi < lo[i]) {
          const double a = (lo[i] - x[i]) / (zi - x[i]);
          if (a < alpha) alpha = a, blocking = i;
        } else if (zi > hi[i]) {
          const double a = (hi[i] - x[i]) / (zi - x[i]);
          if (a < alpha) alpha = a, blocking = i;
        }
      }
      alpha = std::clamp(alpha, 0.0, 1.0);
      for (std::size_t k = 0; k < free.size(); ++k) {
        const Eigen::Index i = free[k];
        x[i] += alpha * (z[static_cast<Eigen::Index>(k)] - x[i]);
      }
      if (blocking < 0) {
        inner_done = true;
        break;
      }
      for (std::size_t k = 0; k < free.size(); ++k) {
        const Eigen::Index i = free[k];
        const double span = std::max(1.0, hi[i] - lo[i]);
        if (i == blocking || x[i] <= lo[i] + 1e-14 * span || x[i] >= hi[i] - 1e-14 * span) {
          const bool lower = (i == blocking) ? (z[static_cast<Eigen::Index>(k)] < lo[i])
                                             : (x[i] - lo[i] < hi[i] - x[i]);
          x[i] = lower ? lo[i] : hi[i];
          state[static_cast<std::size_t>(i)] = lower ? -1 : 1;
        }
      }
    }

    // KKT: bound coordinates must have outward-pointing gradients.
    const VecX g = A.transpose() * (A * x - b);
    Eigen::Index worst = -1;
    double worst_violation = tol;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int s = state[static_cast<std::size_t>(i)];
      if (s == 0 || lo[i] == hi[i]) continue;
      const double v = (s < 0) ? -g[i] : g[i];
      if (v > worst_violation) worst_violation = v, worst = i;
    }
    if (worst < 0) {
      res.x = x;
      return res;
    }
    state[static_cast<std::size_t>(worst)] = 0;
  }
  res.x = x;
  res.converged = false;
  return res;
}

const char* controller_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::none: return "none";
    case ControllerKind::passive: return "passive";
    case ControllerKind::mic: return "mic";
    case ControllerKind::mac: return "mac";
  }
  return "?";
}

ControllerKind parse_controller(const std::string& name) {
  if (name == "none" || name == "no-exo" || name == "noexo") return ControllerKind::none;
  if (name == "passive") return ControllerKind::passive;
  if (name == "mic") return ControllerKind::mic;
  if (name == "mac") return ControllerKind::mac;
  throw ConfigError("unknown controller '" + name + "' (expected none, passive, mic or mac)");
}

ControllerOutput passive_controller() { return {}; }

namespace {

std::vector<bool> bound_flags(const VecX& F, const VecX& limits) {
  std::vector<bool> out(static_cast<std::size_t>(F.size()));
  for (Eigen::Index i = 0; i < F.size(); ++i) {
    out[static_cast<std::size_t>(i)] = std::abs(F[i]) >= limits[i] * (1.0 - 1e-12);
  }
  return out;
}

void check_limits(const VecX& limits, Eigen::Index n) {
  require_size(limits.size(), n, "limits");
  if ((limits.array() <= 0.0).any()) throw ValidationError("actuator limits must be positive");
}

}  // namespace

ControllerOutput mic_step(const MatX& M_A, const MatX& M_SE, const VecX& F_S, const VecX& limits) {
  require_size(M_SE.cols(), F_S.size(), "F_S");
  require_size(M_SE.rows(), M_A.rows(), "M_SE rows");
  check_limits(limits, M_A.cols());
  const VecX tau_SE = M_SE * F_S;
  const auto sol = bounded_least_squares(M_A, tau_SE, -limits, limits);
  ControllerOutput out;
  out.F_A = sol.x;
  out.objective = (M_A * sol.x - tau_SE).squaredNorm();
  out.bound_active = bound_flags(sol.x, limits);
  out.converged = sol.converged;
  return out;
}

ControllerOutput mac_step(const MatX& M_SH, const MatX& M_SE, const MatX& M_A, const VecX& tau_req,
                          const VecX& limits) {
  require_size(tau_req.size(), M_SH.rows(), "tau_req");
  require_size(M_SE.cols(), M_SH.cols(), "M_SE columns");
  require_size(M_SE.rows(), M_A.rows(), "M_SE rows");
  check_limits(limits, M_A.cols());
  const MinNormResult desired = min_norm_solve(M_SH, tau_req);
  const VecX tau_SE = M_SE * desired.x;
  const auto sol = bounded_least_squares(M_A, -tau_SE, -limits, limits);
  ControllerOutput out;
  out.F_A = sol.x;
  out.objective = (M_A * sol.x + tau_SE).squaredNorm();
  out.desired_F_S = desired.x;
  out.desired_residual = desired.residual;
  out.bound_active = bound_flags(sol.x, limits);
  out.converged = sol.converged;
  return out;
}

}  // namespace exosim
