#include "exosim/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace exosim {

namespace {

double rel_max(const MatX& diff, const MatX& ref) {
  return diff.lpNorm<Eigen::Infinity>() / std::max(1e-12, ref.lpNorm<Eigen::Infinity>());
}

// Gait pose at 30% of the cycle with the exoskeleton slightly off the human
// so that every strap is loaded.
VecX probe_configuration(const ModelAssembly& a, const GaitTrajectory& gait) {
  const MotionSample s = gait.sample(0.3 * gait.cycle_duration());
  VecX qh(static_cast<Eigen::Index>(a.layout.human.size()));
  for (std::size_t i = 0; i < a.layout.human.size(); ++i) {
    qh[static_cast<Eigen::Index>(i)] = s.q[gait.column(a.layout.names[static_cast<std::size_t>(a.layout.human[i])])];
  }
  VecX q = aligned_configuration(a, qh);
  const double offsets[] = {0.010, -0.015, 0.020, -0.008, 0.012, -0.018};
  for (std::size_t i = 0; i < a.layout.exo.size(); ++i) q[a.layout.exo[i]] += offsets[i % 6];
  return q;
}

double lsq_objective(const MatX& A, const VecX& b, const VecX& x) { return (A * x - b).squaredNorm(); }

// Box grid refined around the incumbent until the cell is negligible.
double grid_minimum(const MatX& A, const VecX& b, const VecX& lo, const VecX& hi) {
  const int n = 10;
  VecX c_lo = lo, c_hi = hi;
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector3d arg = (lo + hi) / 2.0;
  for (int level = 0; level < 40; ++level) {
    const Eigen::Vector3d step = (c_hi - c_lo) / n;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        for (int k = 0; k <= n; ++k) {
          const Eigen::Vector3d x = c_lo + Eigen::Vector3d(i * step[0], j * step[1], k * step[2]);
          const double f = lsq_objective(A, b, x);
          if (f < best) {
            best = f;
            arg = x;
          }
        }
      }
    }
    c_lo = (arg - 2.0 * step).cwiseMax(lo);
    c_hi = (arg + 2.0 * step).cwiseMin(hi);
  }
  return best;
}

}  // namespace

CheckResult check_moment_arms(const ModelAssembly& a, const VecX& q, const StrapFault* fault) {
  CheckResult r{"moment-arm virtual work", false, 0.0, 1e-4, ""};
  const MomentArmSet m = moment_arms(a, q, fault);
  const auto& L = a.layout;
  const double h = 1e-6;
  const int ne = static_cast<int>(L.exo.size());

  MatX fd_A(ne, kActuatorCount), fd_SE(ne, 3 * kStrapCount), fd_SH(8, 3 * kStrapCount);
  const TreeKinematics k0 = compute_kinematics(a.tree, q);
  auto strap_points = [&](const VecX& qq, std::vector<Vec3>& pe, std::vector<Vec3>& pb) {
    const TreeKinematics k = compute_kinematics(a.tree, qq);
    pe.clear();
    pb.clear();
    for (const auto& s : a.straps) {
      pe.push_back(k.bodies[static_cast<std::size_t>(a.tree.index_of(s.exo_point.segment))].point(s.exo_point.local));
      pb.push_back(k.bodies[static_cast<std::size_t>(a.tree.index_of(s.body_point.segment))].point(s.body_point.local));
    }
  };
  auto column = [&](int dof, VecX& dlen, std::vector<Vec3>& dpe, std::vector<Vec3>& dpb) {
    VecX qp = q, qm = q;
    qp[dof] += h;
    qm[dof] -= h;
    dlen = (actuator_lengths(a, qp) - actuator_lengths(a, qm)) / (2.0 * h);
    std::vector<Vec3> pe_p, pb_p, pe_m, pb_m;
    strap_points(qp, pe_p, pb_p);
    strap_points(qm, pe_m, pb_m);
    dpe.resize(kStrapCount);
    dpb.resize(kStrapCount);
    for (int i = 0; i < kStrapCount; ++i) {
      dpe[static_cast<std::size_t>(i)] = (pe_p[static_cast<std::size_t>(i)] - pe_m[static_cast<std::size_t>(i)]) / (2.0 * h);
      dpb[static_cast<std::size_t>(i)] = (pb_p[static_cast<std::size_t>(i)] - pb_m[static_cast<std::size_t>(i)]) / (2.0 * h);
    }
  };
  auto strap_frame = [&](int i) {
    const auto& s = a.straps[static_cast<std::size_t>(i)];
    return k0.bodies[static_cast<std::size_t>(a.tree.index_of(s.body_point.segment))].rotation;
  };

  VecX dlen;
  std::vector<Vec3> dpe, dpb;
  for (int r_ = 0; r_ < ne; ++r_) {
    column(L.exo[static_cast<std::size_t>(r_)], dlen, dpe, dpb);
    fd_A.row(r_) = -dlen.transpose();
    for (int i = 0; i < kStrapCount; ++i) {
      fd_SE.block<1, 3>(r_, 3 * i) = dpe[static_cast<std::size_t>(i)].transpose() * strap_frame(i);
    }
  }
  for (int r_ = 0; r_ < 8; ++r_) {
    column(L.lower_limb[static_cast<std::size_t>(r_)], dlen, dpe, dpb);
    for (int i = 0; i < kStrapCount; ++i) {
      fd_SH.block<1, 3>(r_, 3 * i) = -dpb[static_cast<std::size_t>(i)].transpose() * strap_frame(i);
    }
  }

  const double eA = rel_max(m.M_A - fd_A, fd_A);
  const double eSH = rel_max(m.M_SH - fd_SH, fd_SH);
  double eSE = 0.0;
  std::string worst;
  for (int i = 0; i < kStrapCount; ++i) {
    const double e = rel_max(m.M_SE.middleCols(3 * i, 3) - fd_SE.middleCols(3 * i, 3), fd_SE);
    if (e > eSE) {
      eSE = e;
      worst = a.straps[static_cast<std::size_t>(i)].name;
    }
  }
  r.measured = std::max({eA, eSE, eSH});
  r.pass = r.measured <= r.threshold;
  char buf[160];
  std::snprintf(buf, sizeof buf, "M_A %.2e, M_SE %.2e, M_SH %.2e", eA, eSE, eSH);
  r.detail = buf;
  if (!r.pass && eSE > r.threshold) r.detail += "; strap " + worst;
  return r;
}

CheckResult check_strap_action_reaction(const ModelAssembly& a, const VecX& q, const StrapFault* fault) {
  CheckResult r{"strap action-reaction", true, 0.0, 1e-9, "all straps balanced"};
  const SpringForces sf = strap_forces(a, q, VecX::Zero(q.size()));
  const StrapLoads loads = strap_loads(a, q, sf.F_S, fault);
  for (int i = 0; i < kStrapCount; ++i) {
    const Vec3 fh = loads.human[static_cast<std::size_t>(i)].force;
    const Vec3 fe = loads.exo[static_cast<std::size_t>(i)].force;
    const double e = (fh + fe).norm() / std::max(1e-12, fh.norm());
    if (e > r.measured) r.measured = e;
    if (e > r.threshold && r.pass) {
      r.pass = false;
      r.detail = "strap " + a.straps[static_cast<std::size_t>(i)].name + " loads do not cancel";
    }
  }
  return r;
}

CheckResult check_id_fd_round_trip(const ModelAssembly& a, const VecX& q, const VecX& qd, unsigned long seed) {
  CheckResult r{"exo ID/FD round trip", false, 0.0, 1e-6, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    VecX qdd(q.size());
    for (Eigen::Index i = 0; i < qdd.size(); ++i) qdd[i] = u(rng);
    const VecX F_S = strap_forces(a, q, qd).F_S;
    const VecX tau = inverse_dynamics_exo(a, q, qd, qdd, F_S);
    const VecX back = forward_dynamics_exo_torque(a, q, qd, qdd, tau, F_S);
    VecX want(back.size());
    for (Eigen::Index i = 0; i < want.size(); ++i) want[i] = qdd[a.layout.exo[static_cast<std::size_t>(i)]];
    worst = std::max(worst, (back - want).norm() / std::max(1e-12, want.norm()));
  }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  r.detail = "20 random accelerations";
  return r;
}

CheckResult check_bounded_lsq(unsigned long seed, int problems) {
  CheckResult r{"bounded least squares vs grid", false, 0.0, 1e-5, ""};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.1, 2.0);
  double worst = 0.0;
  for (int p = 0; p < problems; ++p) {
    MatX A(5, 3);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = nd(rng);
    VecX b(5);
    for (Eigen::Index i = 0; i < 5; ++i) b[i] = 2.0 * nd(rng);
    VecX lo(3), hi(3);
    for (int i = 0; i < 3; ++i) {
      lo[i] = -ud(rng);
      hi[i] = ud(rng);
    }
    const VecX x = bounded_least_squares(A, b, lo, hi).x;
    worst = std::max(worst, std::abs(lsq_objective(A, b, x) - grid_minimum(A, b, lo, hi)));
  }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  r.detail = std::to_string(problems) + " random 3-dim box problems";
  return r;
}

CheckResult check_min_norm(unsigned long seed, int problems) {
  CheckResult r{"minimum-norm solve", false, 0.0, 1e-9, ""};
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int p = 0; p < problems; ++p) {
    MatX M(8, 12);
    for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = 0.1 * nd(rng);
    VecX tau(8);
    for (Eigen::Index i = 0; i < 8; ++i) tau[i] = 100.0 * nd(rng);
    const VecX x = min_norm_solve(M, tau).x;
    worst = std::max(worst, (M * x - tau).norm() / tau.norm());
  }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  r.detail = std::to_string(problems) + " full-row-rank 8x12 instances";
  return r;
}

CheckResult check_muscle_kkt(const ModelAssembly& a, unsigned long seed, int problems) {
  CheckResult r{"muscle QP KKT", false, 0.0, 1e-8, ""};
  std::mt19937_64 rng(seed + 2);
  std::uniform_real_distribution<double> angle(-0.5, 1.0);
  std::uniform_real_distribution<double> torque(-200.0, 200.0);
  const double w = 100.0;
  const auto n = static_cast<Eigen::Index>(a.muscles.size());
  VecX fmax(n);
  for (Eigen::Index i = 0; i < n; ++i) fmax[i] = a.muscles[static_cast<std::size_t>(i)].f_max;
  double worst = 0.0;
  for (int p = 0; p < problems; ++p) {
    VecX q8(8), tau(8);
    for (int i = 0; i < 8; ++i) {
      q8[i] = angle(rng);
      tau[i] = torque(rng);
    }
    const MuscleSolution s = solve_muscle_forces(tau, a.muscles, q8, 2.0, w);
    const MatX RD = moment_arm_matrix(a.muscles, q8) * fmax.asDiagonal();
    const VecX& act = s.activations;
    const VecX grad = 2.0 * act - 2.0 * w * RD.transpose() * (tau - RD * act);
    const VecX proj = (act - grad).cwiseMax(0.0).cwiseMin(1.0);
    const double scale = 1.0 + (2.0 * w * RD.transpose() * tau).lpNorm<Eigen::Infinity>();
    worst = std::max(worst, (act - proj).lpNorm<Eigen::Infinity>() / scale);
  }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  r.detail = std::to_string(problems) + " random demands";
  return r;
}

double impulse_balance_error(const ModelAssembly& a, const RunResult& res, bool exo_on) {
  const double weight = (exo_on ? a.total_mass() : a.subject_mass) * kGravity;
  Vec3 impulse = Vec3::Zero();
  for (const auto& f : res.frames) impulse += f.grf.force * res.dt_effective;
  const double T = res.dt_effective * static_cast<double>(res.frames.size());
  impulse.y() -= weight * T;
  return impulse.norm() / (weight * T);
}

CheckResult check_impulse_balance(const ModelAssembly& a, const GaitTrajectory& gait) {
  CheckResult r{"periodic impulse balance", false, 0.0, 0.02, ""};
  SimulationOptions o;
  o.cycles = 2;
  double worst = 0.0;
  std::string detail;
  for (ControllerKind k : {ControllerKind::none, ControllerKind::passive}) {
    o.controller = k;
    const RunResult res = run_cycle(a, gait, o);
    const double e = impulse_balance_error(a, res, k != ControllerKind::none);
    worst = std::max(worst, e);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%s %.2e", detail.empty() ? "" : ", ", controller_name(k), e);
    detail += buf;
  }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  r.detail = detail + " (fraction of weight x cycle time)";
  return r;
}

std::pair<double, double> energy_drift_pair(const ModelAssembly& assembly, double dt, double horizon) {
  ModelAssembly a = assembly;
  for (auto& s : a.straps) s.damping = Vec3::Zero();
  const GaitTrajectory still = synthesize_running_gait(GaitParams::standing());
  SimulationOptions o;
  o.controller = ControllerKind::passive;

  auto drift = [&](double h) {
    const Simulator sim(a, still, o);
    SimulationState st = sim.initial_state();
    const double kick[] = {0.02, -0.03, 0.04, -0.02, 0.03, -0.04};
    for (Eigen::Index i = 0; i < st.q_e.size(); ++i) st.q_e[i] += kick[i % 6];
    VecX q, qd, qdd;
    auto energy = [&](const SimulationState& s) {
      sim.assemble(still.sample(s.t), s, q, qd, qdd);
      return exo_mechanical_energy(a, q, qd);
    };
    const double e0 = energy(st);
    double worst = 0.0;
    const long steps = std::lround(horizon / h);
    for (long k = 0; k < steps; ++k) {
      st = sim.step(st, h).second;
      worst = std::max(worst, std::abs(energy(st) - e0));
    }
    return worst;
  };
  return {drift(dt), drift(dt / 2.0)};
}

CheckResult check_energy_drift(const ModelAssembly& a) {
  CheckResult r{"energy drift halving", false, 0.0, 0.15, ""};
  const auto [d1, d2] = energy_drift_pair(a, 1e-3, 0.25);
  const double ratio = d2 / d1;
  r.measured = std::abs(ratio - 0.5);
  r.pass = r.measured <= r.threshold;
  char buf[128];
  std::snprintf(buf, sizeof buf, "drift %.3e J at 1e-3 s, %.3e J at 5e-4 s, ratio %.3f (target 0.5)", d1, d2, ratio);
  r.detail = buf;
  return r;
}

std::vector<CheckResult> run_validation(const ValidationOptions& opt) {
  const ModelAssembly a = build_default_assembly();
  const StrapFault* fault = nullptr;
  if (!opt.fault.flip_exo_side.empty()) {
    const bool known = std::any_of(a.straps.begin(), a.straps.end(),
                                   [&](const StrapElement& s) { return s.name == opt.fault.flip_exo_side; });
    if (!known) throw ConfigError("fault: no strap named '" + opt.fault.flip_exo_side + "'");
    fault = &opt.fault;
  }
  const GaitTrajectory gait = synthesize_running_gait(GaitParams{});
  const VecX q = probe_configuration(a, gait);
  VecX qd = VecX::Zero(q.size());
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Eigen::Index i = 0; i < qd.size(); ++i) qd[i] = u(rng);

  std::vector<CheckResult> out;
  out.push_back(check_moment_arms(a, q, fault));
  out.push_back(check_strap_action_reaction(a, q, fault));
  out.push_back(check_id_fd_round_trip(a, q, qd, opt.seed));
  out.push_back(check_bounded_lsq(opt.seed));
  out.push_back(check_min_norm(opt.seed));
  out.push_back(check_muscle_kkt(a, opt.seed));
  if (opt.include_dynamic) {
    out.push_back(check_impulse_balance(a, gait));
    out.push_back(check_energy_drift(a));
  }
  return out;
}

std::string format_check(const CheckResult& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-4s %-32s measured %.3e  threshold %.1e", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.measured, r.threshold);
  std::string s = buf;
  if (!r.detail.empty()) s += "  (" + r.detail + ")";
  return s;
}

}  // namespace exosim
