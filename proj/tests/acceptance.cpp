// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Oracles (grid search, pseudo-inverse, KKT projection, finite differences,
// energy bookkeeping) are computed here, independently of the library paths
// they check.

#include "exosim/report.hpp"
#include "exosim/scenario.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace exosim;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& what, bool pass, const std::string& measured) {
  std::printf("[%s] %2d %-30s %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), measured.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Cases {
  std::map<ControllerKind, RunResult> runs;
  std::map<ControllerKind, double> seconds;
};

// ---------------------------------------------------------------- 1

void static_mass(const ModelAssembly& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const GaitTrajectory still = synthesize_running_gait(GaitParams::standing());
  auto grf = [&](ControllerKind k) {
    SimulationOptions o;
    o.controller = k;
    const Simulator sim(a, still, o);
    return sim.step(sim.initial_state(), 1e-3).first.grf.force.y();
  };
  const double none = grf(ControllerKind::none), worn = grf(ControllerKind::passive);
  const double ratio = worn / none;
  const double el = seconds_since(t0);
  const bool pass = std::abs(none - 646.5) <= 0.05 && std::abs(worn - 872.1) <= 0.05 &&
                    std::abs(ratio - 1.349) <= 0.001 && el < 1.0;
  report(1, "static mass check", pass,
         fmt("no-exo %.3f N (646.5), exo %.3f N (872.1), ratio %.4f (1.349 +- 0.001), %.3f s", none, worn, ratio, el));
}

// ---------------------------------------------------------------- 2-6

void grf_direction(const Cases& c, double cycle) {
  const double none = c.runs.at(ControllerKind::none).summary.peak_grf.y();
  const double pass = c.runs.at(ControllerKind::passive).summary.peak_grf.y();
  double slowest = 0.0;
  for (const auto& [k, s] : c.seconds) slowest = std::max(slowest, s);
  const double r = pass / none;
  report(2, "passive GRF increase", r >= 1.15 && r <= 1.45 && slowest < 10.0 && cycle <= 1.2,
         fmt("peak vertical %.1f / %.1f N = %.3f (1.15..1.45), slowest case %.2f s, cycle %.2f s", pass, none, r,
             slowest, cycle));
}

void mic_interference(const Cases& c) {
  const double mic = c.runs.at(ControllerKind::mic).summary.strap_rms;
  const double pass = c.runs.at(ControllerKind::passive).summary.strap_rms;
  const double red = 1.0 - mic / pass;
  report(3, "MIC interference reduction", red >= 0.20,
         fmt("strap RMS %.2f vs passive %.2f N: -%.1f%% (>= 20%%)", mic, pass, 100.0 * red));
}

void mac_assistance(const Cases& c) {
  const auto& mac = c.runs.at(ControllerKind::mac).summary.peaks;
  const auto& pas = c.runs.at(ControllerKind::passive).summary.peaks;
  const auto& non = c.runs.at(ControllerKind::none).summary.peaks;
  const double ke = 1.0 - mac.knee_extension / pas.knee_extension;
  const double hf = 1.0 - mac.hip_flexion / pas.hip_flexion;
  const double he = 1.0 - mac.hip_extension / pas.hip_extension;
  const bool pass = ke >= 0.30 && mac.knee_extension < non.knee_extension && hf >= 0.30 && he >= 0.30;
  report(4, "MAC assistance direction", pass,
         fmt("vs passive: knee ext -%.0f%%, hip flex -%.0f%%, hip ext -%.0f%% (each >= 30%%); knee ext %.1f < no-exo %.1f N m",
             100 * ke, 100 * hf, 100 * he, mac.knee_extension, non.knee_extension));
}

void passive_burden(const Cases& c) {
  const auto p = torque_categories(c.runs.at(ControllerKind::passive).summary.peaks);
  const auto n = torque_categories(c.runs.at(ControllerKind::none).summary.peaks);
  bool pass = true;
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    pass = pass && p[i].second > n[i].second;
    s += fmt("%s%+.0f%%", i ? "/" : "", 100.0 * (p[i].second - n[i].second) / n[i].second);
  }
  report(5, "passive burden direction", pass, "passive vs no-exo hf/he/ab/rot/ke " + s + " (all > 0)");
}

void knee_ordering(const Cases& c) {
  const double p = c.runs.at(ControllerKind::passive).summary.peak_knee_compression;
  const double m = c.runs.at(ControllerKind::mac).summary.peak_knee_compression;
  const double n = c.runs.at(ControllerKind::none).summary.peak_knee_compression;
  report(6, "knee reaction ordering", p >= m && m >= n,
         fmt("peak compression passive %.0f >= MAC %.0f >= no-exo %.0f N", p, m, n));
}

// ---------------------------------------------------------------- 7

// Refining grid search over a 3-d box.
double grid_search(const MatX& A, const VecX& b, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  auto f = [&](const Eigen::Vector3d& x) { return (A * x - b).squaredNorm(); };
  Eigen::Vector3d l = lo, h = hi, best_x = (lo + hi) / 2;
  double best = f(best_x);
  const int n = 16;
  for (int level = 0; level < 30; ++level) {
    const Eigen::Vector3d step = (h - l) / n;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        for (int k = 0; k <= n; ++k) {
          const Eigen::Vector3d x = l + Eigen::Vector3d(i * step[0], j * step[1], k * step[2]);
          const double v = f(x);
          if (v < best) best = v, best_x = x;
        }
    l = (best_x - 3 * step).cwiseMax(lo);
    h = (best_x + 3 * step).cwiseMin(hi);
  }
  return best;
}

void solver_oracles(const ModelAssembly& a) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> box(0.2, 2.0);

  double gap = 0.0;
  for (int p = 0; p < 200; ++p) {
    MatX A(4, 3);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = nd(rng);
    VecX b(4);
    for (int i = 0; i < 4; ++i) b[i] = 2.5 * nd(rng);
    Eigen::Vector3d lo, hi;
    for (int i = 0; i < 3; ++i) lo[i] = -box(rng), hi[i] = box(rng);
    const VecX x = bounded_least_squares(A, b, lo, hi).x;
    gap = std::max(gap, std::abs((A * x - b).squaredNorm() - grid_search(A, b, lo, hi)));
  }

  double mn = 0.0;
  for (int p = 0; p < 200; ++p) {
    MatX M(8, 12);
    for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = 0.08 * nd(rng);
    VecX tau(8);
    for (int i = 0; i < 8; ++i) tau[i] = 80.0 * nd(rng);
    const VecX F = min_norm_solve(M, tau).x;
    const VecX ref = M.transpose() * (M * M.transpose()).llt().solve(tau);  // minimum-norm by construction
    mn = std::max({mn, (M * F - tau).norm() / tau.norm(), (F - ref).norm() / ref.norm()});
  }

  const double w = 100.0;
  const auto nm = static_cast<Eigen::Index>(a.muscles.size());
  VecX fmax(nm);
  for (Eigen::Index i = 0; i < nm; ++i) fmax[i] = a.muscles[static_cast<std::size_t>(i)].f_max;
  std::uniform_real_distribution<double> ang(-0.6, 1.2), trq(-250.0, 250.0);
  double kkt = 0.0;
  for (int p = 0; p < 200; ++p) {
    VecX q8(8), tau(8);
    for (int i = 0; i < 8; ++i) q8[i] = ang(rng), tau[i] = trq(rng);
    const MuscleSolution s = solve_muscle_forces(tau, a.muscles, q8, 2.0, w);
    // Objective in forces: sum (f/fmax)^2 + w |tau - R f|^2; project the
    // gradient step back onto the box [0, fmax] and measure the move.
    const MatX R = moment_arm_matrix(a.muscles, q8);
    const VecX& f = s.forces;
    const VecX g = 2.0 * f.cwiseQuotient(fmax.cwiseProduct(fmax)) - 2.0 * w * R.transpose() * (tau - R * f);
    const VecX step = g.cwiseProduct(fmax.cwiseProduct(fmax)) / 2.0;  // diagonal scaling to force units
    const VecX proj = (f - step).cwiseMax(0.0).cwiseMin(fmax);
    const double scale = fmax.maxCoeff() * (1.0 + w * (R.transpose() * tau).cwiseProduct(fmax).lpNorm<Eigen::Infinity>());
    kkt = std::max(kkt, (f - proj).lpNorm<Eigen::Infinity>() / scale);
  }
  const double el = seconds_since(t0);
  report(7, "solver oracles", gap <= 1e-5 && mn <= 1e-9 && kkt <= 1e-8 && el < 30.0,
         fmt("BLS-grid gap %.1e (1e-5), min-norm %.1e (1e-9), muscle KKT %.1e (1e-8), %.2f s", gap, mn, kkt, el));
}

// ---------------------------------------------------------------- 8

VecX probe_pose(const ModelAssembly& a, const GaitTrajectory& g) {
  const MotionSample s = g.sample(0.42 * g.cycle_duration());
  VecX q = aligned_configuration(a, s.q);
  for (std::size_t i = 0; i < a.layout.exo.size(); ++i) q[a.layout.exo[i]] += 0.015 * (i % 2 ? -1.0 : 1.0);
  return q;
}

double moment_arm_error(const ModelAssembly& a, const VecX& q) {
  const MomentArmSet m = moment_arms(a, q);
  const double h = 1e-6;
  // Virtual work: a unit actuator force does work -dL, a unit strap component
  // does work along the segment-frame axis at the exo point.
  const auto k0 = compute_kinematics(a.tree, q);
  double worst = 0.0;
  for (std::size_t r = 0; r < a.layout.exo.size(); ++r) {
    VecX qp = q, qm = q;
    qp[a.layout.exo[r]] += h;
    qm[a.layout.exo[r]] -= h;
    const VecX dl = (actuator_lengths(a, qp) - actuator_lengths(a, qm)) / (2 * h);
    const auto kp = compute_kinematics(a.tree, qp), km = compute_kinematics(a.tree, qm);
    for (int j = 0; j < kActuatorCount; ++j) {
      worst = std::max(worst, std::abs(m.M_A(static_cast<Eigen::Index>(r), j) + dl[j]) /
                                  m.M_A.lpNorm<Eigen::Infinity>());
    }
    for (int i = 0; i < kStrapCount; ++i) {
      const auto& s = a.straps[static_cast<std::size_t>(i)];
      const int e = a.tree.index_of(s.exo_point.segment), b = a.tree.index_of(s.body_point.segment);
      const Vec3 v = (kp.bodies[static_cast<std::size_t>(e)].point(s.exo_point.local) -
                      km.bodies[static_cast<std::size_t>(e)].point(s.exo_point.local)) / (2 * h);
      const Vec3 work = k0.bodies[static_cast<std::size_t>(b)].rotation.transpose() * v;
      for (int k = 0; k < 3; ++k) {
        worst = std::max(worst, std::abs(m.M_SE(static_cast<Eigen::Index>(r), 3 * i + k) - work[k]) /
                                    m.M_SE.lpNorm<Eigen::Infinity>());
      }
    }
  }
  return worst;
}

double round_trip_error(const ModelAssembly& a, const VecX& q) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    VecX qd(q.size()), qdd(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) qd[i] = u(rng), qdd[i] = 3.0 * u(rng);
    const VecX F_S = strap_forces(a, q, qd).F_S;
    const VecX tau = inverse_dynamics_exo(a, q, qd, qdd, F_S);
    const VecX back = forward_dynamics_exo_torque(a, q, qd, qdd, tau, F_S);
    VecX want(back.size());
    for (Eigen::Index i = 0; i < want.size(); ++i) want[i] = qdd[a.layout.exo[static_cast<std::size_t>(i)]];
    worst = std::max(worst, (back - want).norm() / want.norm());
  }
  return worst;
}

double impulse_error(const ModelAssembly& a, const Cases& c) {
  double worst = 0.0;
  for (const auto& [k, run] : c.runs) {
    const double weight = (k == ControllerKind::none ? a.subject_mass : a.total_mass()) * kGravity;
    Vec3 J = Vec3::Zero();
    for (const auto& f : run.frames) J += f.grf.force * run.dt_effective;
    const double T = run.dt_effective * static_cast<double>(run.frames.size());
    J.y() -= weight * T;
    worst = std::max(worst, J.norm() / (weight * T));
  }
  return worst;
}

// Kinetic + gravitational + strap energy of the exoskeleton, from first principles.
double exo_energy(const ModelAssembly& a, const VecX& q, const VecX& qd) {
  const auto kin = compute_kinematics(a.tree, q, qd);
  double e = 0.0;
  for (int i = 0; i < a.tree.body_count(); ++i) {
    if (!a.exo_body[static_cast<std::size_t>(i)]) continue;
    const auto& b = a.tree.body(i);
    const auto& s = kin.bodies[static_cast<std::size_t>(i)];
    const Vec3 w = s.rotation.transpose() * s.angular_velocity;
    e += 0.5 * b.mass * s.point_velocity(b.com).squaredNorm() + 0.5 * w.dot(b.inertia * w);
    e += b.mass * kGravity * s.point(b.com).y();
  }
  for (const auto& st : a.straps) {
    const auto& hb = kin.bodies[static_cast<std::size_t>(a.tree.index_of(st.body_point.segment))];
    const auto& eb = kin.bodies[static_cast<std::size_t>(a.tree.index_of(st.exo_point.segment))];
    const Vec3 d = hb.rotation.transpose() * (hb.point(st.body_point.local) - eb.point(st.exo_point.local)) - st.rest_offset;
    e += 0.5 * st.stiffness.dot(d.cwiseProduct(d));
  }
  return e;
}

double energy_drift(const ModelAssembly& undamped, const GaitTrajectory& still, double dt) {
  SimulationOptions o;
  o.controller = ControllerKind::passive;
  const Simulator sim(undamped, still, o);
  SimulationState st = sim.initial_state();
  for (Eigen::Index i = 0; i < st.q_e.size(); ++i) st.q_e[i] += (i % 2 ? -0.03 : 0.03);
  VecX q, qd, qdd;
  sim.assemble(still.sample(0.0), st, q, qd, qdd);
  const double e0 = exo_energy(undamped, q, qd);
  double worst = 0.0;
  for (long k = 0; k < std::lround(0.25 / dt); ++k) {
    st = sim.step(st, dt).second;
    sim.assemble(still.sample(st.t), st, q, qd, qdd);
    worst = std::max(worst, std::abs(exo_energy(undamped, q, qd) - e0));
  }
  return worst;
}

void mechanics_oracles(const ModelAssembly& a, const GaitTrajectory& g, const Cases& c) {
  const VecX q = probe_pose(a, g);
  const double ma = moment_arm_error(a, q);
  const double rt = round_trip_error(a, q);
  const double imp = impulse_error(a, c);
  ModelAssembly undamped = a;
  for (auto& s : undamped.straps) s.damping = Vec3::Zero();
  const GaitTrajectory still = synthesize_running_gait(GaitParams::standing());
  const double d1 = energy_drift(undamped, still, 1e-3), d2 = energy_drift(undamped, still, 5e-4);
  const double ratio = d2 / d1;
  report(8, "mechanics oracles", ma <= 1e-4 && rt <= 1e-6 && imp <= 0.02 && std::abs(ratio - 0.5) <= 0.15,
         fmt("moment arms %.1e (1e-4), ID/FD %.1e (1e-6), impulse %.2f%% (2%%), drift ratio %.3f (0.5 +- 0.15)", ma,
             rt, 100 * imp, ratio));
}

// ---------------------------------------------------------------- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism(const ModelAssembly& a, const GaitTrajectory& g) {
  const std::vector<ControllerKind> cases{ControllerKind::none, ControllerKind::passive, ControllerKind::mic,
                                          ControllerKind::mac};
  ScenarioConfig c;
  c.name = "determinism";
  std::vector<fs::path> dirs;
  for (int rep = 0; rep < 2; ++rep) {
    c.output_dir = (fs::current_path() / ("acceptance_compare_" + std::to_string(rep))).string();
    fs::remove_all(c.output_dir);
    run_comparison(c, cases, a, g);
    dirs.emplace_back(c.output_dir);
  }
  int identical = 0, files = 0;
  std::size_t bytes = 0;
  for (ControllerKind k : cases) {
    const std::string name = case_name(k) + ".csv";
    const std::string x = slurp(dirs[0] / name), y = slurp(dirs[1] / name);
    ++files;
    bytes += x.size();
    if (!x.empty() && x == y) ++identical;
  }
  report(9, "determinism", identical == files,
         fmt("%d/%d compare CSVs byte-identical across runs (%zu bytes)", identical, files, bytes));
}

// ---------------------------------------------------------------- 10

void strap_pressure_check(const ModelAssembly& a) {
  VecX F = VecX::Zero(3 * kStrapCount);
  F[0] = 838.0;
  const double p = strap_pressure(F, a.straps)[0];
  report(10, "strap pressure", std::abs(p / 1000.0 - 41.9) <= 0.1,
         fmt("838 N over %.0f cm^2 -> %.2f kPa (41.9 +- 0.1)", a.straps[0].contact_area * 1e4, p / 1000.0));
}

}  // namespace

int main() {
  const ModelAssembly a = build_default_assembly();
  const GaitTrajectory gait = synthesize_running_gait(GaitParams{});

  static_mass(a);

  Cases cases;
  for (ControllerKind k : {ControllerKind::none, ControllerKind::passive, ControllerKind::mic, ControllerKind::mac}) {
    SimulationOptions o;
    o.controller = k;
    o.dt = 1e-3;
    o.cycles = 2;
    const auto t0 = std::chrono::steady_clock::now();
    cases.runs.emplace(k, run_cycle(a, gait, o));
    cases.seconds[k] = seconds_since(t0) / o.cycles;
  }
  grf_direction(cases, gait.cycle_duration());
  mic_interference(cases);
  mac_assistance(cases);
  passive_burden(cases);
  knee_ordering(cases);
  solver_oracles(a);
  mechanics_oracles(a, gait, cases);
  determinism(a, gait);
  strap_pressure_check(a);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
