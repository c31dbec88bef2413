#include "exosim/dynamics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace exosim {

GrfResult predict_grf(const ModelAssembly& a, const TreeKinematics& kin, const std::array<bool, 2>& contact,
                      double mu, const std::vector<bool>& active) {
  if (contact[0] && contact[1]) {
    throw UnsupportedPhaseError("double stance is not supported (running has single stance or flight only)");
  }
  GrfResult g;
  if (!contact[0] && !contact[1]) return g;
  g.stance_foot = contact[0] ? 0 : 1;

  Vec3 F = Vec3::Zero();
  Vec3 H = Vec3::Zero();  // about the world origin
  for (int i = 0; i < a.tree.body_count(); ++i) {
    if (!active.empty() && !active[static_cast<std::size_t>(i)]) continue;
    const TreeBody& b = a.tree.body(i);
    const BodyState& s = kin.bodies[static_cast<std::size_t>(i)];
    const Vec3 c = s.point(b.com);
    const Vec3 ma = b.mass * (s.point_acceleration(b.com) - kGravityVector);
    const Mat3 Iw = world_inertia(b, s);
    F += ma;
    H += c.cross(ma) + Iw * s.angular_acceleration + s.angular_velocity.cross(Iw * s.angular_velocity);
  }

  const BodyState& foot = kin.bodies[static_cast<std::size_t>(a.foot_body[static_cast<std::size_t>(g.stance_foot)])];
  const Vec3 ankle(foot.origin.x(), 0.0, foot.origin.z());
  Vec3 fwd = foot.rotation.col(0);
  fwd.y() = 0.0;
  fwd = fwd.norm() > 1e-9 ? Vec3(fwd.normalized()) : Vec3::UnitX();
  const Vec3 lat = fwd.cross(Vec3::UnitY());

  if (!(F.y() > 0.0)) {
    // The motion would need the ground to pull: no contact force.
    g.friction_clamp = std::hypot(F.x(), F.z());
    g.cop = ankle;
    g.residual_moment = H;
    return g;
  }

  Vec3 p(H.z() / F.y(), 0.0, -H.x() / F.y());
  const double u = (p - ankle).dot(fwd);
  const double v = (p - ankle).dot(lat);
  const double uc = std::clamp(u, -a.foot_window.heel, a.foot_window.toe);
  const double vc = std::clamp(v, -a.foot_window.half_width, a.foot_window.half_width);
  g.cop_clamped = uc != u || vc != v;
  p = ankle + uc * fwd + vc * lat;

  const double horizontal = std::hypot(F.x(), F.z());
  const double cap = mu * F.y();
  if (horizontal > cap) {
    const double k = cap / horizontal;
    F.x() *= k;
    F.z() *= k;
    g.friction_clamp = horizontal - cap;
  }
  g.force = F;
  g.cop = p;
  g.residual_moment = H - p.cross(F);
  return g;
}

HumanTorques inverse_dynamics_human(const ModelAssembly& a, const TreeKinematics& kin, const GrfResult& grf,
                                    const StrapLoads& straps, bool include_straps,
                                    const std::vector<bool>& active) {
  std::vector<ExternalLoad> loads;
  if (grf.stance_foot >= 0 && grf.cop) {
    // Only the vertical free moment is transmitted by the foot.
    loads.push_back({a.foot_body[static_cast<std::size_t>(grf.stance_foot)], *grf.cop, grf.force,
                     Vec3(0.0, grf.force.y() > 0.0 ? grf.residual_moment.y() : 0.0, 0.0)});
  }
  loads.insert(loads.end(), straps.exo.begin(), straps.exo.end());
  if (include_straps) loads.insert(loads.end(), straps.human.begin(), straps.human.end());

  HumanTorques out;
  out.raw = inverse_dynamics(a.tree, kin, loads, kGravityVector, active);
  const auto& L = a.layout;
  out.tau.resize(static_cast<Eigen::Index>(L.human.size()));
  for (std::size_t i = 0; i < L.human.size(); ++i) out.tau[static_cast<Eigen::Index>(i)] = out.raw.tau[L.human[i]];
  out.tau_M.resize(8);
  for (int i = 0; i < 8; ++i) out.tau_M[i] = out.raw.tau[L.lower_limb[static_cast<std::size_t>(i)]];
  return out;
}

VecX inverse_dynamics_exo(const ModelAssembly& a, const VecX& q, const VecX& qd, const VecX& qdd,
                          const VecX& F_S) {
  const int n = a.tree.dof_count();
  require_size(q.size(), n, "q");
  require_size(qd.size(), n, "qd");
  require_size(qdd.size(), n, "qdd");
  const TreeKinematics kin = compute_kinematics(a.tree, q, qd, qdd);
  const StrapLoads loads = strap_loads(a, q, F_S);
  const VecX tau = inverse_dynamics(a.tree, kin, loads.exo, kGravityVector).tau;
  VecX out(static_cast<Eigen::Index>(a.layout.exo.size()));
  for (std::size_t i = 0; i < a.layout.exo.size(); ++i) out[static_cast<Eigen::Index>(i)] = tau[a.layout.exo[i]];
  return out;
}

VecX forward_dynamics_exo_torque(const ModelAssembly& a, const VecX& q, const VecX& qd, const VecX& qdd,
                                 const VecX& tau_exo, const VecX& F_S) {
  const auto& exo = a.layout.exo;
  require_size(tau_exo.size(), static_cast<Eigen::Index>(exo.size()), "tau_exo");
  VecX qdd0 = qdd;
  for (int d : exo) qdd0[d] = 0.0;
  const VecX bias = inverse_dynamics_exo(a, q, qd, qdd0, F_S);
  const MatX M = mass_matrix_block(a.tree, q, exo);
  Eigen::LLT<MatX> llt(M);
  if (llt.info() != Eigen::Success) throw DegenerateError("exoskeleton mass matrix is not positive definite");
  const VecX x = llt.solve(tau_exo - bias);
  if (!x.allFinite()) throw DegenerateError("exoskeleton forward dynamics produced non-finite accelerations");
  return x;
}

VecX forward_dynamics_exo(const ModelAssembly& a, const VecX& q, const VecX& qd, const VecX& qdd,
                          const VecX& F_A, const VecX& F_S) {
  require_size(F_A.size(), kActuatorCount, "F_A");
  const MomentArmSet arms = moment_arms(a, q);
  return forward_dynamics_exo_torque(a, q, qd, qdd, arms.M_A * F_A, F_S);
}

double exo_mechanical_energy(const ModelAssembly& a, const VecX& q, const VecX& qd) {
  const TreeKinematics kin = compute_kinematics(a.tree, q, qd);
  double e = 0.0;
  for (int i = 0; i < a.tree.body_count(); ++i) {
    if (!a.exo_body[static_cast<std::size_t>(i)]) continue;
    const TreeBody& b = a.tree.body(i);
    const BodyState& s = kin.bodies[static_cast<std::size_t>(i)];
    const Vec3 v = s.point_velocity(b.com);
    e += 0.5 * b.mass * v.squaredNorm() + 0.5 * s.angular_velocity.dot(world_inertia(b, s) * s.angular_velocity);
    e += b.mass * kGravity * s.point(b.com).y();
  }
  const SpringForces sf = strap_forces(a, q, VecX::Zero(q.size()));
  for (int i = 0; i < kStrapCount; ++i) {
    const auto& st = a.straps[static_cast<std::size_t>(i)];
    const Vec3& d = sf.straps[static_cast<std::size_t>(i)].displacement;
    e += 0.5 * (st.stiffness.array() * d.array().square()).sum();
  }
  return e;
}

Simulator::Simulator(const ModelAssembly& assembly, const GaitTrajectory& trajectory, SimulationOptions options)
    : assembly_(&assembly), trajectory_(&trajectory), options_(options) {
  const auto& L = assembly.layout;
  if (trajectory.coordinate_count() != static_cast<int>(L.human.size())) {
    throw ValidationError("trajectory has " + std::to_string(trajectory.coordinate_count()) +
                          " coordinates, the model has " + std::to_string(L.human.size()) + " human DOFs");
  }
  for (int d : L.human) column_of_dof_.push_back(trajectory.column(L.names[static_cast<std::size_t>(d)]));
  if (options_.controller == ControllerKind::none) {
    active_.resize(assembly.exo_body.size());
    for (std::size_t i = 0; i < active_.size(); ++i) active_[i] = !assembly.exo_body[i];
  }
  for (int d : L.exo) {
    const std::string joint = L.names[static_cast<std::size_t>(d)];
    std::pair<double, double> lim{-1e9, 1e9};
    for (const auto& j : assembly.joints) {
      std::string jn = j.name;
      std::replace(jn.begin(), jn.end(), '-', '_');
      if (jn == joint && !j.limits.empty()) lim = j.limits.front();
    }
    exo_limits_.push_back(lim);
  }
  limits_.resize(kActuatorCount);
  for (int i = 0; i < kActuatorCount; ++i) limits_[i] = assembly.actuators[static_cast<std::size_t>(i)].force_limit;
}

void Simulator::assemble(const MotionSample& s, const SimulationState& state, VecX& q, VecX& qd,
                         VecX& qdd) const {
  const auto& L = assembly_->layout;
  q = VecX::Zero(L.total);
  qd = VecX::Zero(L.total);
  qdd = VecX::Zero(L.total);
  for (std::size_t i = 0; i < L.human.size(); ++i) {
    const int c = column_of_dof_[i];
    q[L.human[i]] = s.q[c];
    qd[L.human[i]] = s.qd[c];
    qdd[L.human[i]] = s.qdd[c];
  }
  for (std::size_t i = 0; i < L.exo.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    q[L.exo[i]] = state.q_e[k];
    qd[L.exo[i]] = state.qd_e[k];
    qdd[L.exo[i]] = state.qdd_e_prev[k];
  }
}

SimulationState Simulator::initial_state() const {
  const auto& L = assembly_->layout;
  const MotionSample s = trajectory_->sample(0.0);
  VecX qh(static_cast<Eigen::Index>(L.human.size()));
  for (std::size_t i = 0; i < L.human.size(); ++i) qh[static_cast<Eigen::Index>(i)] = s.q[column_of_dof_[i]];
  const VecX q = aligned_configuration(*assembly_, qh);
  SimulationState st;
  const auto ne = static_cast<Eigen::Index>(L.exo.size());
  st.q_e.resize(ne);
  for (Eigen::Index i = 0; i < ne; ++i) st.q_e[i] = q[L.exo[static_cast<std::size_t>(i)]];
  st.qd_e = VecX::Zero(ne);
  st.qdd_e_prev = VecX::Zero(ne);
  return st;
}

std::pair<SimulationFrame, SimulationState> Simulator::step(const SimulationState& state, double dt) const {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  const ModelAssembly& a = *assembly_;
  const MotionSample s = trajectory_->sample(state.t);
  VecX q, qd, qdd;
  assemble(s, state, q, qd, qdd);

  SimulationFrame fr;
  fr.t = state.t;
  fr.gait_pct = 100.0 * s.phase;
  fr.F_S = VecX::Zero(3 * kStrapCount);
  fr.F_A = VecX::Zero(kActuatorCount);
  fr.desired_F_S = VecX::Zero(3 * kStrapCount);
  fr.bound_active.assign(kActuatorCount, false);

  const bool exo = exo_active();
  StrapLoads loads;
  MomentArmSet arms;
  if (exo) {
    fr.F_S = strap_forces(a, q, qd).F_S;
    loads = strap_loads(a, q, fr.F_S);
    arms = moment_arms(a, q);
  }

  const TreeKinematics kin = compute_kinematics(a.tree, q, qd, qdd);
  fr.grf = predict_grf(a, kin, s.contact, options_.mu, active_);
  const HumanTorques req = inverse_dynamics_human(a, kin, fr.grf, loads, false, active_);
  const HumanTorques hum = inverse_dynamics_human(a, kin, fr.grf, loads, true, active_);
  fr.tau_human = hum.tau;
  fr.tau_req = req.tau_M;

  ControllerOutput ctl = passive_controller();
  if (options_.controller == ControllerKind::mic) {
    ctl = mic_step(arms.M_A, arms.M_SE, fr.F_S, limits_);
  } else if (options_.controller == ControllerKind::mac) {
    // The demand is evaluated with the exoskeleton following the human rigidly;
    // feeding the lagged exo accelerations back through the GRF would close an
    // unstable loop (actuation -> exo acceleration -> GRF -> demand).
    VecX qdd_follow = qdd;
    const auto& L = a.layout;
    for (int leg = 0; leg < 2; ++leg) {
      const auto e = static_cast<std::size_t>(3 * leg);
      const auto h = static_cast<std::size_t>(4 * leg);
      qdd_follow[L.exo[e + 0]] = qdd[L.lower_limb[h + 1]];
      qdd_follow[L.exo[e + 1]] = qdd[L.lower_limb[h + 0]];
      qdd_follow[L.exo[e + 2]] = qdd[L.lower_limb[h + 3]];
    }
    const TreeKinematics kin_follow = compute_kinematics(a.tree, q, qd, qdd_follow);
    const GrfResult grf_follow = predict_grf(a, kin_follow, s.contact, options_.mu, active_);
    const bool with_straps = options_.mac_demand == MacDemand::include_straps;
    const VecX demand = inverse_dynamics_human(a, kin_follow, grf_follow, loads, with_straps, active_).tau_M;
    ctl = mac_step(arms.M_SH, arms.M_SE, arms.M_A, demand, limits_);
  }
  fr.F_A = ctl.F_A;
  fr.phi = ctl.objective;
  if (ctl.desired_F_S) fr.desired_F_S = *ctl.desired_F_S;
  fr.bound_active = ctl.bound_active;
  fr.solver_fallback = !ctl.converged;

  SimulationState next = state;
  next.step = state.step + 1;
  next.t = static_cast<double>(next.step) * dt;
  if (exo) {
    const VecX acc = forward_dynamics_exo_torque(a, q, qd, qdd, arms.M_A * fr.F_A, fr.F_S);
    next.qd_e = state.qd_e + acc * dt;
    next.q_e = state.q_e + next.qd_e * dt;
    next.qdd_e_prev = acc;
    for (Eigen::Index i = 0; i < next.q_e.size(); ++i) {
      const auto& lim = exo_limits_[static_cast<std::size_t>(i)];
      if (next.q_e[i] < lim.first || next.q_e[i] > lim.second) fr.limit_warning = true;
    }
  }

  const VecX q8 = lower_limb_angles(a, q);
  const MuscleSolution ms = solve_muscle_forces(hum.tau_M, a.muscles, q8, options_.muscle_p, options_.muscle_w);
  fr.activations = ms.activations;
  if (!ms.converged) fr.solver_fallback = true;
  for (int leg = 0; leg < 2; ++leg) {
    const int tib = a.tibia_body[static_cast<std::size_t>(leg)];
    fr.knee_reaction[static_cast<std::size_t>(leg)] =
        knee_axial_reaction(a, kin.bodies[static_cast<std::size_t>(tib)].rotation,
                            hum.raw.joint_force[static_cast<std::size_t>(tib)], ms.forces,
                            leg == 0 ? Side::left : Side::right);
  }
  fr.strap_pressure = strap_pressure(fr.F_S, a.straps);
  return {std::move(fr), std::move(next)};
}

CycleSummary summarize(const ModelAssembly& a, const std::vector<SimulationFrame>& frames) {
  CycleSummary s;
  s.peak_activation = VecX::Zero(static_cast<Eigen::Index>(a.muscles.size()));
  if (frames.empty()) return s;
  s.max_muscle_excess = -1.0;
  const auto& L = a.layout;
  auto human_index = [&](int dof) {
    return static_cast<Eigen::Index>(std::find(L.human.begin(), L.human.end(), dof) - L.human.begin());
  };
  const Eigen::Index hf = human_index(L.lower_limb[0]);
  const Eigen::Index ha = human_index(L.lower_limb[1]);
  const Eigen::Index hr = human_index(L.lower_limb[2]);
  const Eigen::Index kn = human_index(L.lower_limb[3]);

  double sq = 0.0;
  std::array<double, kStrapCount> sq_strap{};
  for (const auto& f : frames) {
    s.peaks.hip_flexion = std::max(s.peaks.hip_flexion, f.tau_human[hf]);
    s.peaks.hip_extension = std::max(s.peaks.hip_extension, -f.tau_human[hf]);
    s.peaks.hip_abduction = std::max(s.peaks.hip_abduction, -f.tau_human[ha]);
    s.peaks.hip_rotation = std::max(s.peaks.hip_rotation, std::abs(f.tau_human[hr]));
    s.peaks.knee_extension = std::max(s.peaks.knee_extension, f.tau_human[kn]);
    s.peak_grf.x() = std::max(s.peak_grf.x(), std::abs(f.grf.force.x()));
    s.peak_grf.y() = std::max(s.peak_grf.y(), f.grf.force.y());
    s.peak_grf.z() = std::max(s.peak_grf.z(), std::abs(f.grf.force.z()));
    sq += f.F_S.squaredNorm();
    for (int i = 0; i < kStrapCount; ++i) {
      sq_strap[static_cast<std::size_t>(i)] += f.F_S.segment<3>(3 * i).squaredNorm();
      s.peak_strap_pressure = std::max(s.peak_strap_pressure, f.strap_pressure[static_cast<std::size_t>(i)]);
    }
    s.peak_activation = s.peak_activation.cwiseMax(f.activations);
    s.max_muscle_excess = std::max({s.max_muscle_excess, (f.activations.array() - 1.0).maxCoeff(),
                                    (-f.activations.array()).maxCoeff()});
    s.peak_knee_compression = std::max({s.peak_knee_compression, -f.knee_reaction[0], -f.knee_reaction[1]});
    s.peak_actuator_force = std::max(s.peak_actuator_force, f.F_A.lpNorm<Eigen::Infinity>());
    if (f.limit_warning) ++s.limit_warnings;
    if (f.solver_fallback) ++s.solver_fallbacks;
  }
  const auto n = static_cast<double>(frames.size());
  s.strap_rms = std::sqrt(sq / (n * 3.0 * kStrapCount));
  for (int i = 0; i < kStrapCount; ++i) {
    s.strap_rms_per_strap[static_cast<std::size_t>(i)] = std::sqrt(sq_strap[static_cast<std::size_t>(i)] / (n * 3.0));
  }
  return s;
}

RunResult run_cycle(const ModelAssembly& a, const GaitTrajectory& traj, const SimulationOptions& opt) {
  if (!(opt.dt > 0.0 && opt.dt <= 5e-3)) throw ValidationError("dt must lie in (0, 5e-3]");
  if (opt.cycles < 1) throw ValidationError("cycles must be at least 1");
  const Simulator sim(a, traj, opt);
  RunResult r;
  const double T = traj.cycle_duration();
  r.steps_per_cycle = std::max(1, static_cast<int>(std::lround(T / opt.dt)));
  r.dt_effective = T / r.steps_per_cycle;
  for (const auto& m : a.muscles) r.muscle_names.push_back(m.name);

  const long total = static_cast<long>(r.steps_per_cycle) * opt.cycles;
  const long skip = (opt.discard_first_cycle && opt.cycles >= 2) ? r.steps_per_cycle : 0;
  r.frames.reserve(static_cast<std::size_t>(total - skip));
  SimulationState st = sim.initial_state();
  for (long k = 0; k < total; ++k) {
    std::pair<SimulationFrame, SimulationState> out;
    try {
      out = sim.step(st, r.dt_effective);
    } catch (const Error& e) {
      throw SimulationError(e.what(), k);
    }
    if (k >= skip) r.frames.push_back(std::move(out.first));
    st = std::move(out.second);
  }
  r.summary = summarize(a, r.frames);
  return r;
}

}  // namespace exosim
