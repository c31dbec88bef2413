#include <doctest.h>

#include "exosim/dynamics.hpp"

#include <cmath>

using namespace exosim;

namespace {

const ModelAssembly& assembly() {
  static const ModelAssembly a = build_default_assembly();
  return a;
}

const GaitTrajectory& running() {
  static const GaitTrajectory g = synthesize_running_gait(GaitParams{});
  return g;
}

const GaitTrajectory& standing() {
  static const GaitTrajectory g = synthesize_running_gait(GaitParams::standing());
  return g;
}

SimulationFrame first_frame(ControllerKind k, const GaitTrajectory& g, double t = 0.0) {
  SimulationOptions o;
  o.controller = k;
  const Simulator sim(assembly(), g, o);
  SimulationState st = sim.initial_state();
  st.t = t;
  return sim.step(st, 1e-3).first;
}

}  // namespace

TEST_CASE("standing: GRF carries the subject, plus the exoskeleton when worn") {
  const SimulationFrame none = first_frame(ControllerKind::none, standing());
  const SimulationFrame worn = first_frame(ControllerKind::passive, standing());
  CHECK(none.grf.force.y() == doctest::Approx(65.9 * 9.81).epsilon(1e-9));
  CHECK(worn.grf.force.y() == doctest::Approx((65.9 + 23.0) * 9.81).epsilon(1e-9));
  CHECK(std::abs(none.grf.force.x()) < 1e-9);
  CHECK(none.grf.stance_foot == 0);
  // The whole weight passes through the foot: no residual force at the root.
  // (One-legged stance puts the CoP at the edge of the foot, so a root moment
  // remains.)
  CHECK(none.tau_human.head(3).norm() < 1e-8);
  CHECK(worn.tau_human.head(3).norm() < 1e-8);
  CHECK(worn.F_S.norm() < 1e-9);
}

TEST_CASE("running: no ground force in flight, root residual small in stance") {
  const double T = running().cycle_duration();
  const SimulationFrame flight = first_frame(ControllerKind::none, running(), 0.35 * T);
  CHECK(flight.grf.stance_foot == -1);
  CHECK(flight.grf.force.norm() == 0.0);
  const SimulationFrame stance = first_frame(ControllerKind::none, running(), 0.15 * T);
  CHECK(stance.grf.stance_foot == 0);
  CHECK(stance.grf.force.y() > 65.9 * 9.81);
  CHECK(stance.knee_reaction[0] < 0.0);  // compressive
  if (!stance.grf.cop_clamped) CHECK(stance.tau_human.head(3).norm() < 1e-6);
}

TEST_CASE("double stance is unsupported; friction caps the horizontal force") {
  const ModelAssembly& a = assembly();
  VecX q = aligned_configuration(a, synthesize_running_gait(GaitParams::standing()).sample(0.0).q);
  VecX qdd = VecX::Zero(q.size());
  qdd[0] = 3.0;  // pelvis accelerating forward
  const TreeKinematics kin = compute_kinematics(a.tree, q, VecX::Zero(q.size()), qdd);
  CHECK_THROWS_AS(predict_grf(a, kin, {true, true}), UnsupportedPhaseError);
  const GrfResult free = predict_grf(a, kin, {true, false}, 10.0);
  const GrfResult slip = predict_grf(a, kin, {true, false}, 0.1);
  CHECK(free.friction_clamp == 0.0);
  CHECK(std::hypot(slip.force.x(), slip.force.z()) == doctest::Approx(0.1 * slip.force.y()));
  CHECK(slip.friction_clamp > 0.0);
}

TEST_CASE("exoskeleton inverse and forward dynamics are inverses") {
  const ModelAssembly& a = assembly();
  const MotionSample s = running().sample(0.2);
  VecX q = aligned_configuration(a, s.q);
  VecX qd = VecX::Zero(q.size()), qdd = VecX::Zero(q.size());
  for (int i = 0; i < q.size(); ++i) {
    qd[i] = 0.3 * std::sin(i + 1.0);
    qdd[i] = 4.0 * std::cos(2.0 * i);
  }
  for (int d : a.layout.exo) q[d] += 0.01;
  const VecX F_S = strap_forces(a, q, qd).F_S;
  const VecX tau = inverse_dynamics_exo(a, q, qd, qdd, F_S);
  const VecX back = forward_dynamics_exo_torque(a, q, qd, qdd, tau, F_S);
  for (std::size_t i = 0; i < a.layout.exo.size(); ++i) {
    CHECK(back[static_cast<Eigen::Index>(i)] == doctest::Approx(qdd[a.layout.exo[i]]).epsilon(1e-9));
  }
}

TEST_CASE("time step is snapped to divide the cycle") {
  SimulationOptions o;
  o.controller = ControllerKind::none;
  o.dt = 0.0013;
  o.cycles = 1;
  const RunResult r = run_cycle(assembly(), running(), o);
  CHECK(r.steps_per_cycle == 615);
  CHECK(r.dt_effective == doctest::Approx(0.8 / 615));
  CHECK(r.frames.size() == 615);
  o.dt = 0.006;
  CHECK_THROWS_AS(run_cycle(assembly(), running(), o), ValidationError);
  o.dt = 1e-3;
  o.cycles = 0;
  CHECK_THROWS_AS(run_cycle(assembly(), running(), o), ValidationError);
}

TEST_CASE("first cycle is discarded and the rest recorded") {
  SimulationOptions o;
  o.controller = ControllerKind::passive;
  o.dt = 2e-3;
  o.cycles = 3;
  const RunResult r = run_cycle(assembly(), running(), o);
  CHECK(r.frames.size() == 800);
  CHECK(r.frames.front().t == doctest::Approx(0.8));
  CHECK(r.frames.front().gait_pct == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("runs are deterministic") {
  SimulationOptions o;
  o.controller = ControllerKind::mac;
  o.dt = 2e-3;
  const RunResult a = run_cycle(assembly(), running(), o);
  const RunResult b = run_cycle(assembly(), running(), o);
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    CHECK((a.frames[i].F_A - b.frames[i].F_A).norm() == 0.0);
    CHECK((a.frames[i].tau_human - b.frames[i].tau_human).norm() == 0.0);
  }
}

TEST_CASE("controller bookkeeping per case") {
  const double t = 0.15 * running().cycle_duration();
  const SimulationFrame none = first_frame(ControllerKind::none, running(), t);
  CHECK(none.F_S.isZero());
  CHECK_FALSE(none.phi.has_value());
  const SimulationFrame mic = first_frame(ControllerKind::mic, running(), t);
  CHECK(mic.phi.has_value());
  CHECK(mic.desired_F_S.isZero());
  const SimulationFrame mac = first_frame(ControllerKind::mac, running(), t);
  CHECK(mac.phi.has_value());
  CHECK_FALSE(mac.desired_F_S.isZero());
  CHECK((mac.F_A.array().abs() <= 4000.0 + 1e-9).all());
}

TEST_CASE("simulation errors carry the step index") {
  // The same gait, declared non-periodic: it runs out after one cycle.
  const GaitTrajectory& g = running();
  const GaitTrajectory open(g.names(), g.times(), g.coords(), g.cycle_duration(), false, g.stance());
  SimulationOptions o;
  o.controller = ControllerKind::none;
  o.cycles = 2;
  try {
    run_cycle(assembly(), open, o);
    FAIL("expected SimulationError");
  } catch (const SimulationError& e) {
    CHECK(e.step() == 801);
  }
}

TEST_CASE("muscle activations respect their bounds over a run") {
  SimulationOptions o;
  o.controller = ControllerKind::passive;
  o.dt = 2e-3;
  const RunResult r = run_cycle(assembly(), running(), o);
  CHECK(r.summary.max_muscle_excess <= 1e-12);
  CHECK(r.summary.solver_fallbacks == 0);
}
