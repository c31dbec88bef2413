#include <doctest.h>

#include "exosim/muscle.hpp"

#include <cmath>

using namespace exosim;

namespace {

MuscleActuator knee_extensor(double r, double fmax, Side side = Side::left) {
  MuscleActuator m;
  m.name = "ext";
  m.side = side;
  m.f_max = fmax;
  m.moment_arms[3] = {r, 0.0, 0.0};
  return m;
}

}  // namespace

TEST_CASE("single muscle: closed-form activation") {
  // minimize a^2 + w (tau - r fmax a)^2  =>  a = w r fmax tau / (1 + w (r fmax)^2)
  const double r = 0.045, fmax = 1000.0, w = 100.0;
  const std::vector<MuscleActuator> ms{knee_extensor(r, fmax)};
  for (double tau : {5.0, 20.0, 44.0}) {
    VecX demand = VecX::Zero(8);
    demand[3] = tau;
    const MuscleSolution s = solve_muscle_forces(demand, ms, VecX::Zero(8), 2.0, w);
    const double a = std::min(1.0, w * r * fmax * tau / (1.0 + w * r * fmax * r * fmax));
    CHECK(s.activations[0] == doctest::Approx(a).epsilon(1e-12));
    CHECK(s.forces[0] == doctest::Approx(a * fmax).epsilon(1e-12));
    CHECK(s.residual[3] == doctest::Approx(tau - r * fmax * a).epsilon(1e-9));
  }
}

TEST_CASE("demand beyond capacity saturates and leaves a residual") {
  const std::vector<MuscleActuator> ms{knee_extensor(0.045, 1000.0)};
  VecX demand = VecX::Zero(8);
  demand[3] = 200.0;
  const MuscleSolution s = solve_muscle_forces(demand, ms, VecX::Zero(8));
  CHECK(s.activations[0] == doctest::Approx(1.0));
  CHECK(s.residual[3] == doctest::Approx(155.0));
  demand[3] = -30.0;  // flexion demand on a pure extensor
  const MuscleSolution f = solve_muscle_forces(demand, ms, VecX::Zero(8));
  CHECK(f.activations[0] == 0.0);
  CHECK(f.residual[3] == doctest::Approx(-30.0));
}

TEST_CASE("legs are independent") {
  const std::vector<MuscleActuator> ms{knee_extensor(0.045, 1000.0, Side::left),
                                       knee_extensor(0.045, 1000.0, Side::right)};
  VecX demand = VecX::Zero(8);
  demand[7] = 30.0;  // right knee
  const MuscleSolution s = solve_muscle_forces(demand, ms, VecX::Zero(8));
  CHECK(s.activations[0] == 0.0);
  CHECK(s.activations[1] > 0.5);
}

TEST_CASE("moment arm is minus the length derivative") {
  MuscleActuator m;
  m.side = Side::right;
  m.moment_arms[0] = {0.04, -0.01, 0.003};
  m.moment_arms[3] = {-0.03, 0.02, 0.0};
  const std::vector<MuscleActuator> ms{m};
  VecX q = VecX::Zero(8);
  q[4] = 0.6;
  q[7] = -0.9;
  const MatX R = moment_arm_matrix(ms, q);
  const double h = 1e-6;
  for (int row : {4, 7}) {
    VecX qp = q, qm = q;
    qp[row] += h;
    qm[row] -= h;
    const double dl = (musculotendon_length(m, qp) - musculotendon_length(m, qm)) / (2 * h);
    CHECK(R(row, 0) == doctest::Approx(-dl).epsilon(1e-8));
  }
  CHECK(R(0, 0) == 0.0);  // left rows untouched
}

TEST_CASE("static optimization accepts only p = 2 and positive w") {
  const std::vector<MuscleActuator> ms{knee_extensor(0.045, 1000.0)};
  CHECK_THROWS_AS(solve_muscle_forces(VecX::Zero(8), ms, VecX::Zero(8), 3.0), ValidationError);
  CHECK_THROWS_AS(solve_muscle_forces(VecX::Zero(8), ms, VecX::Zero(8), 2.0, 0.0), ValidationError);
  CHECK_THROWS_AS(solve_muscle_forces(VecX::Zero(7), ms, VecX::Zero(8)), DimensionError);
}

TEST_CASE("knee axial reaction: joint force along the tibia minus muscle pull") {
  ModelAssembly a = build_default_assembly();
  const Mat3 R = Eigen::AngleAxisd(0.3, Vec3::UnitZ()).toRotationMatrix();
  const Vec3 axis = R.col(1);
  VecX f = VecX::Zero(static_cast<Eigen::Index>(a.muscles.size()));
  CHECK(knee_axial_reaction(a, R, -700.0 * axis, f, Side::left) == doctest::Approx(-700.0));
  double pull = 0.0;
  for (std::size_t i = 0; i < a.muscles.size(); ++i) {
    f[static_cast<Eigen::Index>(i)] = 100.0;
    if (a.muscles[i].side == Side::left && a.muscles[i].spans(3)) pull += 100.0 * std::cos(a.muscles[i].knee_line_angle);
  }
  CHECK(pull > 0.0);
  CHECK(knee_axial_reaction(a, R, -700.0 * axis, f, Side::left) == doctest::Approx(-700.0 - pull));
  // Hip-only muscles (glut_max) do not load the knee.
  CHECK(pull < 100.0 * 5);
}
