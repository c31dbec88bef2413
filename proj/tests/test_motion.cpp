#include <doctest.h>

#include "exosim/motion.hpp"
#include "exosim/spline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace exosim;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("exosim_test_" + name)).string();
}

}  // namespace

TEST_CASE("natural spline reproduces a straight line exactly") {
  VecX t = VecX::LinSpaced(9, 0.0, 2.0);
  MatX y(9, 1);
  for (int i = 0; i < 9; ++i) y(i, 0) = 3.0 * t[i] - 1.0;
  const CubicSpline s(t, y, false);
  const auto e = s.evaluate(0.77);
  CHECK(e.value[0] == doctest::Approx(3.0 * 0.77 - 1.0));
  CHECK(e.d1[0] == doctest::Approx(3.0));
  CHECK(std::abs(e.d2[0]) < 1e-12);
}

TEST_CASE("periodic spline of a sine tracks value and derivatives") {
  const int n = 200;
  VecX t = VecX::LinSpaced(n + 1, 0.0, 1.0);
  MatX y(n + 1, 1);
  const double w = 2.0 * M_PI;
  for (int i = 0; i <= n; ++i) y(i, 0) = std::sin(w * t[i]);
  y(n, 0) = y(0, 0);
  const CubicSpline s(t, y, true);
  for (double x : {0.013, 0.5, 0.987}) {
    const auto e = s.evaluate(x);
    CHECK(e.value[0] == doctest::Approx(std::sin(w * x)).epsilon(1e-6));
    CHECK(e.d1[0] == doctest::Approx(w * std::cos(w * x)).epsilon(1e-4));
    CHECK(e.d2[0] == doctest::Approx(-w * w * std::sin(w * x)).epsilon(1e-2));
  }
}

TEST_CASE("synthetic running gait: ballistic pelvis during flight") {
  const GaitParams p;
  const GaitTrajectory g = synthesize_running_gait(p);
  const int ty = g.column("pelvis_ty");
  int flight_samples = 0;
  for (int k = 0; k < 400; ++k) {
    const double t = g.cycle_duration() * (k + 0.5) / 400.0;
    const MotionSample s = g.sample(t);
    if (!s.contact[0] && !s.contact[1]) {
      ++flight_samples;
      CHECK(std::abs(s.qdd[ty] + kGravity) < 1e-6);
    }
  }
  // Two flight phases of (0.5 - stance) each.
  CHECK(flight_samples == doctest::Approx(400 * (1.0 - 2 * p.stance_fraction)).epsilon(0.02));
}

TEST_CASE("synthetic gait: cycle starts at left-foot impact, no double stance") {
  const GaitTrajectory g = synthesize_running_gait(GaitParams{});
  CHECK(g.cycle_duration() == doctest::Approx(0.8));
  CHECK(g.contact_at_phase(0.0)[0]);
  CHECK_FALSE(g.contact_at_phase(0.0)[1]);
  CHECK(g.contact_at_phase(0.55)[1]);
  for (int k = 0; k < 1000; ++k) {
    const auto c = g.contact_at_phase(k / 1000.0);
    CHECK_FALSE((c[0] && c[1]));
  }
  const MotionSample a = g.sample(0.1), b = g.sample(0.1 + g.cycle_duration());
  CHECK((a.q - b.q).norm() < 1e-9);
  CHECK((a.qdd - b.qdd).norm() < 1e-6);
}

TEST_CASE("synthetic gait: mean vertical load carries the body weight") {
  // Over one cycle the pelvis returns to its start, so the mean vertical
  // acceleration is zero.
  const GaitTrajectory g = synthesize_running_gait(GaitParams{});
  const int ty = g.column("pelvis_ty"), tx = g.column("pelvis_tx");
  double sy = 0.0, sx = 0.0;
  const int n = 4000;
  for (int k = 0; k < n; ++k) {
    const MotionSample s = g.sample(g.cycle_duration() * k / n);
    sy += s.qdd[ty];
    sx += s.qdd[tx];
  }
  CHECK(std::abs(sy / n) < 1e-6);
  CHECK(std::abs(sx / n) < 1e-6);
}

TEST_CASE("walking stance fractions are rejected") {
  GaitParams p;
  p.stance_fraction = 0.6;
  CHECK_THROWS_AS(synthesize_running_gait(p), SynthesisError);
  p = GaitParams{};
  p.hip_flexion_amplitude = 200.0;
  CHECK_THROWS_AS(synthesize_running_gait(p), SynthesisError);
}

TEST_CASE("standing pose is motionless") {
  const GaitTrajectory g = synthesize_running_gait(GaitParams::standing());
  for (double t : {0.0, 0.21, 0.5}) {
    const MotionSample s = g.sample(t);
    CHECK(s.qd.norm() < 1e-12);
    CHECK(s.qdd.norm() < 1e-12);
  }
}

TEST_CASE("trajectory file round trip") {
  const GaitTrajectory g = synthesize_running_gait(GaitParams{});
  const std::string path = temp_path("gait.csv");
  write_trajectory(path, g);
  const GaitTrajectory back = load_trajectory(path);
  CHECK(back.names() == g.names());
  CHECK(back.periodic());
  for (int k = 0; k < 100; ++k) {
    const double t = g.cycle_duration() * k / 100.0;
    CHECK((back.sample(t).q - g.sample(t).q).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("trajectory parsing errors name the line") {
  const std::string path = temp_path("broken.csv");
  {
    std::ofstream out(path);
    out << "# cycle_duration=1\n# periodic=0\n# stance_L=0:0.3\n# stance_R=none\n"
        << "time,a,contact_L,contact_R\n0,1,1,0\n0.5,oops,1,0\n";
  }
  try {
    load_trajectory(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
  }
  CHECK_THROWS_AS(load_trajectory(temp_path("absent.csv")), ConfigError);
}

TEST_CASE("trajectory validation") {
  const std::array<std::vector<StanceInterval>, 2> stance{};
  VecX t(3);
  t << 0.0, 0.2, 0.1;
  CHECK_THROWS_AS(GaitTrajectory({"a"}, t, MatX::Zero(3, 1), 1.0, false, stance), ValidationError);
  t << 0.0, 0.5, 1.0;
  MatX q(3, 1);
  q << 0.0, 1.0, 0.5;
  CHECK_THROWS_AS(GaitTrajectory({"a"}, t, q, 1.0, true, stance), ValidationError);  // not closed
  const GaitTrajectory open({"a"}, t, q, 1.0, false, stance);
  CHECK_THROWS_AS(open.sample(1.5), RangeError);
  CHECK_THROWS_AS(open.column("b"), LookupError);
  const std::array<std::vector<StanceInterval>, 2> overlap{std::vector<StanceInterval>{{0.0, 0.4}},
                                                           std::vector<StanceInterval>{{0.3, 0.6}}};
  CHECK_THROWS_AS(GaitTrajectory({"a"}, t, q, 1.0, false, overlap), ValidationError);
}
