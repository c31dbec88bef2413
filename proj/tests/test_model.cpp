#include <doctest.h>

#include "exosim/model.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace exosim;

namespace {

std::string temp_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / ("exosim_test_" + name);
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_CASE("default assembly: subject 65.9 kg, exoskeleton 23 kg") {
  const ModelAssembly a = build_default_assembly();
  CHECK(a.subject_mass == doctest::Approx(65.9));
  CHECK(a.exo_mass() == doctest::Approx(23.0));
  double human = 0.0;
  for (const auto& s : a.human_segments) human += s.mass;
  CHECK(human == doctest::Approx(65.9).epsilon(1e-12));
}

TEST_CASE("layout: 16 human DOFs then 6 exoskeleton DOFs") {
  const ModelAssembly a = build_default_assembly();
  CHECK(a.layout.total == 22);
  CHECK(a.layout.human.size() == 16);
  CHECK(a.layout.exo.size() == 6);
  CHECK(a.layout.names[static_cast<std::size_t>(a.layout.lower_limb[3])] == "knee_L");
  CHECK(a.layout.names[static_cast<std::size_t>(a.layout.lower_limb[4])] == "hip_flexion_R");
  CHECK(a.layout.names[static_cast<std::size_t>(a.layout.exo[1])] == "exo_hip_L");
  CHECK(a.straps.size() == 4);
  CHECK(a.straps[1].name == "femur-R");
  CHECK(a.straps[2].name == "tibia-L");
  CHECK(a.muscles.size() == 12);
  CHECK(validate_assembly(a).empty());
}

TEST_CASE("left and right legs are mirror images") {
  const ModelAssembly a = build_default_assembly();
  VecX qh = VecX::Zero(16);
  qh[1] = 0.93;
  const VecX q = aligned_configuration(a, qh);
  const auto kin = compute_kinematics(a.tree, q);
  for (const char* seg : {"tibia", "exo-femur", "foot"}) {
    const Vec3 l = kin.bodies[static_cast<std::size_t>(a.tree.index_of(std::string(seg) + "-L"))].origin;
    const Vec3 r = kin.bodies[static_cast<std::size_t>(a.tree.index_of(std::string(seg) + "-R"))].origin;
    CHECK(l.x() == doctest::Approx(r.x()));
    CHECK(l.y() == doctest::Approx(r.y()));
    CHECK(l.z() == doctest::Approx(-r.z()));
    CHECK(l.z() < 0.0);
  }
}

TEST_CASE("bundled model file reproduces the built-in defaults") {
  const ModelAssembly file = build_default_assembly(load_model_config(EXOSIM_DATA_DIR "/model_default.ini"));
  const ModelAssembly builtin = build_default_assembly();
  REQUIRE(file.tree.body_count() == builtin.tree.body_count());
  for (int i = 0; i < file.tree.body_count(); ++i) {
    const auto& x = file.tree.body(i);
    const auto& y = builtin.tree.body(i);
    CHECK(x.name == y.name);
    CHECK(x.mass == doctest::Approx(y.mass));
    CHECK((x.com - y.com).norm() < 1e-12);
    CHECK((x.inertia - y.inertia).norm() < 1e-12);
    CHECK((x.anchor - y.anchor).norm() < 1e-12);
  }
  for (std::size_t i = 0; i < file.muscles.size(); ++i) {
    CHECK(file.muscles[i].name == builtin.muscles[i].name);
    CHECK(file.muscles[i].f_max == builtin.muscles[i].f_max);
    CHECK(file.muscles[i].moment_arms == builtin.muscles[i].moment_arms);
  }
  for (std::size_t i = 0; i < file.straps.size(); ++i) {
    CHECK((file.straps[i].body_point.local - builtin.straps[i].body_point.local).norm() < 1e-12);
    CHECK((file.straps[i].stiffness - builtin.straps[i].stiffness).norm() < 1e-9);
  }
}

TEST_CASE("invalid parameters name the offending field") {
  ModelConfig c;
  c.exo_femur.mass = -1.0;
  try {
    build_default_assembly(c);
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("exo-femur") != std::string::npos);
  }
  ModelConfig d;
  d.tibia.gyration = Vec3(0.5, 0.01, 0.01);  // inertia fails the triangle inequality
  CHECK_THROWS_AS(build_default_assembly(d), ModelError);
}

TEST_CASE("model file errors carry the key path") {
  const auto typo = temp_file("typo.ini", "[straps]\nstifness = 1 2 3\n");
  try {
    load_model_config(typo);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("straps.stifness") != std::string::npos);
  }
  CHECK_THROWS_AS(load_model_config(temp_file("sect.ini", "[nonsense]\na = 1\n")), ConfigError);
  CHECK_THROWS_AS(load_model_config(temp_file("num.ini", "[human]\nsubject_mass = heavy\n")), ConfigError);

  const ModelConfig c = load_model_config(temp_file("partial.ini", "[human]\nsubject_mass = 80\n"));
  CHECK(c.subject_mass == 80.0);
  CHECK(c.exo_femur.mass == 3.0);  // untouched keys keep defaults
}
