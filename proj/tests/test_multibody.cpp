#include <doctest.h>

#include "exosim/multibody.hpp"

#include <cmath>

using namespace exosim;

namespace {

// Planar two-link arm swinging about z, gravity along -y.
struct Arm {
  double m1 = 2.0, m2 = 1.5, l1 = 0.5, c1 = 0.2, c2 = 0.3, I1 = 0.04, I2 = 0.03;
  MultibodyTree tree;
  Arm() {
    TreeBody a;
    a.name = "link1";
    a.primitives = {Primitive{false, Vec3::UnitZ()}};
    a.mass = m1;
    a.com = Vec3(c1, 0, 0);
    a.inertia = Vec3(0.01, 0.01, I1).asDiagonal();
    tree.add_body(a);
    TreeBody b;
    b.name = "link2";
    b.parent = 0;
    b.anchor = Vec3(l1, 0, 0);
    b.primitives = {Primitive{false, Vec3::UnitZ()}};
    b.mass = m2;
    b.com = Vec3(c2, 0, 0);
    b.inertia = Vec3(0.01, 0.01, I2).asDiagonal();
    tree.add_body(b);
  }
  // Textbook closed form.
  Eigen::Vector2d torque(const Eigen::Vector2d& q, const Eigen::Vector2d& qd, const Eigen::Vector2d& qdd) const {
    const double g = kGravity;
    const double c = std::cos(q[1]), s = std::sin(q[1]);
    const double M11 = I1 + m1 * c1 * c1 + I2 + m2 * (l1 * l1 + c2 * c2 + 2 * l1 * c2 * c);
    const double M12 = I2 + m2 * (c2 * c2 + l1 * c2 * c);
    const double M22 = I2 + m2 * c2 * c2;
    const double h = m2 * l1 * c2 * s;
    const double G1 = m1 * g * c1 * std::cos(q[0]) + m2 * g * (l1 * std::cos(q[0]) + c2 * std::cos(q[0] + q[1]));
    const double G2 = m2 * g * c2 * std::cos(q[0] + q[1]);
    return {M11 * qdd[0] + M12 * qdd[1] - h * (2 * qd[0] * qd[1] + qd[1] * qd[1]) + G1,
            M12 * qdd[0] + M22 * qdd[1] + h * qd[0] * qd[0] + G2};
  }
};

}  // namespace

TEST_CASE("two-link arm inverse dynamics matches the closed form") {
  Arm arm;
  const Eigen::Vector2d q(0.3, -0.7), qd(1.1, -2.0), qdd(3.0, 0.5);
  const TreeKinematics kin = compute_kinematics(arm.tree, q, qd, qdd);
  const VecX tau = inverse_dynamics(arm.tree, kin, {}).tau;
  const Eigen::Vector2d want = arm.torque(q, qd, qdd);
  CHECK(tau[0] == doctest::Approx(want[0]).epsilon(1e-12));
  CHECK(tau[1] == doctest::Approx(want[1]).epsilon(1e-12));
}

TEST_CASE("mass matrix block is the closed-form inertia matrix") {
  Arm arm;
  const Eigen::Vector2d q(0.1, 0.9);
  const std::vector<int> dofs{0, 1};
  const MatX M = mass_matrix_block(arm.tree, q, dofs);
  const double c = std::cos(q[1]);
  CHECK(M(0, 1) == doctest::Approx(arm.I2 + arm.m2 * (arm.c2 * arm.c2 + arm.l1 * arm.c2 * c)));
  CHECK(M(1, 1) == doctest::Approx(arm.I2 + arm.m2 * arm.c2 * arm.c2));
  CHECK((M - M.transpose()).norm() < 1e-14);
}

TEST_CASE("point jacobian agrees with finite differences") {
  Arm arm;
  const VecX q = Eigen::Vector2d(0.4, 0.2);
  const Vec3 p(0.25, 0.05, 0.0);
  const MatX J = point_jacobian(arm.tree, compute_kinematics(arm.tree, q), 1, p);
  const double h = 1e-7;
  for (int i = 0; i < 2; ++i) {
    VecX qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    const Vec3 d = (compute_kinematics(arm.tree, qp).bodies[1].point(p) - compute_kinematics(arm.tree, qm).bodies[1].point(p)) / (2 * h);
    CHECK((J.col(i) - d).norm() < 1e-7);
  }
}

TEST_CASE("external load enters as minus J transpose F") {
  Arm arm;
  const VecX q = Eigen::Vector2d(0.0, 0.0);
  const TreeKinematics kin = compute_kinematics(arm.tree, q, VecX::Zero(2), VecX::Zero(2));
  // Upward 10 N at the tip of a horizontal arm holds part of the gravity load.
  const ExternalLoad tip{1, Vec3(arm.l1 + 0.4, 0, 0), Vec3(0, 10, 0), Vec3::Zero()};
  const VecX with = inverse_dynamics(arm.tree, kin, std::vector<ExternalLoad>{tip}).tau;
  const VecX without = inverse_dynamics(arm.tree, kin, {}).tau;
  CHECK(without[0] - with[0] == doctest::Approx(10.0 * (arm.l1 + 0.4)));
  CHECK(without[1] - with[1] == doctest::Approx(10.0 * 0.4));
}

TEST_CASE("inactive bodies are ignored") {
  Arm arm;
  const VecX q = Eigen::Vector2d(0.3, 0.3);
  const TreeKinematics kin = compute_kinematics(arm.tree, q);
  const VecX tau = inverse_dynamics(arm.tree, kin, {}, kGravityVector, {true, false}).tau;
  CHECK(tau[1] == 0.0);
  CHECK(tau[0] == doctest::Approx(arm.m1 * kGravity * arm.c1 * std::cos(0.3)));
}

TEST_CASE("bodies must be added parent first") {
  MultibodyTree t;
  TreeBody b;
  b.name = "orphan";
  b.parent = 3;
  CHECK_THROWS_AS(t.add_body(b), ModelError);
  CHECK_THROWS_AS(t.index_of("nothing"), LookupError);
}
