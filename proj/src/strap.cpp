#include "exosim/strap.hpp"

#include <cmath>

namespace exosim {

namespace {

constexpr double kMinActuatorLength = 1e-9;

void check_counts(const ModelAssembly& a) {
  if (static_cast<int>(a.straps.size()) != kStrapCount) throw DimensionError("assembly must have 4 straps");
  if (static_cast<int>(a.actuators.size()) != kActuatorCount) throw DimensionError("assembly must have 6 actuators");
}

struct StrapFrames {
  int body = 0;
  int exo = 0;
  Mat3 R = Mat3::Identity();  // human segment frame
  Vec3 pb = Vec3::Zero();
  Vec3 pe = Vec3::Zero();
};

StrapFrames frames(const ModelAssembly& a, const TreeKinematics& kin, const StrapElement& s) {
  StrapFrames f;
  f.body = a.tree.index_of(s.body_point.segment);
  f.exo = a.tree.index_of(s.exo_point.segment);
  const BodyState& b = kin.bodies[static_cast<std::size_t>(f.body)];
  const BodyState& e = kin.bodies[static_cast<std::size_t>(f.exo)];
  f.R = b.rotation;
  f.pb = b.point(s.body_point.local);
  f.pe = e.point(s.exo_point.local);
  return f;
}

double exo_sign(const StrapElement& s, const StrapFault* fault) {
  return (fault && fault->flip_exo_side == s.name) ? -1.0 : 1.0;
}

}  // namespace

SpringForces strap_forces(const ModelAssembly& a, const VecX& q, const VecX& qd) {
  check_counts(a);
  require_size(q.size(), a.tree.dof_count(), "q");
  require_size(qd.size(), a.tree.dof_count(), "qd");
  const TreeKinematics kin = compute_kinematics(a.tree, q, qd);
  SpringForces out;
  for (int i = 0; i < kStrapCount; ++i) {
    const StrapElement& s = a.straps[static_cast<std::size_t>(i)];
    const StrapFrames f = frames(a, kin, s);
    const BodyState& b = kin.bodies[static_cast<std::size_t>(f.body)];
    const BodyState& e = kin.bodies[static_cast<std::size_t>(f.exo)];
    const Vec3 rel = f.pb - f.pe;
    const Vec3 vrel = b.point_velocity(s.body_point.local) - e.point_velocity(s.exo_point.local);

    StrapDiagnostics& d = out.straps[static_cast<std::size_t>(i)];
    d.displacement = f.R.transpose() * rel - s.rest_offset;
    d.velocity = f.R.transpose() * vrel - f.R.transpose() * b.angular_velocity.cross(rel);
    for (int k = 0; k < 3; ++k) {
      double stiff = s.stiffness[k];
      if (s.stiffness_negative && d.displacement[k] < 0.0) stiff = (*s.stiffness_negative)[k];
      d.force[k] = stiff * d.displacement[k] + s.damping[k] * d.velocity[k];
    }
    d.world_force = f.R * d.force;
    d.body_point = f.pb;
    d.exo_point = f.pe;
    out.F_S.segment<3>(3 * i) = d.force;
  }
  return out;
}

StrapLoads strap_loads(const ModelAssembly& a, const VecX& q, const VecX& F_S, const StrapFault* fault) {
  check_counts(a);
  require_size(F_S.size(), 3 * kStrapCount, "F_S");
  const TreeKinematics kin = compute_kinematics(a.tree, q);
  StrapLoads out;
  for (int i = 0; i < kStrapCount; ++i) {
    const StrapElement& s = a.straps[static_cast<std::size_t>(i)];
    const StrapFrames f = frames(a, kin, s);
    const Vec3 w = f.R * F_S.segment<3>(3 * i);
    out.human.push_back({f.body, f.pb, -w, Vec3::Zero()});
    out.exo.push_back({f.exo, f.pe, exo_sign(s, fault) * w, Vec3::Zero()});
  }
  return out;
}

VecX actuator_lengths(const ModelAssembly& a, const VecX& q) {
  check_counts(a);
  const TreeKinematics kin = compute_kinematics(a.tree, q);
  VecX len(kActuatorCount);
  for (int j = 0; j < kActuatorCount; ++j) {
    const ActuatorSpec& act = a.actuators[static_cast<std::size_t>(j)];
    const Vec3 pa = kin.bodies[static_cast<std::size_t>(a.tree.index_of(act.endpoint_a.segment))].point(act.endpoint_a.local);
    const Vec3 pb = kin.bodies[static_cast<std::size_t>(a.tree.index_of(act.endpoint_b.segment))].point(act.endpoint_b.local);
    len[j] = (pb - pa).norm();
  }
  return len;
}

MomentArmSet moment_arms(const ModelAssembly& a, const VecX& q, const StrapFault* fault) {
  check_counts(a);
  require_size(q.size(), a.tree.dof_count(), "q");
  const TreeKinematics kin = compute_kinematics(a.tree, q);
  const auto& L = a.layout;
  const int ne = static_cast<int>(L.exo.size());

  MomentArmSet m;
  m.M_A = MatX::Zero(ne, kActuatorCount);
  m.M_SE = MatX::Zero(ne, 3 * kStrapCount);
  m.M_SH = MatX::Zero(8, 3 * kStrapCount);
  m.evaluated_at = q;

  for (int j = 0; j < kActuatorCount; ++j) {
    const ActuatorSpec& act = a.actuators[static_cast<std::size_t>(j)];
    const int ba = a.tree.index_of(act.endpoint_a.segment);
    const int bb = a.tree.index_of(act.endpoint_b.segment);
    const Vec3 pa = kin.bodies[static_cast<std::size_t>(ba)].point(act.endpoint_a.local);
    const Vec3 pb = kin.bodies[static_cast<std::size_t>(bb)].point(act.endpoint_b.local);
    const double len = (pb - pa).norm();
    if (len < kMinActuatorLength) throw DegenerateError(act.name + ": actuator endpoints coincide");
    const Vec3 u = (pb - pa) / len;
    const MatX dJ = point_jacobian(a.tree, kin, bb, act.endpoint_b.local) -
                    point_jacobian(a.tree, kin, ba, act.endpoint_a.local);
    // Positive force shortens the actuator: column = -(d length / d q).
    for (int r = 0; r < ne; ++r) m.M_A(r, j) = -u.dot(dJ.col(L.exo[static_cast<std::size_t>(r)]));
  }

  for (int i = 0; i < kStrapCount; ++i) {
    const StrapElement& s = a.straps[static_cast<std::size_t>(i)];
    const StrapFrames f = frames(a, kin, s);
    const MatX Je = point_jacobian(a.tree, kin, f.exo, s.exo_point.local);
    const MatX Jb = point_jacobian(a.tree, kin, f.body, s.body_point.local);
    const double sign = exo_sign(s, fault);
    for (int r = 0; r < ne; ++r) {
      m.M_SE.block<1, 3>(r, 3 * i) = sign * Je.col(L.exo[static_cast<std::size_t>(r)]).transpose() * f.R;
    }
    for (int r = 0; r < 8; ++r) {
      m.M_SH.block<1, 3>(r, 3 * i) = -Jb.col(L.lower_limb[static_cast<std::size_t>(r)]).transpose() * f.R;
    }
  }
  return m;
}

std::array<double, kStrapCount> strap_pressure(const VecX& F_S, const std::vector<StrapElement>& straps) {
  require_size(F_S.size(), 3 * kStrapCount, "F_S");
  if (static_cast<int>(straps.size()) != kStrapCount) throw DimensionError("expected 4 straps");
  std::array<double, kStrapCount> p{};
  for (int i = 0; i < kStrapCount; ++i) {
    const double area = straps[static_cast<std::size_t>(i)].contact_area;
    if (!(area > 0.0)) throw DegenerateError(straps[static_cast<std::size_t>(i)].name + ": contact area must be positive");
    p[static_cast<std::size_t>(i)] = std::abs(F_S[3 * i]) / area;
  }
  return p;
}

}  // namespace exosim
