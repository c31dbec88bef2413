#include "exosim/multibody.hpp"

#include <algorithm>

namespace exosim {

int MultibodyTree::add_body(TreeBody body) {
  const int index = body_count();
  if (body.parent >= index) {
    throw ModelError(body.name + ": parent must be added before child");
  }
  body.first_dof = dof_count_;
  std::vector<int> support;
  if (body.parent >= 0) support = support_[static_cast<std::size_t>(body.parent)];
  for (std::size_t k = 0; k < body.primitives.size(); ++k) {
    support.push_back(dof_count_);
    dof_body_.push_back(index);
    ++dof_count_;
  }
  support_.push_back(std::move(support));
  bodies_.push_back(std::move(body));
  return index;
}

std::optional<int> MultibodyTree::find(const std::string& name) const {
  for (int i = 0; i < body_count(); ++i) {
    if (bodies_[static_cast<std::size_t>(i)].name == name) return i;
  }
  return std::nullopt;
}

int MultibodyTree::index_of(const std::string& name) const {
  if (auto i = find(name)) return *i;
  throw LookupError("unknown segment '" + name + "'");
}

bool MultibodyTree::is_ancestor_or_self(int ancestor, int body) const {
  while (body >= 0) {
    if (body == ancestor) return true;
    body = bodies_[static_cast<std::size_t>(body)].parent;
  }
  return false;
}

TreeKinematics compute_kinematics(const MultibodyTree& tree, const VecX& q, const VecX& qd,
                                  const VecX& qdd) {
  const int n = tree.dof_count();
  require_size(q.size(), n, "q");
  const bool has_qd = qd.size() != 0;
  const bool has_qdd = qdd.size() != 0;
  if (has_qd) require_size(qd.size(), n, "qd");
  if (has_qdd) require_size(qdd.size(), n, "qdd");

  TreeKinematics kin;
  kin.bodies.resize(static_cast<std::size_t>(tree.body_count()));
  kin.dofs.resize(static_cast<std::size_t>(n));

  for (int i = 0; i < tree.body_count(); ++i) {
    const TreeBody& b = tree.body(i);
    BodyState s;
    if (b.parent >= 0) s = kin.bodies[static_cast<std::size_t>(b.parent)];

    // Fixed offset to the joint origin.
    const Vec3 r = s.rotation * b.anchor;
    s.acceleration += s.angular_acceleration.cross(r) +
                      s.angular_velocity.cross(s.angular_velocity.cross(r));
    s.velocity += s.angular_velocity.cross(r);
    s.origin += r;

    for (std::size_t k = 0; k < b.primitives.size(); ++k) {
      const int dof = b.first_dof + static_cast<int>(k);
      const double x = q[dof];
      const double xd = has_qd ? qd[dof] : 0.0;
      const double xdd = has_qdd ? qdd[dof] : 0.0;
      const Primitive& p = b.primitives[k];
      const Vec3 u = s.rotation * p.axis;
      DofAxis& axis = kin.dofs[static_cast<std::size_t>(dof)];
      axis.prismatic = p.prismatic;
      axis.axis = u;
      axis.point = s.origin;
      if (p.prismatic) {
        const Vec3 d = u * x;
        s.acceleration += s.angular_acceleration.cross(d) +
                          s.angular_velocity.cross(s.angular_velocity.cross(d)) +
                          2.0 * s.angular_velocity.cross(u * xd) + u * xdd;
        s.velocity += s.angular_velocity.cross(d) + u * xd;
        s.origin += d;
      } else {
        s.angular_acceleration += u * xdd + s.angular_velocity.cross(u * xd);
        s.angular_velocity += u * xd;
        s.rotation = s.rotation * Eigen::AngleAxisd(x, p.axis).toRotationMatrix();
      }
    }
    kin.bodies[static_cast<std::size_t>(i)] = s;
  }
  return kin;
}

MatX point_jacobian(const MultibodyTree& tree, const TreeKinematics& kin, int body,
                    const Vec3& local_point) {
  if (body < 0 || body >= tree.body_count()) throw LookupError("segment index out of range");
  MatX J = MatX::Zero(3, tree.dof_count());
  const Vec3 p = kin.bodies[static_cast<std::size_t>(body)].point(local_point);
  for (int dof : tree.support(body)) {
    const DofAxis& a = kin.dofs[static_cast<std::size_t>(dof)];
    J.col(dof) = a.prismatic ? a.axis : Vec3(a.axis.cross(p - a.point));
  }
  return J;
}

Mat3 world_inertia(const TreeBody& body, const BodyState& state) {
  return state.rotation * body.inertia * state.rotation.transpose();
}

NewtonEulerResult inverse_dynamics(const MultibodyTree& tree, const TreeKinematics& kin,
                                   std::span<const ExternalLoad> loads, const Vec3& gravity,
                                   const std::vector<bool>& active) {
  const int nb = tree.body_count();
  auto is_active = [&](int i) {
    return active.empty() || active[static_cast<std::size_t>(i)];
  };

  NewtonEulerResult out;
  out.tau = VecX::Zero(tree.dof_count());
  out.joint_force.assign(static_cast<std::size_t>(nb), Vec3::Zero());
  out.joint_moment.assign(static_cast<std::size_t>(nb), Vec3::Zero());

  for (int i = nb - 1; i >= 0; --i) {
    if (!is_active(i)) continue;
    const TreeBody& b = tree.body(i);
    const BodyState& s = kin.bodies[static_cast<std::size_t>(i)];
    const Vec3 o = s.origin;
    const Vec3 com = s.point(b.com);
    const Vec3 inertial = b.mass * (s.point_acceleration(b.com) - gravity);
    const Mat3 Iw = world_inertia(b, s);

    Vec3& F = out.joint_force[static_cast<std::size_t>(i)];
    Vec3& N = out.joint_moment[static_cast<std::size_t>(i)];
    F += inertial;
    N += Iw * s.angular_acceleration + s.angular_velocity.cross(Iw * s.angular_velocity) +
         (com - o).cross(inertial);
    for (const ExternalLoad& load : loads) {
      if (load.body != i) continue;
      F -= load.force;
      N -= (load.point - o).cross(load.force) + load.moment;
    }

    for (std::size_t k = 0; k < b.primitives.size(); ++k) {
      const int dof = b.first_dof + static_cast<int>(k);
      const DofAxis& a = kin.dofs[static_cast<std::size_t>(dof)];
      out.tau[dof] = a.prismatic ? a.axis.dot(F) : a.axis.dot(N + (o - a.point).cross(F));
    }

    if (b.parent >= 0 && is_active(b.parent)) {
      const Vec3 op = kin.bodies[static_cast<std::size_t>(b.parent)].origin;
      out.joint_force[static_cast<std::size_t>(b.parent)] += F;
      out.joint_moment[static_cast<std::size_t>(b.parent)] += N + (o - op).cross(F);
    }
  }
  return out;
}

MatX mass_matrix_block(const MultibodyTree& tree, const VecX& q, std::span<const int> dofs,
                       const std::vector<bool>& active) {
  const auto m = static_cast<Eigen::Index>(dofs.size());
  MatX M(m, m);
  const VecX zero = VecX::Zero(tree.dof_count());
  for (Eigen::Index c = 0; c < m; ++c) {
    VecX unit = zero;
    unit[dofs[static_cast<std::size_t>(c)]] = 1.0;
    const TreeKinematics kin = compute_kinematics(tree, q, zero, unit);
    const VecX tau = inverse_dynamics(tree, kin, {}, Vec3::Zero(), active).tau;
    for (Eigen::Index r = 0; r < m; ++r) M(r, c) = tau[dofs[static_cast<std::size_t>(r)]];
  }
  return M;
}

}  // namespace exosim
