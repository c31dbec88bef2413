#include "exosim/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace exosim {

namespace {

constexpr double kAxisTolerance = 1e-9;

Vec3 mirror_point(const Vec3& p, Side side) {
  return side == Side::left ? p : Vec3(p.x(), p.y(), -p.z());
}

// Rotation axes are pseudovectors: a reflection through the sagittal plane
// flips the in-plane components.
Vec3 mirror_axis(const Vec3& a, Side side) {
  return side == Side::left ? a : Vec3(-a.x(), -a.y(), a.z());
}

std::string sided(const std::string& base, Side side) {
  return base + "-" + side_suffix(side);
}

void check_segment_params(const std::string& field, double mass, const Vec3& inertia) {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw ModelError(field + ".mass must be positive (got " + std::to_string(mass) + ")");
  }
  for (int k = 0; k < 3; ++k) {
    if (!(inertia[k] >= 0.0) || !std::isfinite(inertia[k])) {
      throw ModelError(field + ".inertia must be non-negative");
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double others = inertia[(k + 1) % 3] + inertia[(k + 2) % 3];
    if (inertia[k] > others * (1.0 + 1e-12)) {
      throw ModelError(field + ".inertia violates the triangle inequality");
    }
  }
}

BodySegment human_segment(const std::string& name, const HumanSegmentParams& p,
                          double subject_mass, double scale, Side side) {
  BodySegment s;
  s.name = name;
  s.mass = p.mass_fraction * subject_mass;
  const Vec3 k = p.gyration * scale;
  s.inertia_diag = s.mass * k.cwiseProduct(k);
  s.com_offset = mirror_point(p.com * scale, side);
  s.length = p.length * scale;
  return s;
}

BodySegment exo_segment(const std::string& name, const ExoSegmentParams& p, Side side) {
  BodySegment s;
  s.name = name;
  s.mass = p.mass;
  s.inertia_diag = p.inertia;
  s.com_offset = mirror_point(p.com, side);
  s.length = p.length;
  return s;
}

std::vector<Primitive> primitives_for(const JointSpec& j) {
  std::vector<Primitive> out;
  switch (j.kind) {
    case JointKind::fixed:
      break;
    case JointKind::revolute:
      out.push_back({false, j.axis});
      break;
    case JointKind::spherical:
      for (const Vec3& a : j.rotation_axes) out.push_back({false, a});
      break;
    case JointKind::free:
      out.push_back({true, Vec3::UnitX()});
      out.push_back({true, Vec3::UnitY()});
      out.push_back({true, Vec3::UnitZ()});
      for (const Vec3& a : j.rotation_axes) out.push_back({false, a});
      break;
  }
  return out;
}

const BodySegment* find_segment(const ModelAssembly& a, const std::string& name) {
  for (const auto& s : a.human_segments) {
    if (s.name == name) return &s;
  }
  for (const auto& s : a.exo_segments) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

bool is_exo_segment(const ModelAssembly& a, const std::string& name) {
  return std::any_of(a.exo_segments.begin(), a.exo_segments.end(),
                     [&](const BodySegment& s) { return s.name == name; });
}

const JointSpec* find_joint(const ModelAssembly& a, const std::string& name) {
  for (const auto& j : a.joints) {
    if (j.name == name) return &j;
  }
  return nullptr;
}

}  // namespace

int JointSpec::dof_count() const {
  switch (kind) {
    case JointKind::fixed: return 0;
    case JointKind::revolute: return 1;
    case JointKind::spherical: return 3;
    case JointKind::free: return 6;
  }
  return 0;
}

double ModelAssembly::exo_mass() const {
  double m = 0.0;
  for (const auto& s : exo_segments) m += s.mass;
  return m;
}

const BodySegment& ModelAssembly::segment(const std::string& name) const {
  if (const BodySegment* s = find_segment(*this, name)) return *s;
  throw LookupError("unknown segment '" + name + "'");
}

std::vector<MuscleActuator> ModelConfig::default_muscles() {
  // Slots: 0 hip flexion, 1 hip adduction, 2 hip internal rotation, 3 knee extension.
  // Constant moment arms and maximum forces are order-of-magnitude values.
  auto make = [](std::string name, double f_max, std::map<int, std::array<double, 3>> arms,
                 double knee_angle) {
    MuscleActuator m;
    m.name = std::move(name);
    m.f_max = f_max;
    m.moment_arms = std::move(arms);
    m.knee_line_angle = knee_angle;
    return m;
  };
  return {
      make("bifemlh", 900.0, {{0, {-0.060, 0.0, 0.0}}, {3, {-0.030, 0.0, 0.0}}}, 0.20),
      make("bifemsh", 400.0, {{3, {-0.025, 0.0, 0.0}}}, 0.25),
      make("glut_max", 1600.0, {{0, {-0.070, 0.0, 0.0}}, {1, {-0.010, 0.0, 0.0}}}, 0.0),
      make("rect_fem", 1000.0, {{0, {0.040, 0.0, 0.0}}, {3, {0.045, 0.0, 0.0}}}, 0.15),
      make("vas_lat", 1800.0, {{3, {0.045, 0.0, 0.0}}}, 0.15),
      make("vas_med", 1300.0, {{3, {0.045, 0.0, 0.0}}}, 0.15),
  };
}

ModelAssembly build_default_assembly(const ModelConfig& c) {
  if (!(c.subject_mass > 0.0)) throw ModelError("human.subject_mass must be positive");
  if (!(c.length_scale > 0.0)) throw ModelError("human.length_scale must be positive");
  if (!(c.force_limit > 0.0)) throw ModelError("actuator.force_limit must be positive");
  check_segment_params("load-support", c.load_support.mass, c.load_support.inertia);
  check_segment_params("exo-pelvis", c.exo_pelvis.mass, c.exo_pelvis.inertia);
  check_segment_params("exo-femur", c.exo_femur.mass, c.exo_femur.inertia);
  check_segment_params("exo-tibia", c.exo_tibia.mass, c.exo_tibia.inertia);
  const std::pair<const char*, const HumanSegmentParams*> human_params[] = {
      {"pelvis", &c.pelvis}, {"torso", &c.torso}, {"femur", &c.femur},
      {"tibia", &c.tibia},   {"foot", &c.foot}};
  double fraction = 0.0;
  for (const auto& [name, p] : human_params) {
    check_segment_params(name, p->mass_fraction * c.subject_mass, p->gyration.cwiseAbs2());
    fraction += p->mass_fraction * ((std::string(name) == "pelvis" || std::string(name) == "torso") ? 1.0 : 2.0);
  }
  if (std::abs(fraction - 1.0) > 1e-9) {
    throw ModelError("human mass fractions must sum to 1 (got " + std::to_string(fraction) + ")");
  }

  const double s = c.length_scale;
  ModelAssembly a;
  a.subject_mass = c.subject_mass;
  a.foot_window = c.foot_window;

  a.human_segments.push_back(human_segment("pelvis", c.pelvis, c.subject_mass, s, Side::left));
  a.human_segments.push_back(human_segment("torso", c.torso, c.subject_mass, s, Side::left));

  JointSpec root;
  root.name = "root";
  root.kind = JointKind::free;
  root.child = "pelvis";
  a.joints.push_back(root);

  JointSpec weld;
  weld.name = "torso-weld";
  weld.kind = JointKind::fixed;
  weld.parent = "pelvis";
  weld.child = "torso";
  weld.anchor = c.torso_anchor * s;
  a.joints.push_back(weld);

  for (Side side : {Side::left, Side::right}) {
    const std::string femur = sided("femur", side);
    const std::string tibia = sided("tibia", side);
    const std::string foot = sided("foot", side);
    a.human_segments.push_back(human_segment(femur, c.femur, c.subject_mass, s, side));
    a.human_segments.push_back(human_segment(tibia, c.tibia, c.subject_mass, s, side));
    a.human_segments.push_back(human_segment(foot, c.foot, c.subject_mass, s, side));

    JointSpec hip;
    hip.name = sided("hip", side);
    hip.kind = JointKind::spherical;
    hip.parent = "pelvis";
    hip.child = femur;
    // Positive coordinates: flexion, adduction, internal rotation on both sides.
    hip.rotation_axes = {Vec3::UnitZ(), mirror_axis(-Vec3::UnitX(), side),
                         mirror_axis(-Vec3::UnitY(), side)};
    hip.anchor = mirror_point(c.hip_anchor * s, side);
    hip.limits = {{-0.8, 2.2}, {-0.8, 0.6}, {-0.8, 0.8}};
    a.joints.push_back(hip);

    JointSpec knee;
    knee.name = sided("knee", side);
    knee.parent = femur;
    knee.child = tibia;
    knee.axis = Vec3::UnitZ();  // positive = extension
    knee.anchor = Vec3(0.0, -c.femur.length * s, 0.0);
    knee.limits = {{-2.6, 0.1}};
    a.joints.push_back(knee);

    JointSpec ankle;
    ankle.name = sided("ankle", side);
    ankle.parent = tibia;
    ankle.child = foot;
    ankle.axis = Vec3::UnitZ();  // positive = dorsiflexion
    ankle.anchor = Vec3(0.0, -c.tibia.length * s, 0.0);
    ankle.limits = {{-0.9, 0.6}};
    a.joints.push_back(ankle);
  }

  a.exo_segments.push_back(exo_segment("load-support", c.load_support, Side::left));
  JointSpec tie;
  tie.name = "tie";
  tie.kind = JointKind::fixed;
  tie.parent = "pelvis";
  tie.child = "load-support";
  a.joints.push_back(tie);

  for (Side side : {Side::left, Side::right}) {
    const std::string pelvis = sided("exo-pelvis", side);
    const std::string femur = sided("exo-femur", side);
    const std::string tibia = sided("exo-tibia", side);
    a.exo_segments.push_back(exo_segment(pelvis, c.exo_pelvis, side));
    a.exo_segments.push_back(exo_segment(femur, c.exo_femur, side));
    a.exo_segments.push_back(exo_segment(tibia, c.exo_tibia, side));

    JointSpec jp;
    jp.name = sided("exo-pelvis", side);
    jp.parent = "load-support";
    jp.child = pelvis;
    jp.axis = mirror_axis(-Vec3::UnitX(), side);  // positive = adduction
    jp.anchor = mirror_point(c.exo_pelvis_anchor, side);
    jp.mode = JointMode::forward_dynamics;
    jp.limits = {{-0.6, 0.6}};
    a.joints.push_back(jp);

    JointSpec jh;
    jh.name = sided("exo-hip", side);
    jh.parent = pelvis;
    jh.child = femur;
    jh.axis = Vec3::UnitZ();
    jh.anchor = mirror_point(c.exo_hip_anchor, side);
    jh.mode = JointMode::forward_dynamics;
    jh.limits = {{-0.8, 2.2}};
    a.joints.push_back(jh);

    JointSpec jk;
    jk.name = sided("exo-knee", side);
    jk.parent = femur;
    jk.child = tibia;
    jk.axis = Vec3::UnitZ();
    jk.anchor = mirror_point(c.exo_knee_anchor, side);
    jk.mode = JointMode::forward_dynamics;
    jk.limits = {{-2.6, 0.1}};
    a.joints.push_back(jk);
  }

  for (Side side : {Side::left, Side::right}) {
    auto act = [&](const std::string& base, const std::string& seg_a, const Vec3& pa,
                   const std::string& seg_b, const Vec3& pb) {
      ActuatorSpec x;
      x.name = sided(base, side);
      x.endpoint_a = {seg_a, mirror_point(pa, side)};
      x.endpoint_b = {seg_b, mirror_point(pb, side)};
      x.force_limit = c.force_limit;
      return x;
    };
    a.actuators.push_back(act("exo-pelvis", "load-support", c.pelvis_actuator_support,
                              sided("exo-pelvis", side), c.pelvis_actuator_exo));
    a.actuators.push_back(act("exo-hip", sided("exo-pelvis", side), c.hip_actuator_pelvis,
                              sided("exo-femur", side), c.hip_actuator_femur));
    a.actuators.push_back(act("exo-knee", sided("exo-femur", side), c.knee_actuator_femur,
                              sided("exo-tibia", side), c.knee_actuator_tibia));
  }

  // Strap order is fixed: femur-L, femur-R, tibia-L, tibia-R.
  for (const char* part : {"femur", "tibia"}) {
    const bool femur = std::string(part) == "femur";
    for (Side side : {Side::left, Side::right}) {
      StrapElement st;
      st.name = sided(part, side);
      st.exo_point = {sided(std::string("exo-") + part, side),
                      mirror_point(femur ? c.femur_strap_exo : c.tibia_strap_exo, side)};
      st.body_point = {sided(part, side),
                       mirror_point((femur ? c.femur_strap_body : c.tibia_strap_body) * s, side)};
      st.stiffness = c.strap_stiffness;
      st.damping = c.strap_damping;
      st.stiffness_negative = c.strap_stiffness_negative;
      st.contact_area = c.strap_contact_area;
      a.straps.push_back(st);
    }
  }

  for (Side side : {Side::left, Side::right}) {
    for (MuscleActuator m : c.muscles) {
      m.name = m.name + "-" + side_suffix(side);
      m.side = side;
      a.muscles.push_back(std::move(m));
    }
  }

  const auto report = validate_assembly(a);
  if (!report.empty()) throw ModelError(report.front());
  compile_assembly(a);

  // Rest offsets equal the assembled-pose separations, in the body frame.
  const VecX q0 = VecX::Zero(a.tree.dof_count());
  const TreeKinematics kin = compute_kinematics(a.tree, q0);
  for (StrapElement& st : a.straps) {
    const BodyState& body = kin.bodies[static_cast<std::size_t>(a.tree.index_of(st.body_point.segment))];
    const BodyState& exo = kin.bodies[static_cast<std::size_t>(a.tree.index_of(st.exo_point.segment))];
    st.rest_offset =
        body.rotation.transpose() * (body.point(st.body_point.local) - exo.point(st.exo_point.local));
  }
  return a;
}

void compile_assembly(ModelAssembly& a) {
  MultibodyTree tree;
  std::vector<bool> exo_body;

  const JointSpec* root = nullptr;
  for (const auto& j : a.joints) {
    if (j.parent.empty()) {
      if (root) throw ModelError("assembly has more than one root joint");
      root = &j;
    }
  }
  if (!root) throw ModelError("assembly has no root joint");

  std::vector<const JointSpec*> order{root};
  std::set<std::string> placed{root->child};
  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto& j : a.joints) {
      if (j.parent.empty() || placed.contains(j.child)) continue;
      if (placed.contains(j.parent)) {
        order.push_back(&j);
        placed.insert(j.child);
        progress = true;
      }
    }
  }
  if (order.size() != a.joints.size()) throw ModelError("assembly joints do not form a tree");

  std::map<std::string, int> joint_dof;
  for (const JointSpec* j : order) {
    const BodySegment* seg = find_segment(a, j->child);
    if (!seg) throw ModelError(j->name + ": unknown child segment '" + j->child + "'");
    TreeBody b;
    b.name = seg->name;
    b.parent = j->parent.empty() ? -1 : tree.index_of(j->parent);
    b.anchor = j->anchor;
    b.primitives = primitives_for(*j);
    b.mass = seg->mass;
    b.com = seg->com_offset;
    b.inertia = seg->inertia_diag.asDiagonal();
    joint_dof[j->name] = tree.dof_count();
    tree.add_body(std::move(b));
    exo_body.push_back(is_exo_segment(a, seg->name));
  }

  DofLayout layout;
  layout.total = tree.dof_count();
  layout.names.resize(static_cast<std::size_t>(layout.total));
  auto dof_of = [&](const std::string& joint) {
    auto it = joint_dof.find(joint);
    if (it == joint_dof.end()) throw ModelError("assembly is missing joint '" + joint + "'");
    return it->second;
  };

  const int r = dof_of("root");
  const char* root_names[] = {"pelvis_tx",   "pelvis_ty",   "pelvis_tz",
                              "pelvis_tilt", "pelvis_list", "pelvis_rotation"};
  for (int k = 0; k < 6; ++k) {
    layout.root[static_cast<std::size_t>(k)] = r + k;
    layout.names[static_cast<std::size_t>(r + k)] = root_names[k];
    layout.human.push_back(r + k);
  }
  for (Side side : {Side::left, Side::right}) {
    const std::string sfx = side_suffix(side);
    const int leg = side == Side::left ? 0 : 1;
    const int hip = dof_of("hip-" + sfx);
    const int knee = dof_of("knee-" + sfx);
    const int ankle = dof_of("ankle-" + sfx);
    layout.names[static_cast<std::size_t>(hip)] = "hip_flexion_" + sfx;
    layout.names[static_cast<std::size_t>(hip + 1)] = "hip_adduction_" + sfx;
    layout.names[static_cast<std::size_t>(hip + 2)] = "hip_rotation_" + sfx;
    layout.names[static_cast<std::size_t>(knee)] = "knee_" + sfx;
    layout.names[static_cast<std::size_t>(ankle)] = "ankle_" + sfx;
    for (int d : {hip, hip + 1, hip + 2, knee, ankle}) layout.human.push_back(d);
    layout.lower_limb[static_cast<std::size_t>(4 * leg + 0)] = hip;
    layout.lower_limb[static_cast<std::size_t>(4 * leg + 1)] = hip + 1;
    layout.lower_limb[static_cast<std::size_t>(4 * leg + 2)] = hip + 2;
    layout.lower_limb[static_cast<std::size_t>(4 * leg + 3)] = knee;
    layout.ankle[static_cast<std::size_t>(leg)] = ankle;
  }
  for (Side side : {Side::left, Side::right}) {
    const std::string sfx = side_suffix(side);
    for (const char* base : {"exo-pelvis", "exo-hip", "exo-knee"}) {
      const int d = dof_of(std::string(base) + "-" + sfx);
      std::string name = std::string(base) + "_" + sfx;
      std::replace(name.begin(), name.end(), '-', '_');
      layout.names[static_cast<std::size_t>(d)] = name;
      layout.exo.push_back(d);
    }
  }

  a.foot_body = {tree.index_of("foot-L"), tree.index_of("foot-R")};
  a.tibia_body = {tree.index_of("tibia-L"), tree.index_of("tibia-R")};
  a.tree = std::move(tree);
  a.layout = std::move(layout);
  a.exo_body = std::move(exo_body);
}

std::vector<std::string> validate_assembly(const ModelAssembly& a) {
  std::vector<std::string> out;
  auto check_seg = [&](const BodySegment& s) {
    if (!(s.mass > 0.0)) out.push_back(s.name + ": mass must be positive");
    const Vec3& I = s.inertia_diag;
    if ((I.array() < 0.0).any()) out.push_back(s.name + ": inertia must be non-negative");
    for (int k = 0; k < 3; ++k) {
      if (I[k] > (I[(k + 1) % 3] + I[(k + 2) % 3]) * (1.0 + 1e-12)) {
        out.push_back(s.name + ": inertia violates the triangle inequality");
        break;
      }
    }
  };
  for (const auto& s : a.human_segments) check_seg(s);
  for (const auto& s : a.exo_segments) check_seg(s);

  std::map<std::string, int> parent_count;
  std::set<std::string> all_names;
  for (const auto& s : a.human_segments) all_names.insert(s.name);
  for (const auto& s : a.exo_segments) all_names.insert(s.name);
  int roots = 0;
  for (const auto& j : a.joints) {
    if (!all_names.contains(j.child)) out.push_back(j.name + ": unknown child segment '" + j.child + "'");
    if (!j.parent.empty() && !all_names.contains(j.parent)) {
      out.push_back(j.name + ": unknown parent segment '" + j.parent + "'");
    }
    if (j.parent.empty()) ++roots;
    ++parent_count[j.child];
    if (j.kind == JointKind::revolute && std::abs(j.axis.norm() - 1.0) > kAxisTolerance) {
      out.push_back(j.name + ": joint axis is not unit length");
    }
    if ((j.kind == JointKind::spherical || j.kind == JointKind::free)) {
      for (const Vec3& ax : j.rotation_axes) {
        if (std::abs(ax.norm() - 1.0) > kAxisTolerance) {
          out.push_back(j.name + ": rotation axis is not unit length");
          break;
        }
      }
    }
    const bool exo_child = is_exo_segment(a, j.child);
    const bool tie = j.kind == JointKind::fixed;
    if (!tie && exo_child && j.mode != JointMode::forward_dynamics) {
      out.push_back(j.name + ": exoskeleton joints must be forward-dynamics");
    }
    if (!tie && !exo_child && j.mode != JointMode::prescribed) {
      out.push_back(j.name + ": human joints must be prescribed");
    }
  }
  if (roots != 1) out.push_back("assembly must have exactly one root joint (found " + std::to_string(roots) + ")");
  for (const auto& name : all_names) {
    const int c = parent_count.contains(name) ? parent_count[name] : 0;
    const JointSpec* root = nullptr;
    for (const auto& j : a.joints) {
      if (j.parent.empty()) root = &j;
    }
    const bool is_root = root && root->child == name;
    if (!is_root && c != 1) {
      out.push_back(name + ": must have exactly one parent joint (found " + std::to_string(c) + ")");
    }
  }
  // Acyclic: walking parents from any segment must reach the root.
  {
    std::map<std::string, std::string> parent_of;
    for (const auto& j : a.joints) parent_of[j.child] = j.parent;
    for (const auto& name : all_names) {
      std::string cur = name;
      std::size_t steps = 0;
      while (!cur.empty() && parent_of.contains(cur) && steps <= all_names.size()) {
        cur = parent_of[cur];
        ++steps;
      }
      if (steps > all_names.size()) {
        out.push_back(name + ": joint graph contains a cycle");
        break;
      }
    }
  }

  if (a.exo_segments.size() != 7) {
    out.push_back("exoskeleton must have exactly 7 segments (found " +
                  std::to_string(a.exo_segments.size()) + ")");
  }
  int exo_revolute = 0;
  for (const auto& j : a.joints) {
    if (is_exo_segment(a, j.child) && j.kind == JointKind::revolute) ++exo_revolute;
  }
  if (exo_revolute != 6) {
    out.push_back("exoskeleton must have exactly 6 revolute joints (found " +
                  std::to_string(exo_revolute) + ")");
  }

  if (const JointSpec* root = find_joint(a, "root");
      !root || root->kind != JointKind::free || root->mode != JointMode::prescribed) {
    out.push_back("root: must be a prescribed free joint");
  }
  for (const char* sfx : {"L", "R"}) {
    const std::string s(sfx);
    const JointSpec* hip = find_joint(a, "hip-" + s);
    const JointSpec* knee = find_joint(a, "knee-" + s);
    const JointSpec* ankle = find_joint(a, "ankle-" + s);
    if (!hip || hip->kind != JointKind::spherical) out.push_back("hip-" + s + ": must be spherical");
    if (!knee || knee->kind != JointKind::revolute) out.push_back("knee-" + s + ": must be revolute");
    if (!ankle || ankle->kind != JointKind::revolute) out.push_back("ankle-" + s + ": must be revolute");
  }

  const JointSpec* tie = nullptr;
  for (const auto& j : a.joints) {
    if (j.child == a.tie.support) tie = &j;
  }
  if (!tie || tie->kind != JointKind::fixed || tie->parent != a.tie.body) {
    out.push_back("tie: " + a.tie.support + " must be fixed to " + a.tie.body);
  }

  if (a.actuators.size() != 6) {
    out.push_back("exoskeleton must have exactly 6 actuators (found " +
                  std::to_string(a.actuators.size()) + ")");
  }
  for (const auto& act : a.actuators) {
    if (!(act.force_limit > 0.0)) out.push_back(act.name + ": force_limit must be positive");
    if (act.endpoint_a.segment == act.endpoint_b.segment) {
      out.push_back(act.name + ": endpoints must be on distinct segments");
    }
    for (const PointRef* p : {&act.endpoint_a, &act.endpoint_b}) {
      if (!is_exo_segment(a, p->segment)) {
        out.push_back(act.name + ": endpoint segment '" + p->segment + "' is not an exoskeleton part");
      }
    }
  }

  if (a.straps.size() != 4) {
    out.push_back("assembly must have exactly 4 straps (found " + std::to_string(a.straps.size()) + ")");
  }
  for (const auto& st : a.straps) {
    if ((st.stiffness.array() < 0.0).any() || (st.damping.array() < 0.0).any() ||
        (st.stiffness_negative && (st.stiffness_negative->array() < 0.0).any())) {
      out.push_back(st.name + ": stiffness and damping must be non-negative");
    }
    if (!(st.contact_area > 0.0)) out.push_back(st.name + ": contact_area must be positive");
    if (!is_exo_segment(a, st.exo_point.segment)) {
      out.push_back(st.name + ": exo point must lie on an exoskeleton segment");
    }
    if (!all_names.contains(st.body_point.segment) || is_exo_segment(a, st.body_point.segment)) {
      out.push_back(st.name + ": body point must lie on a human segment");
    }
  }

  for (const auto& m : a.muscles) {
    if (!(m.f_max > 0.0)) out.push_back(m.name + ": f_max must be positive");
    if (m.moment_arms.empty()) out.push_back(m.name + ": must span at least one DOF");
    for (const auto& [slot, c] : m.moment_arms) {
      if (slot < 0 || slot > 3) out.push_back(m.name + ": spanned DOF slot out of range");
      if (!std::isfinite(c[0]) || !std::isfinite(c[1]) || !std::isfinite(c[2])) {
        out.push_back(m.name + ": moment arm must be finite");
      }
    }
  }
  return out;
}

std::vector<SegmentPose> forward_kinematics(const ModelAssembly& a, const VecX& q) {
  require_size(q.size(), a.tree.dof_count(), "q");
  if (!q.allFinite()) throw DimensionError("q must be finite");
  const TreeKinematics kin = compute_kinematics(a.tree, q);
  std::vector<SegmentPose> poses;
  poses.reserve(kin.bodies.size());
  for (const auto& b : kin.bodies) poses.push_back({b.rotation, b.origin});
  return poses;
}

MatX point_jacobian(const ModelAssembly& a, const VecX& q, const std::string& segment,
                    const Vec3& local_point) {
  const int body = a.tree.index_of(segment);
  require_size(q.size(), a.tree.dof_count(), "q");
  const TreeKinematics kin = compute_kinematics(a.tree, q);
  return point_jacobian(a.tree, kin, body, local_point);
}

ComKinematics com_kinematics(const ModelAssembly& a, const VecX& q, const VecX& qd,
                             const VecX& qdd) {
  const int n = a.tree.dof_count();
  require_size(q.size(), n, "q");
  require_size(qd.size(), n, "qd");
  require_size(qdd.size(), n, "qdd");
  const TreeKinematics kin = compute_kinematics(a.tree, q, qd, qdd);
  ComKinematics out;
  for (int i = 0; i < a.tree.body_count(); ++i) {
    const auto& b = a.tree.body(i);
    const auto& s = kin.bodies[static_cast<std::size_t>(i)];
    out.position.push_back(s.point(b.com));
    out.velocity.push_back(s.point_velocity(b.com));
    out.acceleration.push_back(s.point_acceleration(b.com));
  }
  return out;
}

VecX aligned_configuration(const ModelAssembly& a, const VecX& q_human) {
  const auto& L = a.layout;
  require_size(q_human.size(), static_cast<Eigen::Index>(L.human.size()), "q_human");
  VecX q = VecX::Zero(L.total);
  for (std::size_t i = 0; i < L.human.size(); ++i) q[L.human[i]] = q_human[static_cast<Eigen::Index>(i)];
  for (int leg = 0; leg < 2; ++leg) {
    const auto base = static_cast<std::size_t>(3 * leg);
    q[L.exo[base + 0]] = q[L.lower_limb[static_cast<std::size_t>(4 * leg + 1)]];
    q[L.exo[base + 1]] = q[L.lower_limb[static_cast<std::size_t>(4 * leg + 0)]];
    q[L.exo[base + 2]] = q[L.lower_limb[static_cast<std::size_t>(4 * leg + 3)]];
  }
  return q;
}

}  // namespace exosim
