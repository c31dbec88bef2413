#include "exosim/model.hpp"
#include "exosim/config_util.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace exosim {

namespace pt = boost::property_tree;

namespace {

void read_human(const KeyReader& r, HumanSegmentParams& p) {
  r.get("mass_fraction", p.mass_fraction);
  r.get("com", p.com);
  r.get("gyration", p.gyration);
  r.get("length", p.length);
}

void read_exo(const KeyReader& r, ExoSegmentParams& p) {
  r.get("mass", p.mass);
  r.get("inertia", p.inertia);
  r.get("com", p.com);
  r.get("length", p.length);
}

MuscleActuator read_muscle(const std::string& name, const KeyReader& r) {
  MuscleActuator m;
  m.name = name;
  r.get("f_max", m.f_max);
  r.get("rest_length", m.rest_length);
  r.get("knee_line_angle", m.knee_line_angle);
  const char* slots[] = {"hip_flexion", "hip_adduction", "hip_rotation", "knee"};
  for (int k = 0; k < 4; ++k) {
    std::vector<double> c;
    if (r.get_list(slots[k], c)) {
      if (c.empty() || c.size() > 3) {
        throw ConfigError(r.path(slots[k]) + ": expected 1 to 3 polynomial coefficients");
      }
      std::array<double, 3> poly{0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < c.size(); ++i) poly[i] = c[i];
      m.moment_arms[k] = poly;
    }
  }
  return m;
}

}  // namespace

ModelConfig load_model_config(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(path + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  ModelConfig c;
  bool custom_muscles = false;
  for (const auto& [section, body] : tree) {
    const KeyReader r(section, body);
    if (section == "human") {
      r.get("subject_mass", c.subject_mass);
      r.get("length_scale", c.length_scale);
      r.get("torso_anchor", c.torso_anchor);
      r.get("hip_anchor", c.hip_anchor);
    } else if (section == "pelvis") {
      read_human(r, c.pelvis);
    } else if (section == "torso") {
      read_human(r, c.torso);
    } else if (section == "femur") {
      read_human(r, c.femur);
    } else if (section == "tibia") {
      read_human(r, c.tibia);
    } else if (section == "foot") {
      read_human(r, c.foot);
    } else if (section == "load-support") {
      read_exo(r, c.load_support);
    } else if (section == "exo-pelvis") {
      read_exo(r, c.exo_pelvis);
      r.get("anchor", c.exo_pelvis_anchor);
    } else if (section == "exo-femur") {
      read_exo(r, c.exo_femur);
      r.get("anchor", c.exo_hip_anchor);
    } else if (section == "exo-tibia") {
      read_exo(r, c.exo_tibia);
      r.get("anchor", c.exo_knee_anchor);
    } else if (section == "actuators") {
      r.get("force_limit", c.force_limit);
      r.get("pelvis_support", c.pelvis_actuator_support);
      r.get("pelvis_exo", c.pelvis_actuator_exo);
      r.get("hip_pelvis", c.hip_actuator_pelvis);
      r.get("hip_femur", c.hip_actuator_femur);
      r.get("knee_femur", c.knee_actuator_femur);
      r.get("knee_tibia", c.knee_actuator_tibia);
    } else if (section == "straps") {
      r.get("femur_exo", c.femur_strap_exo);
      r.get("femur_body", c.femur_strap_body);
      r.get("tibia_exo", c.tibia_strap_exo);
      r.get("tibia_body", c.tibia_strap_body);
      r.get("stiffness", c.strap_stiffness);
      r.get("damping", c.strap_damping);
      Vec3 kneg;
      if (r.get("stiffness_negative", kneg)) c.strap_stiffness_negative = kneg;
      r.get("contact_area", c.strap_contact_area);
    } else if (section == "foot-window") {
      r.get("heel", c.foot_window.heel);
      r.get("toe", c.foot_window.toe);
      r.get("half_width", c.foot_window.half_width);
    } else if (section.rfind("muscle.", 0) == 0) {
      if (!custom_muscles) c.muscles.clear();
      custom_muscles = true;
      c.muscles.push_back(read_muscle(section.substr(7), r));
    } else {
      throw ConfigError(path + ": unknown section [" + section + "]");
    }
    r.reject_unused();
  }
  return c;
}

}  // namespace exosim
