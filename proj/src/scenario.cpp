#include "exosim/scenario.hpp"
#include "exosim/config_util.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace exosim {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

pt::ptree read_ini_file(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("scenario file '" + path + "' does not exist");
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(path + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  return tree;
}

void read_gait(const KeyReader& r, GaitParams& g) {
  r.get("speed", g.speed);
  r.get("cadence", g.cadence);
  r.get("stance_fraction", g.stance_fraction);
  r.get("knots_per_cycle", g.knots_per_cycle);
  r.get("pelvis_height", g.pelvis_height);
  r.get("vertical_bounce", g.vertical_bounce);
  r.get("stance_ramp", g.stance_ramp);
  r.get("lateral_sway", g.lateral_sway);
  r.get("pelvis_tilt", g.pelvis_tilt);
  r.get("pelvis_list", g.pelvis_list);
  r.get("pelvis_rotation", g.pelvis_rotation);
  r.get("hip_flexion_mean", g.hip_flexion_mean);
  r.get("hip_flexion_amplitude", g.hip_flexion_amplitude);
  r.get("hip_flexion_peak_phase", g.hip_flexion_peak_phase);
  r.get("hip_adduction_amplitude", g.hip_adduction_amplitude);
  r.get("hip_rotation_amplitude", g.hip_rotation_amplitude);
  r.get("knee_flexion_offset", g.knee_flexion_offset);
  r.get("knee_stance_flexion", g.knee_stance_flexion);
  r.get("knee_swing_flexion", g.knee_swing_flexion);
  r.get("knee_swing_peak_phase", g.knee_swing_peak_phase);
  r.get("flat_foot", g.flat_foot);
  r.get("cop_touchdown", g.cop_touchdown);
  r.get("cop_toe_off", g.cop_toe_off);
  r.get("cop_margin_heel", g.cop_margin_heel);
  r.get("cop_margin_toe", g.cop_margin_toe);
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

MacDemand parse_mac_demand(const std::string& s, const std::string& field) {
  if (s == "include_straps") return MacDemand::include_straps;
  if (s == "exclude_straps") return MacDemand::exclude_straps;
  throw ConfigError(field + ": expected include_straps or exclude_straps, got '" + s + "'");
}

bool finite(const VecX& v) { return v.size() == 0 || v.allFinite(); }

}  // namespace

GaitParams load_gait_params(const std::string& path) {
  const pt::ptree tree = read_ini_file(path);
  GaitParams g;
  for (const auto& [section, body] : tree) {
    if (section != "gait") continue;
    const KeyReader r(section, body);
    read_gait(r, g);
    r.reject_unused();
  }
  return g;
}

ScenarioConfig load_scenario(const std::string& path) {
  const pt::ptree tree = read_ini_file(path);
  const std::string dir = fs::path(path).parent_path().string();
  ScenarioConfig c;
  c.name = fs::path(path).stem().string();
  for (const auto& [section, body] : tree) {
    const KeyReader r(section, body);
    if (section == "scenario") {
      std::string s;
      if (r.get("name", s)) c.name = s;
      if (r.get("controller", s)) {
        try {
          c.controller = parse_controller(s);
        } catch (const ConfigError& e) {
          throw ConfigError(r.path("controller") + ": " + e.what());
        }
      }
      r.get("dt", c.dt);
      r.get("cycles", c.cycles);
      r.get("mu", c.mu);
      double seed = 0.0;
      if (r.get("seed", seed)) {
        if (seed < 0.0 || seed != std::floor(seed)) throw ConfigError(r.path("seed") + ": expected a non-negative integer");
        c.seed = static_cast<unsigned long>(seed);
      }
      if (r.get("output", s)) c.output_dir = resolve(dir, s);
      if (r.get("mac_demand", s)) c.mac_demand = parse_mac_demand(s, r.path("mac_demand"));
    } else if (section == "model") {
      std::string s;
      if (r.get("path", s)) c.model_path = resolve(dir, s);
    } else if (section == "motion") {
      std::string s;
      if (r.get("trajectory", s)) c.trajectory_path = resolve(dir, s);
    } else if (section == "gait") {
      read_gait(r, c.gait);
    } else {
      throw ConfigError(path + ": unknown section [" + section + "]");
    }
    r.reject_unused();
  }
  check_scenario(c);
  return c;
}

void check_scenario(const ScenarioConfig& c) {
  if (!(c.dt > 0.0 && c.dt <= 5e-3)) throw ConfigError("scenario.dt: must lie in (0, 0.005] s");
  if (c.cycles < 1) throw ConfigError("scenario.cycles: must be at least 1");
  if (!(c.mu >= 0.0) || !std::isfinite(c.mu)) throw ConfigError("scenario.mu: must be a non-negative number");
  if (c.output_dir.empty()) throw ConfigError("scenario.output: must not be empty");
  if (!c.model_path.empty() && !fs::exists(c.model_path)) {
    throw ConfigError("model.path: file '" + c.model_path + "' does not exist");
  }
  if (!c.trajectory_path.empty() && !fs::exists(c.trajectory_path)) {
    throw ConfigError("motion.trajectory: file '" + c.trajectory_path + "' does not exist");
  }
}

ModelAssembly scenario_assembly(const ScenarioConfig& c) {
  const ModelConfig mc = c.model_path.empty() ? ModelConfig{} : load_model_config(c.model_path);
  return build_default_assembly(mc);
}

GaitTrajectory scenario_trajectory(const ScenarioConfig& c) {
  if (c.trajectory_path.empty()) return synthesize_running_gait(c.gait);
  return load_trajectory(c.trajectory_path);
}

SimulationOptions scenario_options(const ScenarioConfig& c) {
  SimulationOptions o;
  o.controller = c.controller;
  o.dt = c.dt;
  o.cycles = c.cycles;
  o.mu = c.mu;
  o.mac_demand = c.mac_demand;
  return o;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::string> frame_columns(const ModelAssembly& a) {
  std::vector<std::string> cols = {"time", "gait_pct", "grf_x", "grf_y", "grf_z"};
  for (int d : a.layout.human) cols.push_back("tau_" + a.layout.names[static_cast<std::size_t>(d)]);
  for (const auto& s : a.straps) {
    for (const char* ax : {"x", "y", "z"}) cols.push_back("FS_" + s.name + "_" + ax);
  }
  for (const auto& act : a.actuators) cols.push_back("FA_" + act.name);
  cols.push_back("phi");
  for (const auto& m : a.muscles) cols.push_back("act_" + m.name);
  cols.push_back("knee_reaction_L");
  cols.push_back("knee_reaction_R");
  // Auxiliary columns, after the primary schema.
  for (const auto& s : a.straps) cols.push_back("pressure_" + s.name);
  for (const auto& s : a.straps) {
    for (const char* ax : {"x", "y", "z"}) cols.push_back("FSd_" + s.name + "_" + ax);
  }
  for (const auto& act : a.actuators) cols.push_back("bound_" + act.name);
  return cols;
}

std::string frames_csv(const ModelAssembly& a, const RunResult& r) {
  std::ostringstream out;
  const auto cols = frame_columns(a);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  auto put = [&](double v) { out << "," << format_number(v); };
  for (const auto& f : r.frames) {
    out << format_number(f.t);
    put(f.gait_pct);
    for (int k = 0; k < 3; ++k) put(f.grf.force[k]);
    for (Eigen::Index i = 0; i < f.tau_human.size(); ++i) put(f.tau_human[i]);
    for (Eigen::Index i = 0; i < f.F_S.size(); ++i) put(f.F_S[i]);
    for (Eigen::Index i = 0; i < f.F_A.size(); ++i) put(f.F_A[i]);
    put(f.phi ? *f.phi : std::nan(""));
    for (Eigen::Index i = 0; i < f.activations.size(); ++i) put(f.activations[i]);
    put(f.knee_reaction[0]);
    put(f.knee_reaction[1]);
    for (double p : f.strap_pressure) put(p);
    for (Eigen::Index i = 0; i < f.desired_F_S.size(); ++i) put(f.desired_F_S[i]);
    for (bool b : f.bound_active) out << "," << (b ? 1 : 0);
    out << "\n";
  }
  return out.str();
}

std::vector<Diagnostic> run_diagnostics(const RunResult& r) {
  std::vector<Diagnostic> d;
  long bad_step = -1;
  for (std::size_t i = 0; i < r.frames.size() && bad_step < 0; ++i) {
    const auto& f = r.frames[i];
    if (!f.grf.force.allFinite() || !finite(f.tau_human) || !finite(f.F_S) || !finite(f.F_A) ||
        !finite(f.activations) || !std::isfinite(f.knee_reaction[0]) || !std::isfinite(f.knee_reaction[1])) {
      bad_step = static_cast<long>(i);
    }
  }
  if (bad_step >= 0) {
    d.push_back({Severity::error, "non-finite output at recorded frame " + std::to_string(bad_step)});
  }
  const auto& s = r.summary;
  if (s.max_muscle_excess > 1e-9) {
    d.push_back({Severity::error, "muscle activation outside [0, 1] by " + format_number(s.max_muscle_excess)});
  }
  if (s.limit_warnings > 0) {
    d.push_back({Severity::warning, std::to_string(s.limit_warnings) + " steps with an exoskeleton joint past its limit"});
  }
  if (s.solver_fallbacks > 0) {
    d.push_back({Severity::warning, std::to_string(s.solver_fallbacks) + " steps where a solver hit its iteration cap"});
  }
  return d;
}

std::string summary_text(const ScenarioConfig& c, const ModelAssembly& a, const RunResult& r,
                         const std::vector<Diagnostic>& diags) {
  std::ostringstream out;
  const auto& s = r.summary;
  auto kv = [&](const std::string& k, const std::string& v) { out << k << " = " << v << "\n"; };
  auto kn = [&](const std::string& k, double v) { kv(k, format_number(v)); };
  kv("scenario", c.name);
  kv("controller", controller_name(c.controller));
  kv("mac_demand", c.mac_demand == MacDemand::include_straps ? "include_straps" : "exclude_straps");
  kn("dt_effective", r.dt_effective);
  kn("steps_per_cycle", r.steps_per_cycle);
  kn("cycles", c.cycles);
  kn("recorded_frames", static_cast<double>(r.frames.size()));
  kv("seed", std::to_string(c.seed));
  kn("peak_hip_flexion", s.peaks.hip_flexion);
  kn("peak_hip_extension", s.peaks.hip_extension);
  kn("peak_hip_abduction", s.peaks.hip_abduction);
  kn("peak_hip_rotation", s.peaks.hip_rotation);
  kn("peak_knee_extension", s.peaks.knee_extension);
  kn("peak_grf_x", s.peak_grf.x());
  kn("peak_grf_y", s.peak_grf.y());
  kn("peak_grf_z", s.peak_grf.z());
  kn("strap_rms", s.strap_rms);
  for (std::size_t i = 0; i < a.straps.size(); ++i) kn("strap_rms_" + a.straps[i].name, s.strap_rms_per_strap[i]);
  kn("peak_strap_pressure", s.peak_strap_pressure);
  kn("peak_actuator_force", s.peak_actuator_force);
  kn("peak_knee_compression", s.peak_knee_compression);
  for (std::size_t i = 0; i < a.muscles.size(); ++i) {
    kn("peak_activation_" + a.muscles[i].name, s.peak_activation[static_cast<Eigen::Index>(i)]);
  }
  kn("limit_warnings", s.limit_warnings);
  kn("solver_fallbacks", s.solver_fallbacks);
  int errors = 0;
  for (const auto& d : diags) errors += d.severity == Severity::error;
  kn("errors", errors);
  for (const auto& d : diags) {
    kv(d.severity == Severity::error ? "error" : "warning", d.message);
  }
  return out.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw ConfigError("error writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

bool ScenarioOutput::has_errors() const {
  for (const auto& d : diagnostics) {
    if (d.severity == Severity::error) return true;
  }
  return false;
}

ScenarioOutput run_scenario(const ScenarioConfig& c, const ModelAssembly& a, const GaitTrajectory& traj,
                            const std::string& stem) {
  check_scenario(c);
  ScenarioOutput out;
  out.result = run_cycle(a, traj, scenario_options(c));
  out.diagnostics = run_diagnostics(out.result);
  out.csv_path = (fs::path(c.output_dir) / (stem + ".csv")).string();
  out.summary_path = (fs::path(c.output_dir) / (stem + ".summary.txt")).string();
  write_file_atomic(out.csv_path, frames_csv(a, out.result));
  write_file_atomic(out.summary_path, summary_text(c, a, out.result, out.diagnostics));
  return out;
}

}  // namespace exosim
