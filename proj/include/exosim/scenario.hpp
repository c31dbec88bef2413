#pragma once

// Scenario files, frame/summary export and single-case runs.

#include "exosim/dynamics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace exosim {

struct ScenarioConfig {
  std::string name = "scenario";
  std::string model_path;       // empty: built-in model
  std::string trajectory_path;  // empty: synthesized from `gait`
  GaitParams gait;
  ControllerKind controller = ControllerKind::passive;
  double dt = 1e-3;
  int cycles = 2;
  double mu = 0.8;
  std::string output_dir = "out";
  unsigned long seed = 1;
  MacDemand mac_demand = MacDemand::include_straps;
};

/// Reads a sectioned key-value scenario file. Relative paths are resolved
/// against the file's directory. Throws ConfigError naming the field.
ScenarioConfig load_scenario(const std::string& path);

/// Applies [gait] keys onto params; shared with synth-gait.
GaitParams load_gait_params(const std::string& path);

/// Throws ConfigError with the field path of the first invalid value.
void check_scenario(const ScenarioConfig& config);

ModelAssembly scenario_assembly(const ScenarioConfig& config);
GaitTrajectory scenario_trajectory(const ScenarioConfig& config);
SimulationOptions scenario_options(const ScenarioConfig& config);

std::vector<std::string> frame_columns(const ModelAssembly& assembly);
std::string frames_csv(const ModelAssembly& assembly, const RunResult& result);

enum class Severity { warning, error };

struct Diagnostic {
  Severity severity = Severity::warning;
  std::string message;
};

/// Post-run invariant checks: non-finite outputs and muscle bounds are errors,
/// joint-limit excursions and solver fallbacks are warnings.
std::vector<Diagnostic> run_diagnostics(const RunResult& result);

std::string summary_text(const ScenarioConfig& config, const ModelAssembly& assembly, const RunResult& result,
                         const std::vector<Diagnostic>& diagnostics);

/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

std::string format_number(double v);  // 9 significant digits

struct ScenarioOutput {
  RunResult result;
  std::vector<Diagnostic> diagnostics;
  std::string csv_path;
  std::string summary_path;
  bool has_errors() const;
};

/// Runs one case and writes <out>/<stem>.csv and <out>/<stem>.summary.txt.
ScenarioOutput run_scenario(const ScenarioConfig& config, const ModelAssembly& assembly,
                            const GaitTrajectory& trajectory, const std::string& stem);

}  // namespace exosim
