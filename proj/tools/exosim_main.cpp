// exosim command line: run, compare, validate, synth-gait.
//
// Exit status: 0 success, 1 failed check or invariant, 2 usage/config error,
// 3 model or simulation error.

#include "exosim/checks.hpp"
#include "exosim/report.hpp"
#include "exosim/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

using namespace exosim;

enum Exit { ok = 0, failed = 1, usage = 2, sim_error = 3 };

struct Overrides {
  std::string scenario;
  std::string out;
  double dt = 0.0;
  int cycles = 0;
  std::string controller;
  long long seed = -1;
};

ScenarioConfig resolve_config(const Overrides& o) {
  ScenarioConfig c = o.scenario.empty() ? ScenarioConfig{} : load_scenario(o.scenario);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.dt != 0.0) c.dt = o.dt;
  if (o.cycles != 0) c.cycles = o.cycles;
  if (!o.controller.empty()) c.controller = parse_controller(o.controller);
  if (o.seed >= 0) c.seed = static_cast<unsigned long>(o.seed);
  check_scenario(c);
  return c;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--scenario", o.scenario, "scenario file (sectioned key-value)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--dt", o.dt, "time step, s (snapped to divide the cycle)");
  cmd->add_option("--cycles", o.cycles, "gait cycles to simulate (first is discarded when >= 2)");
  cmd->add_option("--seed", o.seed, "seed recorded with the outputs");
}

int cmd_run(const Overrides& o) {
  const ScenarioConfig c = resolve_config(o);
  const ModelAssembly a = scenario_assembly(c);
  const GaitTrajectory traj = scenario_trajectory(c);
  const ScenarioOutput out = run_scenario(c, a, traj, c.name);
  for (const auto& d : out.diagnostics) {
    std::cerr << (d.severity == Severity::error ? "error: " : "warning: ") << d.message << "\n";
  }
  const auto& s = out.result.summary;
  std::cout << c.name << " (" << controller_name(c.controller) << "): " << out.result.frames.size()
            << " frames, dt " << format_number(out.result.dt_effective) << " s\n"
            << "  peak knee extension " << format_number(s.peaks.knee_extension) << " N m, peak vertical GRF "
            << format_number(s.peak_grf.y()) << " N, strap RMS " << format_number(s.strap_rms) << " N\n"
            << "  wrote " << out.csv_path << " and " << out.summary_path << "\n";
  return out.has_errors() ? failed : ok;
}

int cmd_compare(const Overrides& o, const std::string& cases_text) {
  const ScenarioConfig c = resolve_config(o);
  const auto cases = parse_case_list(cases_text);
  const ModelAssembly a = scenario_assembly(c);
  const GaitTrajectory traj = scenario_trajectory(c);
  const ComparisonSummary s = run_comparison(c, cases, a, traj);
  std::cout << format_comparison(s);
  std::cout << "wrote " << (std::filesystem::path(c.output_dir) / "comparison.txt").string() << "\n";
  return s.partial() ? failed : ok;
}

int cmd_validate(long long seed, const std::string& fault, bool quick) {
  ValidationOptions opt;
  if (seed >= 0) opt.seed = static_cast<unsigned long>(seed);
  opt.fault.flip_exo_side = fault;
  opt.include_dynamic = !quick;
  bool all = true;
  for (const auto& r : run_validation(opt)) {
    std::cout << format_check(r) << "\n";
    all = all && r.pass;
  }
  std::cout << (all ? "all checks passed" : "some checks FAILED") << "\n";
  return all ? ok : failed;
}

int cmd_synth(const std::string& scenario, const std::string& out, double stance) {
  GaitParams g = scenario.empty() ? GaitParams{} : load_gait_params(scenario);
  if (stance > 0.0) g.stance_fraction = stance;
  const GaitTrajectory traj = synthesize_running_gait(g);
  const std::string path = out.empty() ? "gait.csv" : out;
  if (std::filesystem::path(path).has_parent_path()) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  }
  write_trajectory(path, traj);
  std::cout << "wrote " << path << " (" << traj.times().size() << " knots, cycle "
            << format_number(traj.cycle_duration()) << " s)\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exoskeleton-human co-simulation"};
  app.require_subcommand(1);

  Overrides run_o, cmp_o;
  auto* run = app.add_subcommand("run", "simulate one scenario and write frame CSV + summary");
  add_common(run, run_o);
  run->add_option("--controller", run_o.controller, "none | passive | mic | mac");

  std::string cases = "none,passive,mic,mac";
  auto* cmp = app.add_subcommand("compare", "run several controller cases and tabulate peak torques");
  add_common(cmp, cmp_o);
  cmp->add_option("--cases", cases, "comma-separated case list");

  long long val_seed = -1;
  std::string fault;
  bool quick = false;
  auto* val = app.add_subcommand("validate", "run the mechanics and solver property suite");
  val->add_option("--seed", val_seed, "seed for the random solver problems");
  val->add_option("--fault-flip-strap", fault, "test hook: flip the exoskeleton-side reaction of a strap");
  val->add_flag("--quick", quick, "skip the time-stepping checks");

  std::string synth_scenario, synth_out;
  double stance = 0.0;
  auto* syn = app.add_subcommand("synth-gait", "write a synthetic running-gait trajectory");
  syn->add_option("--scenario", synth_scenario, "file with a [gait] section");
  syn->add_option("--out", synth_out, "trajectory CSV path");
  syn->add_option("--stance-fraction", stance, "override the per-foot stance fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  try {
    if (*run) return cmd_run(run_o);
    if (*cmp) return cmd_compare(cmp_o, cases);
    if (*val) return cmd_validate(val_seed, fault, quick);
    if (*syn) return cmd_synth(synth_scenario, synth_out, stance);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return usage;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return usage;
  } catch (const SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return sim_error;
  } catch (const SynthesisError& e) {
    std::cerr << "synthesis error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sim_error;
  }
  return usage;
}
