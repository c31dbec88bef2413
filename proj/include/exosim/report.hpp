#pragma once

// Four-case comparison in the layout of a peak-torque table: one row per
// torque category, one column per case, each cell carrying the percent change
// against the no-exo and passive cases.

#include "exosim/dynamics.hpp"
#include "exosim/scenario.hpp"

#include <optional>
#include <string>
#include <vector>

namespace exosim {

struct CaseResult {
  std::string name;
  ControllerKind controller = ControllerKind::none;
  CycleSummary summary;
  std::string error;  // non-empty when the case failed
  bool ok() const { return error.empty(); }
};

/// (value - base) / base; empty when |base| is too small to divide by.
std::optional<double> percent_delta(double value, double base);

struct ComparisonSummary {
  std::vector<CaseResult> cases;
  std::vector<std::string> muscle_names;

  bool partial() const;
  const CaseResult* find(ControllerKind kind) const;
};

/// Five peak-torque categories in table order.
std::vector<std::pair<std::string, double>> torque_categories(const TorquePeaks& peaks);

/// Console table.
std::string format_comparison(const ComparisonSummary& summary);

/// Key-value form: <case>.<quantity> = value, plus .pct_vs_noexo/.pct_vs_passive.
std::string comparison_text(const ComparisonSummary& summary);

/// Display name used for files and table columns ("no-exo" for none).
std::string case_name(ControllerKind kind);

/// Parses a comma-separated case list; throws ConfigError.
std::vector<ControllerKind> parse_case_list(const std::string& text);

/// Runs each case (concurrently; they share only immutable inputs), writes
/// the per-case CSV and summary files plus comparison.txt into the output
/// directory. Failed cases are recorded, not rethrown.
ComparisonSummary run_comparison(const ScenarioConfig& base, const std::vector<ControllerKind>& cases,
                                 const ModelAssembly& assembly, const GaitTrajectory& trajectory);

}  // namespace exosim
