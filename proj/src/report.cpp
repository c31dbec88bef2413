#include "exosim/report.hpp"
#include "exosim/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <sstream>

namespace exosim {

namespace {

std::string pct(std::optional<double> p) {
  if (!p) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.0f%%", 100.0 * *p);
  return buf;
}

struct Quantity {
  std::string key;
  double value;
};

std::vector<Quantity> quantities(const CycleSummary& s, const std::vector<std::string>& muscles) {
  std::vector<Quantity> q;
  for (const auto& [k, v] : torque_categories(s.peaks)) q.push_back({k, v});
  q.push_back({"peak_grf_x", s.peak_grf.x()});
  q.push_back({"peak_grf_y", s.peak_grf.y()});
  q.push_back({"peak_grf_z", s.peak_grf.z()});
  q.push_back({"strap_rms", s.strap_rms});
  q.push_back({"peak_knee_compression", s.peak_knee_compression});
  for (std::size_t i = 0; i < muscles.size() && static_cast<Eigen::Index>(i) < s.peak_activation.size(); ++i) {
    q.push_back({"peak_activation_" + muscles[i], s.peak_activation[static_cast<Eigen::Index>(i)]});
  }
  return q;
}

}  // namespace

std::optional<double> percent_delta(double value, double base) {
  if (!(std::abs(base) > 1e-12)) return std::nullopt;
  return (value - base) / base;
}

bool ComparisonSummary::partial() const {
  for (const auto& c : cases) {
    if (!c.ok()) return true;
  }
  return false;
}

const CaseResult* ComparisonSummary::find(ControllerKind kind) const {
  for (const auto& c : cases) {
    if (c.controller == kind && c.ok()) return &c;
  }
  return nullptr;
}

std::vector<std::pair<std::string, double>> torque_categories(const TorquePeaks& p) {
  return {{"hip_flexion", p.hip_flexion},
          {"hip_extension", p.hip_extension},
          {"hip_abduction", p.hip_abduction},
          {"hip_rotation", p.hip_rotation},
          {"knee_extension", p.knee_extension}};
}

std::string format_comparison(const ComparisonSummary& s) {
  const CaseResult* noexo = s.find(ControllerKind::none);
  const CaseResult* passive = s.find(ControllerKind::passive);
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-16s", "peak (N m)");
  out << buf;
  for (const auto& c : s.cases) {
    std::snprintf(buf, sizeof buf, " | %-24s", c.name.c_str());
    out << buf;
  }
  out << "\n";

  auto row = [&](const std::string& label, auto get) {
    std::snprintf(buf, sizeof buf, "%-16s", label.c_str());
    out << buf;
    for (const auto& c : s.cases) {
      std::string cell = "failed";
      if (c.ok()) {
        const double v = get(c.summary);
        std::snprintf(buf, sizeof buf, "%.1f", v);
        cell = buf;
        std::vector<std::string> rel;
        if (noexo && &c != noexo) rel.push_back(pct(percent_delta(v, get(noexo->summary))));
        if (passive && &c != passive && c.controller != ControllerKind::none) {
          rel.push_back(pct(percent_delta(v, get(passive->summary))));
        }
        if (!rel.empty()) {
          cell += " (";
          for (std::size_t i = 0; i < rel.size(); ++i) cell += (i ? ", " : "") + rel[i];
          cell += ")";
        }
      }
      std::snprintf(buf, sizeof buf, " | %-24s", cell.c_str());
      out << buf;
    }
    out << "\n";
  };

  for (std::size_t k = 0; k < 5; ++k) {
    row(torque_categories(TorquePeaks{})[k].first, [k](const CycleSummary& cs) { return torque_categories(cs.peaks)[k].second; });
  }
  row("grf_y (N)", [](const CycleSummary& cs) { return cs.peak_grf.y(); });
  row("strap_rms (N)", [](const CycleSummary& cs) { return cs.strap_rms; });
  row("knee_comp (N)", [](const CycleSummary& cs) { return cs.peak_knee_compression; });
  out << "(first percent vs no-exo, second vs passive)\n";
  for (const auto& c : s.cases) {
    if (!c.ok()) out << c.name << ": FAILED: " << c.error << "\n";
  }
  if (s.partial()) out << "partial results: at least one case failed\n";
  return out.str();
}

std::string comparison_text(const ComparisonSummary& s) {
  const CaseResult* noexo = s.find(ControllerKind::none);
  const CaseResult* passive = s.find(ControllerKind::passive);
  std::ostringstream out;
  out << "partial = " << (s.partial() ? 1 : 0) << "\n";
  for (const auto& c : s.cases) {
    out << c.name << ".controller = " << controller_name(c.controller) << "\n";
    if (!c.ok()) {
      out << c.name << ".error = " << c.error << "\n";
      continue;
    }
    const auto qs = quantities(c.summary, s.muscle_names);
    const auto qn = noexo ? quantities(noexo->summary, s.muscle_names) : std::vector<Quantity>{};
    const auto qp = passive ? quantities(passive->summary, s.muscle_names) : std::vector<Quantity>{};
    for (std::size_t i = 0; i < qs.size(); ++i) {
      out << c.name << "." << qs[i].key << " = " << format_number(qs[i].value) << "\n";
      if (!qn.empty()) {
        const auto p = percent_delta(qs[i].value, qn[i].value);
        out << c.name << "." << qs[i].key << ".pct_vs_noexo = " << (p ? format_number(100.0 * *p) : "n/a") << "\n";
      }
      if (!qp.empty()) {
        const auto p = percent_delta(qs[i].value, qp[i].value);
        out << c.name << "." << qs[i].key << ".pct_vs_passive = " << (p ? format_number(100.0 * *p) : "n/a") << "\n";
      }
    }
  }
  return out.str();
}

std::string case_name(ControllerKind kind) {
  return kind == ControllerKind::none ? "no-exo" : controller_name(kind);
}

std::vector<ControllerKind> parse_case_list(const std::string& text) {
  std::vector<ControllerKind> out;
  std::stringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty()) continue;
    const ControllerKind k = parse_controller(tok);
    for (ControllerKind seen : out) {
      if (seen == k) throw ConfigError("case '" + tok + "' listed twice");
    }
    out.push_back(k);
  }
  if (out.empty()) throw ConfigError("case list is empty");
  return out;
}

ComparisonSummary run_comparison(const ScenarioConfig& base, const std::vector<ControllerKind>& cases,
                                 const ModelAssembly& assembly, const GaitTrajectory& trajectory) {
  check_scenario(base);
  std::vector<std::future<CaseResult>> jobs;
  for (ControllerKind kind : cases) {
    jobs.push_back(std::async(std::launch::async, [&, kind] {
      CaseResult cr;
      cr.name = case_name(kind);
      cr.controller = kind;
      ScenarioConfig c = base;
      c.controller = kind;
      c.name = base.name + "/" + cr.name;
      try {
        const ScenarioOutput out = run_scenario(c, assembly, trajectory, cr.name);
        cr.summary = out.result.summary;
        for (const auto& d : out.diagnostics) {
          if (d.severity == Severity::error) {
            cr.error = d.message;
            break;
          }
        }
      } catch (const std::exception& e) {
        cr.error = e.what();
      }
      return cr;
    }));
  }
  ComparisonSummary s;
  for (const auto& m : assembly.muscles) s.muscle_names.push_back(m.name);
  for (auto& j : jobs) s.cases.push_back(j.get());
  write_file_atomic((std::filesystem::path(base.output_dir) / "comparison.txt").string(), comparison_text(s));
  return s;
}

}  // namespace exosim
