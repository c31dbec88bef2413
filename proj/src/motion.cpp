#include "exosim/motion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace exosim {

namespace {

constexpr double kPeriodicTolerance = 1e-9;
constexpr double kDeg = std::numbers::pi / 180.0;

void check_intervals(const std::vector<StanceInterval>& v, const char* foot) {
  for (const auto& s : v) {
    if (!(s.begin >= 0.0 && s.end <= 1.0 && s.begin < s.end)) {
      throw ValidationError(std::string("stance_") + foot + ": interval " + std::to_string(s.begin) +
                            ":" + std::to_string(s.end) + " is not within [0, 1]");
    }
  }
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i].begin < v[i - 1].end) {
      throw ValidationError(std::string("stance_") + foot + ": intervals overlap or are unsorted");
    }
  }
}

std::string format_intervals(const std::vector<StanceInterval>& v) {
  if (v.empty()) return "none";
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.17g:%.17g", i ? ";" : "", v[i].begin, v[i].end);
    out += buf;
  }
  return out;
}

std::vector<StanceInterval> parse_intervals(const std::string& text, int line) {
  std::vector<StanceInterval> out;
  if (text == "none" || text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ParseError("stance interval '" + item + "' needs begin:end", line);
    try {
      out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::logic_error&) {
      throw ParseError("stance interval '" + item + "' is not numeric", line);
    }
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return out;
}

std::string unit_of(const std::string& name) {
  if (name == "pelvis_tx" || name == "pelvis_ty" || name == "pelvis_tz") return "m";
  return "rad";
}

}  // namespace

GaitTrajectory::GaitTrajectory(std::vector<std::string> names, VecX times, MatX coords,
                               double cycle_duration, bool periodic,
                               std::array<std::vector<StanceInterval>, 2> stance)
    : names_(std::move(names)),
      times_(std::move(times)),
      coords_(std::move(coords)),
      cycle_(cycle_duration),
      periodic_(periodic),
      stance_(std::move(stance)) {
  const Eigen::Index n = times_.size();
  if (n < 2) throw ValidationError("trajectory needs at least two samples");
  if (coords_.rows() != n || coords_.cols() != static_cast<Eigen::Index>(names_.size())) {
    throw ValidationError("trajectory coordinate rows must match timestamps and names");
  }
  if (!times_.allFinite() || !coords_.allFinite()) throw ValidationError("trajectory contains non-finite values");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(times_[i] > times_[i - 1])) {
      throw ValidationError("timestamps must be strictly increasing (sample " + std::to_string(i) + ")");
    }
  }
  if (!(cycle_ > 0.0)) throw ValidationError("cycle_duration must be positive");
  if (periodic_) {
    const double span = times_[n - 1] - times_[0];
    if (std::abs(span - cycle_) > 1e-9 * std::max(1.0, cycle_)) {
      throw ValidationError("periodic trajectory must span exactly one cycle");
    }
    const double gap = (coords_.row(n - 1) - coords_.row(0)).cwiseAbs().maxCoeff();
    if (gap > kPeriodicTolerance) {
      throw ValidationError("periodic trajectory: first and last samples differ by " + std::to_string(gap));
    }
    coords_.row(n - 1) = coords_.row(0);
  }
  check_intervals(stance_[0], "L");
  check_intervals(stance_[1], "R");
  for (const auto& l : stance_[0]) {
    for (const auto& r : stance_[1]) {
      if (l.begin < r.end && r.begin < l.end) {
        throw ValidationError("stance intervals overlap: running gait has no double stance");
      }
    }
  }
  spline_ = std::make_shared<const CubicSpline>(times_, coords_, periodic_);
}

int GaitTrajectory::column(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  throw LookupError("trajectory has no coordinate '" + name + "'");
}

std::array<bool, 2> GaitTrajectory::contact_at_phase(double phase) const {
  std::array<bool, 2> c{false, false};
  for (int f = 0; f < 2; ++f) {
    for (const auto& s : stance_[static_cast<std::size_t>(f)]) {
      if (phase >= s.begin && phase < s.end) c[static_cast<std::size_t>(f)] = true;
    }
  }
  return c;
}

MotionSample GaitTrajectory::sample(double t) const {
  const double t0 = times_[0];
  const double t1 = times_[times_.size() - 1];
  double ts = t;
  if (periodic_) {
    double u = std::fmod(t - t0, cycle_);
    if (u < 0.0) u += cycle_;
    ts = t0 + u;
  } else if (t < t0 || t > t1) {
    throw RangeError("t = " + std::to_string(t) + " is outside the trajectory span [" +
                     std::to_string(t0) + ", " + std::to_string(t1) + "]");
  }
  const auto e = spline_->evaluate(ts);
  MotionSample s;
  s.q = e.value;
  s.qd = e.d1;
  s.qdd = e.d2;
  double phase = std::fmod((t - t0) / cycle_, 1.0);
  if (phase < 0.0) phase += 1.0;
  // Guard against fmod landing a hair below a knot-aligned boundary.
  if (1.0 - phase < 1e-12) phase = 0.0;
  const double snapped = std::round(phase * 1e9) / 1e9;
  if (std::abs(snapped - phase) < 1e-12) phase = snapped;
  s.phase = phase;
  s.contact = contact_at_phase(phase);
  return s;
}

void write_trajectory(const std::string& path, const GaitTrajectory& traj) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trajectory file '" + path + "'");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", traj.cycle_duration());
  out << "# cycle_duration=" << buf << "\n";
  out << "# periodic=" << (traj.periodic() ? 1 : 0) << "\n";
  out << "# stance_L=" << format_intervals(traj.stance()[0]) << "\n";
  out << "# stance_R=" << format_intervals(traj.stance()[1]) << "\n";
  out << "time";
  for (const auto& n : traj.names()) out << "," << n;
  out << ",contact_L,contact_R\n";
  out << "# s";
  for (const auto& n : traj.names()) out << "," << unit_of(n);
  out << ",bool,bool\n";
  const auto& t = traj.times();
  const auto& q = traj.coords();
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    // Full precision so that a reload reproduces the interpolant.
    std::snprintf(buf, sizeof buf, "%.17g", t[i]);
    out << buf;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", q(i, j));
      out << "," << buf;
    }
    const double phase = std::fmod((t[i] - t[0]) / traj.cycle_duration(), 1.0);
    const auto c = traj.contact_at_phase(phase);
    out << "," << (c[0] ? 1 : 0) << "," << (c[1] ? 1 : 0) << "\n";
  }
  if (!out) throw ConfigError("error writing trajectory file '" + path + "'");
}

GaitTrajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trajectory file '" + path + "'");

  std::map<std::string, std::pair<std::string, int>> meta;
  std::vector<std::string> header;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      if (header.empty()) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("metadata line needs key=value", lineno);
        std::string key = line.substr(1, eq - 1);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        meta[key] = {line.substr(eq + 1), lineno};
      }
      continue;  // units row and comments
    }
    auto cells = split_csv(line);
    if (header.empty()) {
      if (cells.size() < 4 || cells.front() != "time" || cells[cells.size() - 2] != "contact_L" ||
          cells.back() != "contact_R") {
        throw ParseError("header must be time, coordinates..., contact_L, contact_R", lineno);
      }
      header = std::move(cells);
      continue;
    }
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " columns, got " +
                           std::to_string(cells.size()),
                       lineno);
    }
    std::vector<double> row;
    for (std::size_t j = 0; j + 2 < cells.size(); ++j) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cells[j], &used);
        if (used != cells[j].size()) throw std::invalid_argument(cells[j]);
        row.push_back(v);
      } catch (const std::logic_error&) {
        throw ParseError("column '" + header[j] + "': '" + cells[j] + "' is not a number", lineno);
      }
    }
    times.push_back(row.front());
    row.erase(row.begin());
    rows.push_back(std::move(row));
  }
  if (header.empty()) throw ParseError("missing header row", lineno);

  auto need = [&](const std::string& key) -> const std::pair<std::string, int>& {
    auto it = meta.find(key);
    if (it == meta.end()) throw ParseError("missing metadata '" + key + "'", 0);
    return it->second;
  };
  double cycle = 0.0;
  {
    const auto& [text, l] = need("cycle_duration");
    try {
      cycle = std::stod(text);
    } catch (const std::logic_error&) {
      throw ParseError("cycle_duration is not a number", l);
    }
  }
  const bool periodic = need("periodic").first == "1";
  std::array<std::vector<StanceInterval>, 2> stance{
      parse_intervals(need("stance_L").first, need("stance_L").second),
      parse_intervals(need("stance_R").first, need("stance_R").second)};

  std::vector<std::string> names(header.begin() + 1, header.end() - 2);
  VecX t(static_cast<Eigen::Index>(times.size()));
  MatX q(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t[static_cast<Eigen::Index>(i)] = times[i];
    for (std::size_t j = 0; j < names.size(); ++j) {
      q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return GaitTrajectory(std::move(names), std::move(t), std::move(q), cycle, periodic, std::move(stance));
}

const std::vector<std::string>& human_coordinate_names() {
  static const std::vector<std::string> names = {
      "pelvis_tx",       "pelvis_ty",       "pelvis_tz",       "pelvis_tilt",
      "pelvis_list",     "pelvis_rotation", "hip_flexion_L",   "hip_adduction_L",
      "hip_rotation_L",  "knee_L",          "ankle_L",         "hip_flexion_R",
      "hip_adduction_R", "hip_rotation_R",  "knee_R",          "ankle_R"};
  return names;
}

GaitParams GaitParams::standing() {
  GaitParams p;
  p.vertical_bounce = 0.0;
  p.lateral_sway = 0.0;
  p.pelvis_tilt = 0.0;
  p.pelvis_list = 0.0;
  p.pelvis_rotation = 0.0;
  p.hip_flexion_mean = 0.0;
  p.hip_flexion_amplitude = 0.0;
  p.hip_adduction_amplitude = 0.0;
  p.hip_rotation_amplitude = 0.0;
  p.knee_flexion_offset = 0.0;
  p.knee_stance_flexion = 0.0;
  p.knee_swing_flexion = 0.0;
  return p;
}

namespace {

// Periodic von Mises bump, 1 at its centre.
double bump(double phase, double centre, double kappa) {
  return std::exp(kappa * (std::cos(2.0 * std::numbers::pi * (phase - centre)) - 1.0));
}

// Exact double integration of knot-sampled, piecewise-linear acceleration.
// Returns positions with zero mean velocity (periodic) and zero mean position.
VecX integrate_periodic(const VecX& a, double h) {
  const Eigen::Index n = a.size();  // n = N + 1 knots, a[N] == a[0]
  VecX y(n);
  y[0] = 0.0;
  double v = 0.0;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    y[k + 1] = y[k] + v * h + h * h * (2.0 * a[k] + a[k + 1]) / 6.0;
    v += h * (a[k] + a[k + 1]) / 2.0;
  }
  const double T = h * static_cast<double>(n - 1);
  const double v0 = -y[n - 1] / T;
  for (Eigen::Index k = 0; k < n; ++k) y[k] += v0 * h * static_cast<double>(k);
  // Mean of the piecewise cubic (trapezoid is close enough for an offset).
  const double mean = (y.sum() - 0.5 * (y[0] + y[n - 1])) / static_cast<double>(n - 1);
  y.array() -= mean;
  y[n - 1] = y[0];
  return y;
}


// Planar point masses of the legs relative to the pelvis (x fore-aft, y up),
// per body-mass unit: thigh, shank, foot for each leg.
struct LegMasses {
  std::array<double, 6> m{};
  std::array<Vec2, 6> r;
  Vec2 ankle[2];
};

LegMasses leg_masses(const GaitParams& p, const MatX& q, int k) {
  LegMasses out;
  for (int leg = 0; leg < 2; ++leg) {
    const int c = 6 + 5 * leg;
    const double hip = q(k, c), shank = q(k, c) + q(k, c + 3);
    const Vec2 thigh_dir(std::sin(hip), -std::cos(hip));
    const Vec2 shank_dir(std::sin(shank), -std::cos(shank));
    const Vec2 hip_pos(0.0, -p.hip_drop);
    const Vec2 knee = hip_pos + p.thigh_length * thigh_dir;
    out.ankle[leg] = knee + p.shank_length * shank_dir;
    const int i = 3 * leg;
    out.m[i] = p.thigh_mass_fraction;
    out.m[i + 1] = p.shank_mass_fraction;
    out.m[i + 2] = p.foot_mass_fraction;
    out.r[i] = hip_pos + p.thigh_com * thigh_dir;
    out.r[i + 1] = knee + p.shank_com * shank_dir;
    out.r[i + 2] = out.ankle[leg] + Vec2(p.foot_com_forward, 0.0);
  }
  return out;
}

// Pelvis fore-aft path. In flight the whole-body COM keeps its fore-aft
// velocity; in stance the pelvis acceleration places the centre of pressure
// (planar moment balance of the point-mass model) on a heel-to-toe roll-over
// line under the stance foot. The two blend with the vertical load so the
// acceleration stays continuous. The roll-over line is shifted as a whole to
// make the path periodic.
VecX fore_aft_pelvis_path(const GaitParams& p, const MatX& q, const VecX& ay, const VecX& py, int ns, int nr,
                          double h) {
  const int N = static_cast<int>(q.rows()) - 1;
  std::vector<LegMasses> legs;
  legs.reserve(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) legs.push_back(leg_masses(p, q, k));
  const double m_legs = 2.0 * (p.thigh_mass_fraction + p.shank_mass_fraction + p.foot_mass_fraction);
  const double m_trunk = 1.0 - m_legs;
  if (!(m_trunk > 0.0)) throw SynthesisError("leg mass fractions leave no trunk mass");

  auto at = [&](int k) -> const LegMasses& { return legs[static_cast<std::size_t>(((k % N) + N) % N)]; };
  // base + c * slope, linear in the roll-over offset c.
  VecX base(N + 1), slope = VecX::Zero(N + 1);
  for (int k = 0; k < N; ++k) {
    const LegMasses& L = at(k);
    const LegMasses& Lm = at(k - 1);
    const LegMasses& Lp = at(k + 1);
    double sum_rxx = 0.0;       // sum m r''_x
    double moment = 0.0;        // sum m (r_x (y'' + g) - Y r''_x)
    double fy = m_trunk * (ay[k] + kGravity);
    double sum_mY = m_trunk * (p.pelvis_height + py[k] + p.trunk_com_height);
    for (std::size_t i = 0; i < 6; ++i) {
      const Vec2 acc = (Lp.r[i] - 2.0 * L.r[i] + Lm.r[i]) / (h * h);
      const double yabs = p.pelvis_height + py[k] + L.r[i].y();
      const double vert = ay[k] + acc.y() + kGravity;
      sum_rxx += L.m[i] * acc.x();
      moment += L.m[i] * (L.r[i].x() * vert - yabs * acc.x());
      fy += L.m[i] * vert;
      sum_mY += L.m[i] * yabs;
    }
    const double ballistic = -sum_rxx;
    const int jl = k, jr = ((k - N / 2) % N + N) % N;
    int leg = -1, j = 0;
    if (jl <= ns) leg = 0, j = jl;
    else if (jr <= ns) leg = 1, j = jr;
    double w = 0.0;
    if (leg >= 0) w = j < nr ? static_cast<double>(j) / nr : (j > ns - nr ? static_cast<double>(ns - j) / nr : 1.0);
    base[k] = ballistic;
    if (w > 0.0) {
      const double u = p.cop_touchdown + (p.cop_toe_off - p.cop_touchdown) * j / ns;
      const double cop = (moment - fy * (L.ankle[leg].x() + u)) / sum_mY;
      base[k] = (1.0 - w) * ballistic + w * cop;
      slope[k] = -w * fy / sum_mY;
    }
  }
  base[N] = base[0];
  slope[N] = slope[0];
  // Zero net velocity change over the cycle (trapezoid rule, matching the integrator).
  auto integral = [&](const VecX& v) { return v.sum() - 0.5 * (v[0] + v[N]); };
  const double s = integral(slope);
  if (std::abs(s) < 1e-12) throw SynthesisError("no stance load to balance the fore-aft momentum");
  const double c = -integral(base) / s;
  const double lo = -p.cop_margin_heel - std::min(p.cop_touchdown, p.cop_toe_off);
  const double hi = p.cop_margin_toe - std::max(p.cop_touchdown, p.cop_toe_off);
  if (c < lo || c > hi) {
    throw SynthesisError("the centre of pressure needed for a periodic fore-aft path leaves the foot (shift " +
                         std::to_string(c) + " m)");
  }
  return integrate_periodic(base + c * slope, h);
}

}  // namespace

GaitTrajectory synthesize_running_gait(const GaitParams& p) {
  if (!(p.stance_fraction > 0.0 && p.stance_fraction <= 0.5)) {
    throw SynthesisError("stance_fraction must lie in (0, 0.5] for running (got " +
                         std::to_string(p.stance_fraction) + ")");
  }
  if (!(p.cadence > 0.0)) throw SynthesisError("cadence must be positive");
  if (p.knots_per_cycle < 40 || p.knots_per_cycle % 2 != 0) {
    throw SynthesisError("knots_per_cycle must be an even number >= 40");
  }
  if (p.vertical_bounce != 0.0 && p.vertical_bounce != 1.0) {
    throw SynthesisError("vertical_bounce must be 0 (standing) or 1: a flight phase needs a ballistic pelvis path");
  }
  if (!(p.stance_ramp > 0.0 && p.stance_ramp <= 0.5)) throw SynthesisError("stance_ramp must lie in (0, 0.5]");
  const double hip_hi = p.hip_flexion_mean + std::abs(p.hip_flexion_amplitude);
  const double hip_lo = p.hip_flexion_mean - std::abs(p.hip_flexion_amplitude);
  const double knee_hi = p.knee_flexion_offset + p.knee_stance_flexion + p.knee_swing_flexion;
  if (hip_hi > 120.0 || hip_lo < -45.0) throw SynthesisError("hip flexion range exceeds joint limits");
  if (knee_hi > 145.0 || p.knee_flexion_offset < -5.0) throw SynthesisError("knee flexion range exceeds joint limits");
  if (std::abs(p.hip_adduction_amplitude) > 30.0 || std::abs(p.hip_rotation_amplitude) > 40.0) {
    throw SynthesisError("hip adduction/rotation amplitude exceeds joint limits");
  }

  const bool running = p.vertical_bounce == 1.0;
  const int N = p.knots_per_cycle;
  const double T = 1.0 / p.cadence;
  const double h = T / N;
  const int ns = std::max(2, static_cast<int>(std::lround(p.stance_fraction * N)));
  if (ns > N / 2) throw SynthesisError("stance_fraction leaves no room for the contralateral stance");
  const int nr = std::clamp(static_cast<int>(std::lround(p.stance_ramp * ns)), 1, ns / 2);
  const double sf = static_cast<double>(ns) / N;

  // Vertical: ballistic flight, trapezoidal stance load.
  auto trapezoid = [&](int j) -> double {
    if (j < 0 || j > ns) return 0.0;
    if (j < nr) return static_cast<double>(j) / nr;
    if (j > ns - nr) return static_cast<double>(ns - j) / nr;
    return 1.0;
  };
  auto wrap = [&](int k) { return ((k % N) + N) % N; };
  const double P = kGravity * (N / 2.0) / (ns - nr);
  VecX ay(N + 1);
  for (int k = 0; k <= N; ++k) {
    ay[k] = running ? -kGravity + P * (trapezoid(wrap(k)) + trapezoid(wrap(k - N / 2))) : 0.0;
  }
  ay[N] = ay[0];
  const VecX py = integrate_periodic(ay, h);

  const auto& names = human_coordinate_names();
  VecX t(N + 1);
  MatX q = MatX::Zero(N + 1, static_cast<Eigen::Index>(names.size()));
  const double two_pi = 2.0 * std::numbers::pi;
  for (int k = 0; k <= N; ++k) {
    const double phase = static_cast<double>(k) / N;
    t[k] = h * k;
    q(k, 1) = p.pelvis_height + py[k];
    q(k, 2) = -p.lateral_sway * std::cos(two_pi * (phase - sf / 2.0));
    q(k, 3) = p.pelvis_tilt * kDeg;
    q(k, 4) = p.pelvis_list * kDeg * std::cos(two_pi * (phase - sf / 2.0));
    q(k, 5) = p.pelvis_rotation * kDeg * std::sin(two_pi * phase);
    for (int leg = 0; leg < 2; ++leg) {
      double ph = phase + 0.5 * leg;
      ph -= std::floor(ph);
      const int c = 6 + 5 * leg;
      const double hip = (p.hip_flexion_mean + p.hip_flexion_amplitude *
                                                   std::cos(two_pi * (ph - p.hip_flexion_peak_phase))) *
                         kDeg;
      const double knee_flex = p.knee_flexion_offset + p.knee_stance_flexion * bump(ph, 0.4 * sf, 12.0) +
                               p.knee_swing_flexion * bump(ph, p.knee_swing_peak_phase, 5.0);
      const double knee = -knee_flex * kDeg;
      q(k, c + 0) = hip;
      q(k, c + 1) = p.hip_adduction_amplitude * kDeg * std::cos(two_pi * (ph - sf / 2.0));
      q(k, c + 2) = p.hip_rotation_amplitude * kDeg * std::sin(two_pi * ph);
      q(k, c + 3) = knee;
      q(k, c + 4) = p.flat_foot ? -(q(k, 3) + hip + knee) : 0.0;
    }
  }
  q.row(N) = q.row(0);
  if (running) q.col(0) = fore_aft_pelvis_path(p, q, ay, py, ns, nr, h);

  std::array<std::vector<StanceInterval>, 2> stance;
  if (running) {
    stance[0] = {{0.0, sf}};
    stance[1] = {{0.5, 0.5 + sf}};
  } else {
    stance[0] = {{0.0, 1.0}};
  }
  return GaitTrajectory(names, std::move(t), std::move(q), T, true, std::move(stance));
}

}  // namespace exosim
