#pragma once

// attrdim command-line application: configuration (JSON file + flags),
// trajectory cache, analyses, and report assembly. main() is a thin wrapper
// around run() so the whole surface can be driven from tests.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "attrdim/attrdim.hpp"

namespace attrdim::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kDivergence = 3,
  kInsufficientData = 4,
  kDependency = 5,
  kBudget = 6,
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Value parsing

/// Decimal or fraction ("8/3", "-1.5/2"). A fraction is divided once, after
/// both parts are read, so 8/3 becomes the double nearest to 8/3.
inline double parse_number(const std::string& text) {
  auto parse_part = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + text + "'");
    }
    if (used != s.size()) throw ConfigError("not a number: '" + text + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return parse_part(text);
  const double num = parse_part(text.substr(0, slash));
  const double den = parse_part(text.substr(slash + 1));
  if (den == 0) throw ConfigError("zero denominator in '" + text + "'");
  return num / den;
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_number(item));
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  std::string command;
  std::string system = "lorenz";
  std::map<std::string, double> params;  // explicit overrides of system defaults
  std::vector<double> rates{0.5, -1.0};   // linear system diagonal
  double step = 1e-3;
  double warmup = 100.0;
  std::uint64_t seed = 0;
  std::string out = "attrdim-out";

  // simulate
  double t = 10.0;
  std::vector<double> x0;
  std::size_t record_every = 1;

  // lyap-dim
  std::size_t samples = 50;
  std::vector<double> horizons{5.0, 10.0, 20.0};
  double sample_stride = 1.0;

  // box-dim
  std::size_t points = 1'000'000;
  double point_stride = 0.01;
  int levels = 10;
  std::optional<double> eps_max;
  std::vector<double> eps_list;
  double min_per_cube = 10.0;
  std::size_t anchors = 3;
  std::vector<double> d_values;
  bool plot = true;

  // lorenz-bound / stretch rates
  bool numerics = true;
  std::size_t rate_samples = 200;
  double horizon = 20.0;
  double identity_t = 5.0;
  std::size_t identity_points = 10;

  // stretch
  std::vector<double> taus{1, 2, 3, 4, 5};
  double length = 0.1;
  double resolution = 1e-3;
  std::vector<double> center;     // empty: on-attractor default near (-10, -10, 25)
  std::vector<double> direction;  // empty: leading unstable direction
  std::size_t vertex_budget = kDefaultVertexBudget;

  // report
  bool from_artifacts = false;
};

inline bool is_point_set_system(const std::string& s) {
  return s == "cantor" || s == "sierpinski" || s == "square-grid" || s == "interval-grid" || s == "square" ||
         s == "interval";
}

inline double param_or(const RunConfig& c, const std::string& key, double dflt) {
  auto it = c.params.find(key);
  return it == c.params.end() ? dflt : it->second;
}

inline SystemDef make_system(const RunConfig& c) {
  if (c.system == "lorenz")
    return lorenz(param_or(c, "sigma", 10.0), param_or(c, "r", 28.0), param_or(c, "b", 8.0 / 3.0));
  if (c.system == "henon") return henon(param_or(c, "a", 1.4), param_or(c, "b", 0.3));
  if (c.system == "linear") return linear_diag(c.rates, SystemKind::Flow);
  if (c.system == "linear-map") return linear_diag(c.rates, SystemKind::Map);
  if (is_point_set_system(c.system)) throw ConfigError("system '" + c.system + "' is a point set, not a dynamical system");
  throw ConfigError("unknown system '" + c.system + "'");
}

inline Vector default_x0(const RunConfig& c, const SystemDef& sys) {
  if (!c.x0.empty()) {
    if (c.x0.size() != sys.state_dim) throw ConfigError("--x0 has the wrong length for " + sys.name);
    return c.x0;
  }
  if (sys.name == "lorenz") return lorenz_initial_state(c.seed, 1e-3);
  if (sys.name == "henon") return {0.1, 0.1};
  return Vector(sys.state_dim, 1.0);
}

inline json params_json(const SystemDef& sys) {
  json p = json::object();
  for (const auto& [k, v] : sys.params) p[k] = v;
  return p;
}

inline void validate(const RunConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be > 0");
  };
  positive(c.step, "step");
  if (!(c.warmup >= 0)) throw ConfigError("warmup must be >= 0");
  if (!(c.t >= 0)) throw ConfigError("t must be >= 0");
  if (c.record_every == 0) throw ConfigError("record-every must be >= 1");
  if (c.samples == 0 || c.rate_samples == 0 || c.points == 0 || c.identity_points == 0)
    throw ConfigError("sample counts must be >= 1");
  positive(c.sample_stride, "sample-stride");
  positive(c.point_stride, "point-stride");
  positive(c.horizon, "horizon");
  positive(c.identity_t, "identity-t");
  positive(c.length, "length");
  positive(c.resolution, "resolution");
  positive(c.min_per_cube, "min-per-cube");
  if (c.eps_max) positive(*c.eps_max, "eps-max");
  for (double h : c.horizons) positive(h, "horizons");
  for (double e : c.eps_list) positive(e, "eps");
  for (double tau : c.taus)
    if (!(tau >= 0)) throw ConfigError("taus must be >= 0");
  if (c.levels < 0) throw ConfigError("levels must be >= 0");
}

/// Applies one key (flag name without dashes) to the config.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& v) {
  auto as_size = [&](const std::string& s) {
    const double d = parse_number(s);
    if (!(d >= 0) || d != std::floor(d)) throw ConfigError(key + " must be a non-negative integer");
    return static_cast<std::size_t>(d);
  };
  if (key == "system") c.system = v;
  else if (key == "sigma" || key == "r" || key == "b" || key == "a") c.params[key] = parse_number(v);
  else if (key == "rates") c.rates = parse_list(v);
  else if (key == "step") c.step = parse_number(v);
  else if (key == "warmup") c.warmup = parse_number(v);
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(as_size(v));
  else if (key == "out") c.out = v;
  else if (key == "t") c.t = parse_number(v);
  else if (key == "x0") c.x0 = parse_list(v);
  else if (key == "record-every") c.record_every = as_size(v);
  else if (key == "samples") c.samples = as_size(v);
  else if (key == "horizons") c.horizons = parse_list(v);
  else if (key == "sample-stride") c.sample_stride = parse_number(v);
  else if (key == "points") c.points = as_size(v);
  else if (key == "point-stride") c.point_stride = parse_number(v);
  else if (key == "levels") c.levels = static_cast<int>(as_size(v));
  else if (key == "eps-max") c.eps_max = parse_number(v);
  else if (key == "eps") c.eps_list = parse_list(v);
  else if (key == "min-per-cube") c.min_per_cube = parse_number(v);
  else if (key == "anchors") c.anchors = as_size(v);
  else if (key == "d") c.d_values = parse_list(v);
  else if (key == "rate-samples") c.rate_samples = as_size(v);
  else if (key == "horizon") c.horizon = parse_number(v);
  else if (key == "identity-t") c.identity_t = parse_number(v);
  else if (key == "identity-points") c.identity_points = as_size(v);
  else if (key == "taus") c.taus = parse_list(v);
  else if (key == "length") c.length = parse_number(v);
  else if (key == "resolution") c.resolution = parse_number(v);
  else if (key == "center") c.center = parse_list(v);
  else if (key == "direction") c.direction = parse_list(v);
  else if (key == "vertex-budget") c.vertex_budget = as_size(v);
  else throw ConfigError("unknown setting '" + key + "'");
}

inline const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys{
      "system",  "sigma",        "r",       "b",          "a",        "rates",        "step",
      "warmup",  "seed",         "out",     "t",          "x0",       "record-every", "samples",
      "horizons", "sample-stride", "points", "point-stride", "levels", "eps-max",      "eps",
      "min-per-cube", "anchors",  "d",       "rate-samples", "horizon", "identity-t", "identity-points",
      "taus",    "length",       "resolution", "center",   "direction", "vertex-budget"};
  return keys;
}

inline std::string json_value_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ",") + json_value_text(e);
    return s;
  }
  if (v.is_number_integer() || v.is_number_unsigned()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    std::ostringstream os;
    os << std::setprecision(17) << v.get<double>();
    return os.str();
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  throw ConfigError("unsupported config value " + v.dump());
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "command") continue;
    if (key == "plot") c.plot = value.get<bool>();
    else if (key == "numerics") c.numerics = value.get<bool>();
    else if (key == "params" && value.is_object()) {
      for (const auto& [pk, pv] : value.items()) apply_setting(c, pk, json_value_text(pv));
    } else apply_setting(c, key, json_value_text(value));
  }
}

// ---------------------------------------------------------------------------
// Files

/// Writes through a temporary file in the same directory, then renames.
inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << content;
    if (!os) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// Attractor samples cached as CSV (t,x1..xn) plus a JSON sidecar holding the
/// key; the file name is a hash of (system, params, x0, step, t, seed, stride).
inline PointSet cached_attractor(const RunConfig& c, const SystemDef& sys, std::size_t count, double stride,
                                 json* provenance) {
  const Vector x0 = default_x0(c, sys);
  json key;
  key["system"] = sys.name;
  key["params"] = params_json(sys);
  key["x0"] = x0;
  key["step"] = c.step;
  key["warmup"] = c.warmup;
  key["t"] = c.warmup + static_cast<double>(count - 1) * stride;
  key["stride"] = stride;
  key["count"] = count;
  key["seed"] = c.seed;
  const std::string id = hex64(fnv1a(key.dump()));
  const fs::path dir = fs::path(c.out) / "cache";
  const fs::path csv = dir / (id + ".csv");
  const fs::path side = dir / (id + ".json");
  if (provenance) *provenance = key;

  if (fs::exists(csv) && fs::exists(side)) {
    std::ifstream sj(side);
    json stored = json::parse(sj, nullptr, false);
    if (!stored.is_discarded() && stored == key) {
      std::ifstream in(csv);
      std::string line;
      std::getline(in, line);
      std::vector<double> coords;
      coords.reserve(count * sys.state_dim);
      std::size_t rows = 0;
      while (std::getline(in, line)) {
        auto vals = parse_list(line);
        if (vals.size() != sys.state_dim + 1) break;
        coords.insert(coords.end(), vals.begin() + 1, vals.end());
        ++rows;
      }
      if (rows == count) return PointSet(sys.state_dim, std::move(coords), sys.name + "-attractor");
    }
  }
  PointSet ps = sample_attractor(sys, x0, c.warmup, count, stride, c.step);
  std::ostringstream os;
  os << "t";
  for (std::size_t i = 1; i <= sys.state_dim; ++i) os << ",x" << i;
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    os << c.warmup + static_cast<double>(i) * stride;
    for (double v : ps.point(i)) os << ',' << v;
    os << '\n';
  }
  write_atomic(csv, os.str());
  write_atomic(side, dump(key));
  return ps;
}

// ---------------------------------------------------------------------------
// SVG

inline std::string loglog_svg(const CountTable& t, const DimensionFit& fit, const std::string& title) {
  const double w = 480, h = 360, m = 50;
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : t.rows)
    if (r.count > 0) pts.emplace_back(-std::log(r.eps), std::log(static_cast<double>(r.count)));
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (auto [x, y] : pts) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  if (pts.empty()) x0 = y0 = 0, x1 = y1 = 1;
  if (x1 - x0 < 1e-12) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) y1 = y0 + 1;
  auto sx = [&](double x) { return m + (x - x0) / (x1 - x0) * (w - 2 * m); };
  auto sy = [&](double y) { return h - m - (y - y0) / (y1 - y0) * (h - 2 * m); };
  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">ln(1/eps)</text>\n";
  os << "<text x=\"14\" y=\"" << h / 2 << "\" transform=\"rotate(-90 14 " << h / 2
     << ")\" text-anchor=\"middle\">ln N</text>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\">" << title << " slope " << fit.slope
     << "</text>\n";
  for (auto [x, y] : pts)
    os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"steelblue\"/>\n";
  const double fx0 = -std::log(fit.eps_max), fx1 = -std::log(fit.eps_min);
  os << "<polyline fill=\"none\" stroke=\"crimson\" points=\"" << sx(fx0) << ',' << sy(fit.intercept + fit.slope * fx0)
     << ' ' << sx(fx1) << ',' << sy(fit.intercept + fit.slope * fx1) << "\"/>\n";
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Analyses. Each returns its JSON artifact and writes files under c.out.

inline json fit_json(const DimensionFit& f) {
  json j;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["r2"] = f.r2;
  j["eps_min"] = f.eps_min;
  j["eps_max"] = f.eps_max;
  j["rows_used"] = f.rows_used;
  return j;
}

inline json base_settings(const RunConfig& c) {
  json s;
  s["system"] = c.system;
  s["step"] = c.step;
  s["warmup"] = c.warmup;
  s["seed"] = c.seed;
  return s;
}

inline json run_simulate(const RunConfig& c) {
  const SystemDef sys = make_system(c);
  const Vector x0 = default_x0(c, sys);
  Trajectory tr = integrate(sys, x0, c.t, c.step, c.record_every);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  const fs::path out = fs::path(c.out) / "trajectory.csv";
  write_atomic(out, os.str());
  json j;
  j["command"] = "simulate";
  j["settings"] = base_settings(c);
  j["settings"]["params"] = params_json(sys);
  j["settings"]["x0"] = x0;
  j["settings"]["t"] = c.t;
  j["settings"]["record_every"] = c.record_every;
  j["rows"] = tr.size();
  j["final_state"] = tr.final_state();
  j["trajectory_csv"] = out.string();
  j["warnings"] = sys.warnings;
  return j;
}

inline json run_lyap_dim(const RunConfig& c) {
  const SystemDef sys = make_system(c);
  json prov;
  const double stride = sys.kind == SystemKind::Map ? std::max(1.0, std::round(c.sample_stride)) : c.sample_stride;
  RunConfig cc = c;
  if (sys.kind == SystemKind::Map) {
    cc.warmup = std::round(c.warmup);
  }
  PointSet samples = cached_attractor(cc, sys, c.samples, stride, &prov);
  std::vector<double> horizons = c.horizons;
  if (sys.kind == SystemKind::Map)
    for (auto& h : horizons) h = std::max(1.0, std::round(h));
  auto res = lyapunov_dim_on_set(sys, samples, horizons, c.step);
  std::ostringstream os;
  write_lyapunov_table_csv(os, res);
  const fs::path table = fs::path(c.out) / "lyap-dim.csv";
  write_atomic(table, os.str());
  json j;
  j["command"] = "lyap-dim";
  j["value"] = res.value;
  j["argmax_sample"] = res.argmax_sample;
  j["sample_count"] = res.sample_count;
  j["horizons"] = res.horizons;
  json per_h = json::array();
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    double mx = -1;
    for (std::size_t i = 0; i < res.sample_count; ++i) mx = std::max(mx, res.table[i * horizons.size() + k].dim.value);
    per_h.push_back({{"horizon", horizons[k]}, {"sup_dim", mx}});
  }
  j["sup_by_horizon"] = per_h;
  j["settings"] = base_settings(c);
  j["settings"]["params"] = params_json(sys);
  j["settings"]["sample_stride"] = stride;
  j["settings"]["samples"] = prov;
  j["table_csv"] = table.string();
  return j;
}

struct BoxInput {
  PointSet points;
  std::vector<double> eps;  // empty: halving ladder to the sampling floor
  json provenance;
};

inline BoxInput box_input(const RunConfig& c) {
  BoxInput in;
  if (is_point_set_system(c.system)) {
    // The set is built two levels finer than the finest cube so that no cube
    // is reached only through its corners.
    const FractalKind kind = parse_fractal_kind(c.system);
    const int set_level = std::min(c.levels + 2, max_fractal_level(kind));
    const int scales = std::min(c.levels, set_level);
    in.points = fractal_points(kind, set_level);
    in.provenance = {{"kind", c.system}, {"scales", scales}, {"set_level", set_level}, {"points", in.points.size()}};
    if (c.eps_list.empty()) {
      const double base = kind == FractalKind::Cantor ? 3.0 : 2.0;
      for (int m = 1; m <= scales; ++m) in.eps.push_back(std::pow(base, -m) / 2.0);
    }
  } else {
    const SystemDef sys = make_system(c);
    const double stride = sys.kind == SystemKind::Map ? std::max(1.0, std::round(c.point_stride)) : c.point_stride;
    RunConfig cc = c;
    if (sys.kind == SystemKind::Map) cc.warmup = std::round(c.warmup);
    in.points = cached_attractor(cc, sys, c.points, stride, &in.provenance);
  }
  if (!c.eps_list.empty()) in.eps = c.eps_list;
  return in;
}

inline double default_eps_max(const PointSet& ps) {
  double extent = 0;
  for (std::size_t a = 0; a < ps.dim(); ++a) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      lo = std::min(lo, ps.point(i)[a]);
      hi = std::max(hi, ps.point(i)[a]);
    }
    extent = std::max(extent, hi - lo);
  }
  if (extent <= 0) return 1.0;
  return std::ldexp(1.0, static_cast<int>(std::floor(std::log2(extent / 4.0))));
}

inline json run_box_dim(const RunConfig& c) {
  BoxInput in = box_input(c);
  CountTable table;
  if (in.eps.empty()) {
    const double top = c.eps_max ? *c.eps_max : default_eps_max(in.points);
    table = count_scales_to_floor(in.points, top, c.min_per_cube);
  } else {
    table = count_scales(in.points, in.eps);
  }
  DimensionFit fit = dim_fit(table);

  // Jittered anchors: offset u * 2 * eps_first, u uniform in [0, 1)^n.
  std::mt19937_64 rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
  json anchors = json::array();
  double smin = fit.slope, smax = fit.slope;
  std::vector<double> used_eps;
  for (const auto& r : table.rows) used_eps.push_back(r.eps);
  for (std::size_t k = 0; k < c.anchors; ++k) {
    Vector anchor(in.points.dim());
    for (double& v : anchor) v = unit_uniform(rng) * 2.0 * used_eps.front();
    auto jt = count_scales(in.points, used_eps, anchor);
    json rowj = json::array();
    for (const auto& r : jt.rows) rowj.push_back(r.count);
    json a;
    a["anchor"] = anchor;
    a["counts"] = rowj;
    try {
      const double s = dim_fit(jt).slope;
      a["slope"] = s;
      smin = std::min(smin, s);
      smax = std::max(smax, s);
    } catch (const InsufficientDataError&) {
      a["slope"] = nullptr;
    }
    anchors.push_back(a);
  }

  std::ostringstream os;
  std::vector<double> ds = c.d_values.empty() ? std::vector<double>{fit.slope} : c.d_values;
  write_count_table_csv(os, table, ds);
  const fs::path csv = fs::path(c.out) / "box-dim.csv";
  write_atomic(csv, os.str());

  json j;
  j["command"] = "box-dim";
  j["fit"] = fit_json(fit);
  j["slope"] = fit.slope;
  json rows = json::array();
  for (const auto& r : table.rows) rows.push_back({{"eps", r.eps}, {"side", 2 * r.eps}, {"N", r.count}});
  j["counts"] = rows;
  j["anchors"] = anchors;
  j["anchor_slope_spread"] = smax - smin;
  j["settings"] = base_settings(c);
  j["settings"]["points"] = in.provenance;
  j["settings"]["min_points_per_cube"] = c.min_per_cube;
  j["settings"]["cube_side_is_2eps"] = true;
  j["count_csv"] = csv.string();
  if (c.plot) {
    const fs::path svg = fs::path(c.out) / "box-dim.svg";
    write_atomic(svg, loglog_svg(table, fit, c.system));
    j["plot_svg"] = svg.string();
  }
  return j;
}

inline json run_lorenz_bound(const RunConfig& c) {
  if (c.system != "lorenz") throw ConfigError("lorenz-bound needs --system lorenz");
  const double sigma = param_or(c, "sigma", 10.0), r = param_or(c, "r", 28.0), b = param_or(c, "b", 8.0 / 3.0);
  auto v = lorenz_dim_formula(sigma, r, b);
  json j;
  j["command"] = "lorenz-bound";
  j["params"] = {{"sigma", sigma}, {"r", r}, {"b", b}};
  j["ratio"] = v.ratio;
  j["outcome"] = v.stable ? "stable" : "dimension";
  if (v.dimension) j["dimension"] = *v.dimension;
  else j["dimension"] = nullptr;
  j["warnings"] = v.warnings;
  if (c.numerics && !v.stable) {
    auto a = estimate_a(sigma, r, b, c.rate_samples, c.horizon, c.step, c.seed);
    j["a_estimate"] = a.value;
    j["horizon"] = a.horizon;
    j["a_samples"] = a.sample_count;
    j["hl_bound"] = hl_bound_from_a(a.value, sigma, b);
    AttractorSampling cfg;
    cfg.seed = c.seed;
    cfg.step = c.step;
    cfg.warmup = c.warmup;
    auto pts = sample_lorenz_attractor(sigma, r, b, c.identity_points, cfg);
    double worst = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      worst = std::max(worst, volume_identity_residual(sigma, r, b, pts.point(i), c.identity_t, c.step));
    j["identity_residual"] = worst;
    j["identity_t"] = c.identity_t;
    j["identity_points"] = c.identity_points;
  } else {
    j["a_estimate"] = nullptr;
    j["horizon"] = c.horizon;
    j["hl_bound"] = nullptr;
    j["identity_residual"] = nullptr;
  }
  j["settings"] = base_settings(c);
  j["settings"]["rate_samples"] = c.rate_samples;
  j["settings"]["numerics"] = c.numerics;
  return j;
}

inline json run_stretch(const RunConfig& c) {
  const SystemDef sys = make_system(c);
  if (sys.kind != SystemKind::Flow) throw ConfigError("stretch needs a flow");
  Curve seg;
  if (!c.center.empty() || !c.direction.empty()) {
    if (c.center.empty() || c.direction.empty()) throw ConfigError("--center and --direction go together");
    seg = transverse_segment(sys, c.center, c.direction, c.length, c.resolution);
  } else if (sys.name == "lorenz") {
    SegmentPlacement p;
    p.length = c.length;
    p.resolution = c.resolution;
    p.seed = c.seed;
    p.warmup = c.warmup;
    p.step = c.step;
    seg = default_lorenz_segment(sys, p);
  } else {
    throw ConfigError("stretch on '" + sys.name + "' needs --center and --direction");
  }
  auto fit = stretch_rate(sys, seg, c.taus, c.step, c.vertex_budget);
  Curve last = evolve_curve(sys, seg, c.taus.back(), c.step, c.vertex_budget);
  std::ostringstream os;
  write_curve_csv(os, last);
  const fs::path csv = fs::path(c.out) / "stretch-curve.csv";
  write_atomic(csv, os.str());

  json j;
  j["command"] = "stretch";
  j["segment"] = {{"start", seg.points.front()}, {"end", seg.points.back()}, {"length", curve_length(seg)},
                  {"resolution", seg.resolution}};
  j["taus"] = fit.taus;
  j["lengths"] = fit.lengths;
  j["vertices"] = fit.vertices;
  j["rate"] = fit.rate;
  j["r2"] = fit.r2;
  if (sys.name == "lorenz" && c.numerics) {
    auto inf = inf_alpha1_rate(sys.param("sigma"), sys.param("r"), sys.param("b"), c.rate_samples, c.horizon, c.step,
                               c.seed);
    j["inf_alpha1_rate"] = inf.value;
    j["inf_alpha1_tau"] = inf.horizon;
    j["inf_alpha1_samples"] = inf.sample_count;
  }
  j["settings"] = base_settings(c);
  j["settings"]["params"] = params_json(sys);
  j["curve_csv"] = csv.string();
  return j;
}

inline json load_artifact(const RunConfig& c, const std::string& name) {
  const fs::path p = fs::path(c.out) / (name + ".json");
  std::ifstream in(p);
  if (!in) throw DependencyError("report: missing artifact '" + name + "' (" + p.string() + "); run `attrdim " + name + "` first");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DependencyError("report: artifact '" + name + "' is not valid JSON");
  return j;
}

inline json run_report(const RunConfig& c) {
  json rep;
  rep["command"] = "report";
  rep["settings"] = base_settings(c);
  const bool point_set = is_point_set_system(c.system);
  auto stage = [&](const std::string& name, auto&& compute) -> json {
    if (c.from_artifacts) return load_artifact(c, name);
    json j = compute();
    write_atomic(fs::path(c.out) / (name + ".json"), dump(j));
    return j;
  };

  json box = stage("box-dim", [&] { return run_box_dim(c); });
  rep["box_dimension"] = {{"value", box["slope"]}, {"fit", box["fit"]}, {"settings", box["settings"]}};

  if (point_set) {
    rep["lyapunov_dimension"] = {{"status", "not-applicable"}, {"reason", "point set has no dynamics"}};
    rep["closed_form"] = {{"status", "not-applicable"}};
    rep["a_estimate"] = {{"status", "not-applicable"}};
    rep["hl_bound"] = {{"status", "not-applicable"}};
    rep["stretch"] = {{"status", "not-applicable"}};
    rep["checks"] = json::object();
    return rep;
  }

  json lyap = stage("lyap-dim", [&] { return run_lyap_dim(c); });
  rep["lyapunov_dimension"] = {{"value", lyap["value"]}, {"sup_by_horizon", lyap["sup_by_horizon"]},
                               {"settings", lyap["settings"]}};
  json checks;
  const double box_v = box["slope"].get<double>();
  const double lyap_v = lyap["value"].get<double>();
  checks["box_le_lyapunov_plus_0.05"] = box_v <= lyap_v + 0.05;

  if (c.system == "lorenz") {
    json lb = stage("lorenz-bound", [&] { return run_lorenz_bound(c); });
    rep["closed_form"] = {{"ratio", lb["ratio"]}, {"outcome", lb["outcome"]}, {"dimension", lb["dimension"]},
                          {"params", lb["params"]}};
    rep["a_estimate"] = {{"value", lb["a_estimate"]}, {"horizon", lb["horizon"]},
                         {"samples", lb.value("a_samples", json())}, {"settings", lb["settings"]}};
    rep["hl_bound"] = {{"value", lb["hl_bound"]}, {"from_a", lb["a_estimate"]}};
    rep["identity_residual"] = {{"value", lb["identity_residual"]}, {"t", lb.value("identity_t", json())}};
    json st = stage("stretch", [&] { return run_stretch(c); });
    rep["stretch"] = {{"rate", st["rate"]},          {"r2", st["r2"]},
                      {"taus", st["taus"]},          {"lengths", st["lengths"]},
                      {"inf_alpha1_rate", st.value("inf_alpha1_rate", json())},
                      {"settings", st["settings"]}};
    if (lb["dimension"].is_number()) {
      const double cf = lb["dimension"].get<double>();
      checks["lyapunov_le_closed_form_plus_0.05"] = lyap_v <= cf + 0.05;
      checks["box_le_closed_form_plus_0.05"] = box_v <= cf + 0.05;
    }
  } else {
    rep["closed_form"] = {{"status", "not-applicable"}, {"reason", "closed form is Lorenz-specific"}};
    rep["a_estimate"] = {{"status", "not-applicable"}};
    rep["hl_bound"] = {{"status", "not-applicable"}};
    rep["stretch"] = {{"status", "not-applicable"}};
  }
  rep["checks"] = checks;
  return rep;
}

// ---------------------------------------------------------------------------
// Entry point

inline int error_exit(std::ostream& out, int code, const std::string& kind, const std::string& msg) {
  json e;
  e["error"] = {{"kind", kind}, {"message", msg}, {"exit_code", code}};
  out << dump(e);
  return code;
}

inline RunConfig parse_args(std::vector<std::string> args) {
  CLI::App app{"attrdim: attractor dimension estimates"};
  app.require_subcommand(1);
  std::map<std::string, std::string> raw;
  std::string config_path;
  bool no_numerics = false, no_plot = false, from_artifacts = false;
  std::map<std::string, CLI::Option*> opts;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "integrate a trajectory and write it as CSV"},
      {"lyap-dim", "Lyapunov dimension over attractor samples"},
      {"box-dim", "grid-covering counts and dimension fit"},
      {"lorenz-bound", "closed-form Lorenz dimension and numeric bounds"},
      {"stretch", "curve length growth under the flow"},
      {"report", "combined report"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    for (const auto& key : setting_keys()) opts[name + ":" + key] = sub->add_option("--" + key, raw[key]);
    sub->add_option("--config", config_path, "JSON config file; flags override it");
    sub->add_flag("--no-numerics", no_numerics, "skip the sampled estimates");
    sub->add_flag("--no-plot", no_plot, "do not write the SVG plot");
    sub->add_flag("--from-artifacts", from_artifacts, "report: assemble from existing artifacts only");
    subs.push_back(sub);
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    throw ConfigError(app.help());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  RunConfig c;
  for (auto* sub : subs)
    if (sub->parsed()) c.command = sub->get_name();
  if (!config_path.empty()) apply_config_file(c, config_path);
  for (const auto& key : setting_keys())
    if (opts[c.command + ":" + key]->count() > 0) apply_setting(c, key, raw[key]);
  if (no_numerics) c.numerics = false;
  if (no_plot) c.plot = false;
  c.from_artifacts = from_artifacts;
  validate(c);
  return c;
}

inline int run(const std::vector<std::string>& args, std::ostream& out) {
  try {
    RunConfig c = parse_args(args);
    json result;
    if (c.command == "simulate") result = run_simulate(c);
    else if (c.command == "lyap-dim") result = run_lyap_dim(c);
    else if (c.command == "box-dim") result = run_box_dim(c);
    else if (c.command == "lorenz-bound") result = run_lorenz_bound(c);
    else if (c.command == "stretch") result = run_stretch(c);
    else result = run_report(c);
    write_atomic(fs::path(c.out) / (c.command + ".json"), dump(result));
    out << dump(result);
    return kOk;
  } catch (const ConfigError& e) {
    return error_exit(out, kConfigError, "config", e.what());
  } catch (const DivergenceError& e) {
    return error_exit(out, kDivergence, "divergence", e.what());
  } catch (const InsufficientDataError& e) {
    return error_exit(out, kInsufficientData, "insufficient-data", e.what());
  } catch (const DependencyError& e) {
    return error_exit(out, kDependency, "dependency", e.what());
  } catch (const BudgetError& e) {
    return error_exit(out, kBudget, "budget", e.what());
  } catch (const ArgumentError& e) {
    return error_exit(out, kConfigError, "argument", e.what());
  } catch (const std::exception& e) {
    return error_exit(out, kFailure, "failure", e.what());
  }
}

}  // namespace attrdim::cli
