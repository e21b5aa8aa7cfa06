#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "motsflow/geometry.hpp"
#include "motsflow/initial_data.hpp"
#include "motsflow/solver.hpp"

namespace motsflow {

/// Flat key/value run configuration with one section per module. Parsed from
/// "[section]" / "key = value" text; '#' starts a comment.
struct RunConfig {
  // [data]
  std::string family = "flat";
  int n = 2;
  double mass = 1.0;
  double trace_c = 0.0;
  double pinch_c = 3.0, pinch_r0 = 0.7, pinch_w = 0.2;
  std::string phi_file, a_file, b_file;

  // [grid]
  double r_in = 0.05, r_out = 1.0;
  int nodes = 2001;

  // [schedules]
  int s_steps = 10;
  double kappa0 = 1.0, kappa_ratio = 0.5;
  int kappa_steps = 20;
  double eps0 = 0.0;  // 0 = auto: min{1/((n+1) lambda), 1/2} / 2
  double eps_ratio = 0.5;
  int eps_steps = 8;

  // [tolerances]
  double newton_tol = 1e-10;
  double quad_tol = 1e-3;
  double mots_match = 0.01;

  // [solve]
  std::string inner_bc = "zero_flux";  // or "dirichlet_zero"

  // [oracle]
  double bracket_lo = 0.0, bracket_hi = 0.0;  // 0 = grid ends
  int scan_samples = 20000;

  // [flow]
  double flow_r0 = 0.0;    // 0 = r_out
  double flow_dt = 0.0;    // 0 = 1e-4 * r0
  double flow_t_max = 1.0;
  double guard_theta = 1e-6;

  // [barriers]
  double barrier_tau = 0.1;
  double barrier_delta = 1.0;
  double barrier_eps = 0.0;  // 0 = auto from the measured eps0
  double leaf_r = 0.0;       // 0 = argmin theta_plus when trapped

  // command line
  std::string subcommand;
  std::string out_dir = "out";
  bool serial = false;
  bool verbose = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

inline ConfigMap parse_config_text(std::istream& in) {
  ConfigMap out;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = detail::trim(line.substr(1, line.size() - 2));
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    out[section][detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return out;
}

inline RunConfig config_from_map(const ConfigMap& m, std::vector<std::string>* errors = nullptr) {
  RunConfig c;
  auto fail = [errors](const std::string& msg) {
    if (errors)
      errors->push_back(msg);
    else
      throw std::invalid_argument(msg);
  };
  static const std::map<std::string, std::vector<std::string>> known = {
      {"data", {"family", "n", "mass", "trace_c", "pinch_c", "pinch_r0", "pinch_w", "phi_file",
                "a_file", "b_file"}},
      {"grid", {"r_in", "r_out", "nodes"}},
      {"schedules",
       {"s_steps", "kappa0", "kappa_ratio", "kappa_steps", "eps0", "eps_ratio", "eps_steps"}},
      {"tolerances", {"newton_tol", "quad_tol", "mots_match"}},
      {"solve", {"inner_bc"}},
      {"oracle", {"bracket_lo", "bracket_hi", "scan_samples"}},
      {"flow", {"r0", "dt", "t_max", "guard_theta"}},
      {"barriers", {"tau", "delta", "eps", "leaf_r"}},
  };
  for (const auto& [section, kv] : m) {
    const auto it = known.find(section);
    if (it == known.end()) {
      fail("unknown config section [" + section + "]");
      continue;
    }
    for (const auto& [key, value] : kv) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        fail("unknown key '" + key + "' in section [" + section + "]");
      (void)value;
    }
  }
  auto get = [&m](const std::string& sec, const std::string& key) -> std::optional<std::string> {
    const auto s = m.find(sec);
    if (s == m.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  };
  auto num = [&](const std::string& sec, const std::string& key, double& dst) {
    if (auto v = get(sec, key)) {
      try {
        std::size_t used = 0;
        dst = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument("");
      } catch (...) {
        fail(sec + "." + key + ": not a number: '" + *v + "'");
      }
    }
  };
  auto integer = [&](const std::string& sec, const std::string& key, int& dst) {
    double d = dst;
    num(sec, key, d);
    dst = static_cast<int>(std::llround(d));
  };
  auto str = [&](const std::string& sec, const std::string& key, std::string& dst) {
    if (auto v = get(sec, key)) dst = *v;
  };

  str("data", "family", c.family);
  integer("data", "n", c.n);
  num("data", "mass", c.mass);
  num("data", "trace_c", c.trace_c);
  num("data", "pinch_c", c.pinch_c);
  num("data", "pinch_r0", c.pinch_r0);
  num("data", "pinch_w", c.pinch_w);
  str("data", "phi_file", c.phi_file);
  str("data", "a_file", c.a_file);
  str("data", "b_file", c.b_file);
  num("grid", "r_in", c.r_in);
  num("grid", "r_out", c.r_out);
  integer("grid", "nodes", c.nodes);
  integer("schedules", "s_steps", c.s_steps);
  num("schedules", "kappa0", c.kappa0);
  num("schedules", "kappa_ratio", c.kappa_ratio);
  integer("schedules", "kappa_steps", c.kappa_steps);
  num("schedules", "eps0", c.eps0);
  num("schedules", "eps_ratio", c.eps_ratio);
  integer("schedules", "eps_steps", c.eps_steps);
  num("tolerances", "newton_tol", c.newton_tol);
  num("tolerances", "quad_tol", c.quad_tol);
  num("tolerances", "mots_match", c.mots_match);
  str("solve", "inner_bc", c.inner_bc);
  num("oracle", "bracket_lo", c.bracket_lo);
  num("oracle", "bracket_hi", c.bracket_hi);
  integer("oracle", "scan_samples", c.scan_samples);
  num("flow", "r0", c.flow_r0);
  num("flow", "dt", c.flow_dt);
  num("flow", "t_max", c.flow_t_max);
  num("flow", "guard_theta", c.guard_theta);
  num("barriers", "tau", c.barrier_tau);
  num("barriers", "delta", c.barrier_delta);
  num("barriers", "eps", c.barrier_eps);
  num("barriers", "leaf_r", c.leaf_r);
  return c;
}

inline RunConfig load_config(const std::string& path, std::vector<std::string>* errors = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  const ConfigMap m = parse_config_text(in);
  return config_from_map(m, errors);
}

inline DataFamily family_from_config(const RunConfig& c) {
  DataFamily f;
  f.n = c.n;
  f.r_in = c.r_in;
  f.r_out = c.r_out;
  if (c.family == "flat") {
    f.tag = FamilyTag::flat;
  } else if (c.family == "schwarzschild_isotropic") {
    f.tag = FamilyTag::schwarzschild_isotropic;
    f.mass = c.mass;
  } else if (c.family == "constant_trace") {
    f.tag = FamilyTag::constant_trace;
    f.trace_c = c.trace_c;
  } else if (c.family == "gaussian_pinch") {
    f.tag = FamilyTag::gaussian_pinch;
    f.pinch_c = c.pinch_c;
    f.pinch_r0 = c.pinch_r0;
    f.pinch_w = c.pinch_w;
  } else if (c.family == "custom") {
    f.tag = FamilyTag::custom;
    if (!c.phi_file.empty()) f.custom_phi = spline_profile(load_profile_table(c.phi_file));
    if (!c.a_file.empty()) {
      auto s = load_profile_table(c.a_file);
      f.custom_a = [s](double r) { return s->eval(r); };
    }
    if (!c.b_file.empty()) {
      auto s = load_profile_table(c.b_file);
      f.custom_b = [s](double r) { return s->eval(r); };
    }
  } else {
    throw std::invalid_argument("data.family: unknown family '" + c.family + "'");
  }
  return f;
}

inline double resolved_eps0(const RunConfig& c, const InitialDataSet& data) {
  return c.eps0 > 0.0 ? c.eps0 : 0.5 * eps_gate(data);
}

/// Field-level validation; an empty list means the config is runnable.
inline std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> v;
  if (c.n < 1) v.push_back("data.n: dimension must be >= 1");
  if (!(c.r_in > 0.0)) v.push_back("grid.r_in: must be > 0");
  if (!(c.r_out > c.r_in)) v.push_back("grid.r_out: must exceed r_in");
  if (c.nodes < 16) v.push_back("grid.nodes: need at least 16 nodes");
  if (c.s_steps < 1) v.push_back("schedules.s_steps: must be >= 1");
  if (!(c.kappa0 > 0.0)) v.push_back("schedules.kappa0: must be > 0");
  if (!(c.kappa_ratio > 0.0 && c.kappa_ratio < 1.0))
    v.push_back("schedules.kappa_ratio: must lie in (0, 1)");
  if (c.kappa_steps < 1) v.push_back("schedules.kappa_steps: must be >= 1");
  if (!(c.eps_ratio > 0.0 && c.eps_ratio < 1.0))
    v.push_back("schedules.eps_ratio: must lie in (0, 1)");
  if (c.eps_steps < 1) v.push_back("schedules.eps_steps: must be >= 1");
  if (!(c.newton_tol > 0.0)) v.push_back("tolerances.newton_tol: must be > 0");
  if (!(c.quad_tol > 0.0)) v.push_back("tolerances.quad_tol: must be > 0");
  if (!(c.mots_match > 0.0)) v.push_back("tolerances.mots_match: must be > 0");
  if (c.inner_bc != "zero_flux" && c.inner_bc != "dirichlet_zero")
    v.push_back("solve.inner_bc: must be zero_flux or dirichlet_zero");
  if (!(c.guard_theta > 0.0)) v.push_back("flow.guard_theta: must be > 0");
  if (!(c.barrier_tau > 0.0 && c.barrier_tau < 0.5))
    v.push_back("barriers.tau: must lie in (0, 1/2)");
  if (!(c.barrier_delta > 0.0 && c.barrier_delta <= 1.0))
    v.push_back("barriers.delta: must lie in (0, 1]");
  if (!v.empty()) return v;

  InitialDataSet data;
  try {
    data = make_dataset(family_from_config(c));
  } catch (const std::exception& e) {
    v.push_back(std::string("data: ") + e.what());
    return v;
  }
  const double lambda = eigen_bound(data);
  const double eps0 = resolved_eps0(c, data);
  if (eps0 > 0.5)
    v.push_back("schedules.eps0: eps = " + std::to_string(eps0) + " > 1/2");
  if (lambda > 0.0 && eps0 > 1.0 / ((c.n + 1) * lambda) * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "schedules.eps0: eps = " << eps0 << " > 1/((n+1)lambda) = "
        << 1.0 / ((c.n + 1) * lambda);
    v.push_back(msg.str());
  }
  const SphereGeometry outer = sphere_geometry(data, c.r_out);
  if (!(outer.theta_plus > 0.0) || !(outer.H > 0.0))
    v.push_back("grid.r_out: outer boundary not outer untrapped (needs theta_plus > 0 and H > 0)");
  return v;
}

}  // namespace motsflow
