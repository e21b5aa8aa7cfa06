#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "motsflow/barriers.hpp"
#include "motsflow/config.hpp"
#include "motsflow/geometry.hpp"
#include "motsflow/initial_data.hpp"
#include "motsflow/operators.hpp"
#include "motsflow/oracle.hpp"
#include "motsflow/solver.hpp"

namespace motsflow {

struct RunSummary {
  int format_version = 1;
  std::string subcommand;
  std::string status = "ok";  // ok | continuation_failure | invalid
  std::optional<double> mots_radius_detected;
  std::optional<double> mots_radius_oracle;
  std::optional<double> rel_error;
  bool sup_bound_ok = true;
  bool integral_ok = true;
  double integral_lhs = 0.0;
  double integral_rhs = 0.0;
  int s_steps = 0;
  std::vector<double> eps_values;
  std::vector<double> kappa_values;
  std::vector<double> cauchy_traces;
  std::map<std::string, std::string> config_echo;
  double timing_seconds = 0.0;  // stdout report only, never serialized

  bool operator==(const RunSummary& o) const {
    return format_version == o.format_version && subcommand == o.subcommand &&
           status == o.status && mots_radius_detected == o.mots_radius_detected &&
           mots_radius_oracle == o.mots_radius_oracle && rel_error == o.rel_error &&
           sup_bound_ok == o.sup_bound_ok && integral_ok == o.integral_ok &&
           integral_lhs == o.integral_lhs && integral_rhs == o.integral_rhs &&
           s_steps == o.s_steps && eps_values == o.eps_values &&
           kappa_values == o.kappa_values && cauchy_traces == o.cauchy_traces &&
           config_echo == o.config_echo;
  }
};

namespace detail {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline nlohmann::json opt_to_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> opt_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json j;
  j["format_version"] = s.format_version;
  j["subcommand"] = s.subcommand;
  j["status"] = s.status;
  j["mots_radius_detected"] = detail::opt_to_json(s.mots_radius_detected);
  j["mots_radius_oracle"] = detail::opt_to_json(s.mots_radius_oracle);
  j["rel_error"] = detail::opt_to_json(s.rel_error);
  j["sup_bound_ok"] = s.sup_bound_ok;
  j["integral_ok"] = s.integral_ok;
  j["integral_lhs"] = s.integral_lhs;
  j["integral_rhs"] = s.integral_rhs;
  j["schedules"] = {{"s_steps", s.s_steps}, {"eps", s.eps_values}, {"kappa", s.kappa_values}};
  j["cauchy_traces"] = s.cauchy_traces;
  j["config"] = s.config_echo;
  return j;
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  s.format_version = j.at("format_version").get<int>();
  s.subcommand = j.at("subcommand").get<std::string>();
  s.status = j.at("status").get<std::string>();
  s.mots_radius_detected = detail::opt_from_json(j.at("mots_radius_detected"));
  s.mots_radius_oracle = detail::opt_from_json(j.at("mots_radius_oracle"));
  s.rel_error = detail::opt_from_json(j.at("rel_error"));
  s.sup_bound_ok = j.at("sup_bound_ok").get<bool>();
  s.integral_ok = j.at("integral_ok").get<bool>();
  s.integral_lhs = j.at("integral_lhs").get<double>();
  s.integral_rhs = j.at("integral_rhs").get<double>();
  s.s_steps = j.at("schedules").at("s_steps").get<int>();
  s.eps_values = j.at("schedules").at("eps").get<std::vector<double>>();
  s.kappa_values = j.at("schedules").at("kappa").get<std::vector<double>>();
  s.cauchy_traces = j.at("cauchy_traces").get<std::vector<double>>();
  s.config_echo = j.at("config").get<std::map<std::string, std::string>>();
  return s;
}

inline std::map<std::string, std::string> config_echo(const RunConfig& c) {
  using detail::fmt17;
  std::map<std::string, std::string> e;
  e["data.family"] = c.family;
  e["data.n"] = std::to_string(c.n);
  if (c.family == "schwarzschild_isotropic") e["data.mass"] = fmt17(c.mass);
  if (c.family == "constant_trace") e["data.trace_c"] = fmt17(c.trace_c);
  if (c.family == "gaussian_pinch") {
    e["data.pinch_c"] = fmt17(c.pinch_c);
    e["data.pinch_r0"] = fmt17(c.pinch_r0);
    e["data.pinch_w"] = fmt17(c.pinch_w);
  }
  if (!c.phi_file.empty()) e["data.phi_file"] = c.phi_file;
  if (!c.a_file.empty()) e["data.a_file"] = c.a_file;
  if (!c.b_file.empty()) e["data.b_file"] = c.b_file;
  e["grid.r_in"] = fmt17(c.r_in);
  e["grid.r_out"] = fmt17(c.r_out);
  e["grid.nodes"] = std::to_string(c.nodes);
  e["schedules.s_steps"] = std::to_string(c.s_steps);
  e["schedules.kappa0"] = fmt17(c.kappa0);
  e["schedules.kappa_ratio"] = fmt17(c.kappa_ratio);
  e["schedules.kappa_steps"] = std::to_string(c.kappa_steps);
  e["schedules.eps0"] = fmt17(c.eps0);
  e["schedules.eps_ratio"] = fmt17(c.eps_ratio);
  e["schedules.eps_steps"] = std::to_string(c.eps_steps);
  e["tolerances.newton_tol"] = fmt17(c.newton_tol);
  e["tolerances.quad_tol"] = fmt17(c.quad_tol);
  e["tolerances.mots_match"] = fmt17(c.mots_match);
  e["solve.inner_bc"] = c.inner_bc;
  return e;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MotsflowError("cannot write " + path.string());
  out << text;
}

inline void write_summary(const std::filesystem::path& dir, const RunSummary& s) {
  write_text(dir / "summary.json", summary_to_json(s).dump(2) + "\n");
}

inline InnerBc inner_bc_from(const RunConfig& c) {
  return c.inner_bc == "dirichlet_zero" ? InnerBc::dirichlet_zero : InnerBc::zero_flux;
}

inline int thread_budget(const RunConfig& c) {
  if (c.serial) return 1;
  if (const char* env = std::getenv("MOTSFLOW_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

struct PipelineBits {
  InitialDataSet data;
  RadialGrid grid;
  std::vector<double> eps_values;
  std::vector<double> kappa_values;
  NewtonOptions newton;
};

inline PipelineBits pipeline_bits(const RunConfig& c) {
  PipelineBits b;
  b.data = make_dataset(family_from_config(c));
  b.grid = RadialGrid(c.r_in, c.r_out, c.nodes);
  b.eps_values = GeometricSchedule{resolved_eps0(c, b.data), c.eps_ratio, c.eps_steps}.values();
  b.kappa_values = GeometricSchedule{c.kappa0, c.kappa_ratio, c.kappa_steps}.values();
  b.newton.tol = c.newton_tol;
  return b;
}

inline std::string solution_csv(const InitialDataSet& data, const RadialGrid& grid,
                                const Field& u_hat, double eps, double kappa) {
  const Field res = residual_capillarity(u_hat, {eps, kappa, 1.0}, data);
  const Field v = gradient_function(data, u_hat);
  std::string out = "r,uhat,u,residual,v\n";
  for (int i = 0; i < grid.nodes; ++i) {
    out += fmt17(grid.r(i)) + "," + fmt17(u_hat[i]) + "," + fmt17(eps * u_hat[i]) + "," +
           fmt17(res[i]) + "," + fmt17(v[i]) + "\n";
  }
  return out;
}

}  // namespace detail

inline int run_validate(const RunConfig& cfg, RunSummary* out = nullptr) {
  const std::vector<std::string> violations = validate(cfg);
  RunSummary s;
  s.subcommand = "validate";
  s.config_echo = config_echo(cfg);
  if (!violations.empty()) {
    s.status = "invalid";
    for (const auto& v : violations) std::fprintf(stderr, "config violation: %s\n", v.c_str());
  }
  if (out) *out = s;
  return violations.empty() ? 0 : 3;
}

inline int run_solve(const RunConfig& cfg, RunSummary* out = nullptr) {
  RunSummary s;
  s.subcommand = "solve";
  s.config_echo = config_echo(cfg);
  const std::vector<std::string> violations = validate(cfg);
  if (!violations.empty()) {
    for (const auto& v : violations) std::fprintf(stderr, "config violation: %s\n", v.c_str());
    s.status = "invalid";
    if (out) *out = s;
    return 3;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto bits = detail::pipeline_bits(cfg);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  s.s_steps = cfg.s_steps;
  s.eps_values = bits.eps_values;
  s.kappa_values = bits.kappa_values;

  EpsilonLimitResult res;
  try {
    res = epsilon_limit(bits.data, bits.grid, bits.eps_values, bits.kappa_values, cfg.s_steps,
                        bits.newton, detail::inner_bc_from(cfg));
  } catch (const ContinuationFailure& f) {
    s.status = "continuation_failure";
    std::fprintf(stderr, "solve: %s (kappa = %g)\n", f.what(), f.kappa);
    detail::write_summary(dir, s);
    if (out) *out = s;
    return 2;
  }

  const double lo = cfg.bracket_lo > 0.0 ? cfg.bracket_lo : cfg.r_in;
  const double hi = cfg.bracket_hi > 0.0 ? cfg.bracket_hi : cfg.r_out;
  const MotsEstimate oracle = find_mots_radius_bruteforce(bits.data, lo, hi, cfg.scan_samples);
  s.mots_radius_detected = res.boundary_radius;
  if (oracle.found) s.mots_radius_oracle = oracle.oracle_radius;
  if (s.mots_radius_detected && s.mots_radius_oracle)
    s.rel_error = std::abs(*s.mots_radius_detected - *s.mots_radius_oracle) /
                  *s.mots_radius_oracle;
  s.cauchy_traces = res.cauchy_traces;
  for (const auto& stage : res.stages) {
    s.sup_bound_ok = s.sup_bound_ok && check_sup_bound(stage.final_bundle, bits.data.n).ok;
    s.integral_ok = s.integral_ok &&
                    stage.integral_lhs <= stage.integral_rhs * (1.0 + cfg.quad_tol);
  }
  s.integral_lhs = res.stages.back().integral_lhs;
  s.integral_rhs = res.stages.back().integral_rhs;

  const auto& last = res.stages.back();
  detail::write_text(dir / "solution.csv",
                     detail::solution_csv(bits.data, bits.grid, last.final_bundle.u_hat,
                                          last.eps, last.final_bundle.params.kappa));
  std::string cs = "eps,cauchy_to_prev,boundary_radius,integral_lhs,integral_rhs\n";
  for (std::size_t k = 0; k < res.stages.size(); ++k) {
    const auto& st = res.stages[k];
    cs += detail::fmt17(st.eps) + ",";
    cs += (k > 0 ? detail::fmt17(res.cauchy_traces[k - 1]) : std::string("")) + ",";
    cs += (st.boundary_radius ? detail::fmt17(*st.boundary_radius) : std::string("")) + ",";
    cs += detail::fmt17(st.integral_lhs) + "," + detail::fmt17(st.integral_rhs) + "\n";
  }
  detail::write_text(dir / "cauchy.csv", cs);
  detail::write_summary(dir, s);
  s.timing_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (cfg.verbose) std::printf("solve completed in %.3f s\n", s.timing_seconds);
  if (out) *out = s;
  return 0;
}

inline int run_oracle(const RunConfig& cfg, RunSummary* out = nullptr) {
  RunSummary s;
  s.subcommand = "oracle";
  s.config_echo = config_echo(cfg);
  const std::vector<std::string> violations = validate(cfg);
  if (!violations.empty()) {
    for (const auto& v : violations) std::fprintf(stderr, "config violation: %s\n", v.c_str());
    s.status = "invalid";
    if (out) *out = s;
    return 3;
  }
  const auto bits = detail::pipeline_bits(cfg);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);

  std::string theta = "r,H,P,theta_plus\n";
  for (int i = 0; i < bits.grid.nodes; ++i) {
    const SphereGeometry g = sphere_geometry(bits.data, bits.grid.r(i));
    theta += detail::fmt17(g.r) + "," + detail::fmt17(g.H) + "," + detail::fmt17(g.P) + "," +
             detail::fmt17(g.theta_plus) + "\n";
  }
  detail::write_text(dir / "theta.csv", theta);

  const double lo = cfg.bracket_lo > 0.0 ? cfg.bracket_lo : cfg.r_in;
  const double hi = cfg.bracket_hi > 0.0 ? cfg.bracket_hi : cfg.r_out;
  const MotsEstimate est = find_mots_radius_bruteforce(bits.data, lo, hi, cfg.scan_samples);
  if (est.found) s.mots_radius_oracle = est.oracle_radius;

  // Arrival-time table on the region outside the MOTS (plus a guard margin).
  std::string ustar = "r,u_star\n";
  const double guard_lo =
      est.found ? est.oracle_radius + 0.02 * (hi - est.oracle_radius) : bits.grid.r_in;
  for (int i = 0; i < bits.grid.nodes; ++i) {
    const double r = bits.grid.r(i);
    if (r < guard_lo) continue;
    double value;
    try {
      value = arrival_oracle(bits.data, bits.grid.r_out, r, 1e-12, cfg.guard_theta);
    } catch (const MotsflowError&) {
      continue;
    }
    ustar += detail::fmt17(r) + "," + detail::fmt17(value) + "\n";
  }
  detail::write_text(dir / "u_star.csv", ustar);
  detail::write_summary(dir, s);
  if (out) *out = s;
  return 0;
}

inline int run_flow(const RunConfig& cfg, RunSummary* out = nullptr) {
  RunSummary s;
  s.subcommand = "flow";
  s.config_echo = config_echo(cfg);
  const std::vector<std::string> violations = validate(cfg);
  if (!violations.empty()) {
    for (const auto& v : violations) std::fprintf(stderr, "config violation: %s\n", v.c_str());
    s.status = "invalid";
    if (out) *out = s;
    return 3;
  }
  const auto bits = detail::pipeline_bits(cfg);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  const double r0 = cfg.flow_r0 > 0.0 ? cfg.flow_r0 : cfg.r_out;
  const double dt = cfg.flow_dt > 0.0 ? cfg.flow_dt : 1e-4 * r0;
  const FlowTrajectory traj =
      flow_spheres(bits.data, r0, dt, cfg.flow_t_max, cfg.guard_theta);
  std::string csv = "t,r,area,bulk_energy,dissipation\n";
  for (int k = 0; k < traj.size(); ++k) {
    csv += detail::fmt17(traj.times[k]) + "," + detail::fmt17(traj.radii[k]) + "," +
           detail::fmt17(traj.areas[k]) + "," + detail::fmt17(traj.bulk_energies[k]) + "," +
           detail::fmt17(traj.dissipation[k]) + "\n";
  }
  detail::write_text(dir / "trajectory.csv", csv);
  nlohmann::json j = summary_to_json(s);
  j["flow"] = {{"stop_reason", traj.stop_reason},
               {"samples", traj.size()},
               {"t_final", traj.times.back()},
               {"r_final", traj.radii.back()},
               {"energy_identity_max_deviation",
                traj.size() >= 10 ? energy_monotonicity_check(traj) : 0.0}};
  detail::write_text(dir / "summary.json", j.dump(2) + "\n");
  if (out) *out = s;
  return 0;
}

inline int run_barriers_check(const RunConfig& cfg, RunSummary* out = nullptr) {
  RunSummary s;
  s.subcommand = "barriers-check";
  s.config_echo = config_echo(cfg);
  const std::vector<std::string> violations = validate(cfg);
  if (!violations.empty()) {
    for (const auto& v : violations) std::fprintf(stderr, "config violation: %s\n", v.c_str());
    s.status = "invalid";
    if (out) *out = s;
    return 3;
  }
  const auto bits = detail::pipeline_bits(cfg);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  nlohmann::json verdicts = nlohmann::json::array();

  // Supersolution check with the discrete comparison against a solved u_eps.
  {
    double eps = cfg.barrier_eps;
    if (eps <= 0.0) {
      const SupersolutionReport probe =
          verify_supersolution(cfg.barrier_tau, bits.data, bits.grid, 1e-3);
      eps = std::min(0.5 * probe.eps0, eps_gate(bits.data));
    }
    const auto kc = kappa_continuation(bits.data, bits.grid, eps, bits.kappa_values, cfg.s_steps,
                                       bits.newton, detail::inner_bc_from(cfg));
    std::optional<Field> u_eps;
    if (!kc.failed) {
      u_eps = Field(bits.grid);
      for (int i = 0; i < bits.grid.nodes; ++i)
        (*u_eps)[i] = eps * kc.bundles.back().u_hat[i];
    }
    const SupersolutionReport rep = verify_supersolution(
        cfg.barrier_tau, bits.data, bits.grid, eps, u_eps ? &*u_eps : nullptr);
    verdicts.push_back({{"check", "supersolution"},
                        {"passed", rep.passed},
                        {"max_violation", rep.max_violation},
                        {"worst_r", rep.worst_r},
                        {"tol_grid", rep.tol_grid},
                        {"measured_c0", rep.measured_c0},
                        {"eps", rep.eps_used},
                        {"eps0", rep.eps0},
                        {"kterm_ok", rep.kterm_ok},
                        {"kterm_max", rep.kterm_max},
                        {"kterm_bound", rep.kterm_bound},
                        {"comparison_checked", rep.comparison_checked},
                        {"comparison_ok", rep.comparison_ok},
                        {"comparison_worst", rep.comparison_worst},
                        {"boundary_gradient", rep.boundary_gradient},
                        {"boundary_gradient_bound", rep.boundary_gradient_bound},
                        {"tau", cfg.barrier_tau}});
    if (!rep.passed || (rep.comparison_checked && !rep.comparison_ok)) s.status = "failed";
  }

  // Lower barrier: expanding foliation from a trapped leaf when one exists,
  // otherwise the shrinking foliation from the outer sphere (K' = K).
  {
    double leaf = cfg.leaf_r;
    if (leaf <= 0.0) {
      double best = 0.0, best_theta = 0.0;
      for (int i = 0; i < bits.grid.nodes; ++i) {
        const double th = theta_plus(bits.data, bits.grid.r(i));
        if (th < best_theta) {
          best_theta = th;
          best = bits.grid.r(i);
        }
      }
      leaf = best_theta < -cfg.guard_theta ? best : bits.grid.r_out;
    }
    const FlowFoliation fol = build_foliation(bits.data, bits.grid, leaf, cfg.barrier_tau);
    const double tau = std::min(cfg.barrier_tau, fol.time_span);
    const BarrierProfile psi = make_psi_lower(cfg.barrier_delta, tau);
    LowerBarrierReport rep = verify_lower_barrier(psi, fol.u, bits.data, 1e-4);
    if (rep.eps1 < 1e-4) rep = verify_lower_barrier(psi, fol.u, bits.data, rep.eps1);
    verdicts.push_back({{"check", "lower_barrier"},
                        {"passed", rep.passed},
                        {"min_M", rep.min_M},
                        {"worst_r", rep.worst_r},
                        {"tol_grid", rep.tol_grid},
                        {"measured_c0", rep.measured_c0},
                        {"eps", rep.eps_used},
                        {"eps1", rep.eps1},
                        {"surrogate_ok", rep.surrogate_ok},
                        {"surrogate_margin", rep.surrogate_margin},
                        {"leaf_r", leaf},
                        {"tau", tau},
                        {"delta", cfg.barrier_delta}});
    if (!rep.passed || !rep.surrogate_ok) s.status = "failed";
  }

  nlohmann::json j = summary_to_json(s);
  j["verdicts"] = verdicts;
  detail::write_text(dir / "barriers.json", j.dump(2) + "\n");
  if (out) *out = s;
  return s.status == "ok" ? 0 : 2;
}

inline int run_sweep(const RunConfig& cfg, RunSummary* out = nullptr) {
  RunSummary s;
  s.subcommand = "sweep";
  s.config_echo = config_echo(cfg);
  const std::vector<std::string> violations = validate(cfg);
  if (!violations.empty()) {
    for (const auto& v : violations) std::fprintf(stderr, "config violation: %s\n", v.c_str());
    s.status = "invalid";
    if (out) *out = s;
    return 3;
  }
  const auto bits = detail::pipeline_bits(cfg);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  s.s_steps = cfg.s_steps;
  s.eps_values = bits.eps_values;
  s.kappa_values = bits.kappa_values;

  const int n_stage = static_cast<int>(bits.eps_values.size());
  std::vector<KappaContinuationResult> results(static_cast<std::size_t>(n_stage));
  const int threads = std::min(detail::thread_budget(cfg), n_stage);
  auto work = [&](int first, int stride) {
    for (int k = first; k < n_stage; k += stride) {
      results[static_cast<std::size_t>(k)] =
          kappa_continuation(bits.data, bits.grid, bits.eps_values[static_cast<std::size_t>(k)],
                             bits.kappa_values, cfg.s_steps, bits.newton,
                             detail::inner_bc_from(cfg));
    }
  };
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& t : pool) t.join();
  }

  bool any_failed = false;
  std::vector<std::pair<double, Field>> u_by_stage;  // (eps, u) of converged stages
  for (int k = 0; k < n_stage; ++k) {
    const auto& kc = results[static_cast<std::size_t>(k)];
    const double eps = bits.eps_values[static_cast<std::size_t>(k)];
    char sub[32];
    std::snprintf(sub, sizeof sub, "eps_%03d", k);
    const std::filesystem::path stage_dir = dir / sub;
    std::filesystem::create_directories(stage_dir);
    RunSummary stage;
    stage.subcommand = "sweep-stage";
    stage.config_echo = s.config_echo;
    stage.s_steps = cfg.s_steps;
    stage.eps_values = {eps};
    stage.kappa_values = bits.kappa_values;
    if (kc.failed) {
      any_failed = true;
      stage.status = "continuation_failure";
    } else {
      const auto& bundle = kc.bundles.back();
      stage.mots_radius_detected = kc.blow_up.boundary_radius;
      stage.sup_bound_ok = check_sup_bound(bundle, bits.data.n).ok;
      stage.integral_lhs = bundle.diagnostics.integral_estimate.first;
      stage.integral_rhs = bundle.diagnostics.integral_estimate.second;
      stage.integral_ok = stage.integral_lhs <= stage.integral_rhs * (1.0 + cfg.quad_tol);
      detail::write_text(stage_dir / "solution.csv",
                         detail::solution_csv(bits.data, bits.grid, bundle.u_hat, eps,
                                              bundle.params.kappa));
      Field u(bits.grid);
      for (int i = 0; i < bits.grid.nodes; ++i) u[i] = eps * bundle.u_hat[i];
      u_by_stage.emplace_back(eps, std::move(u));
      s.sup_bound_ok = s.sup_bound_ok && stage.sup_bound_ok;
      s.integral_ok = s.integral_ok && stage.integral_ok;
    }
    detail::write_summary(stage_dir, stage);
  }

  std::string cauchy = "eps,max_diff_to_prev\n";
  for (std::size_t k = 0; k < u_by_stage.size(); ++k) {
    double d = 0.0;
    if (k > 0)
      for (int i = 0; i < bits.grid.nodes; ++i)
        d = std::max(d, std::abs(u_by_stage[k].second[i] - u_by_stage[k - 1].second[i]));
    cauchy += detail::fmt17(u_by_stage[k].first) + "," +
              (k > 0 ? detail::fmt17(d) : std::string("")) + "\n";
    if (k > 0) s.cauchy_traces.push_back(d);
  }
  detail::write_text(dir / "sweep_cauchy.csv", cauchy);
  if (any_failed) s.status = "continuation_failure";
  detail::write_text(dir / "sweep_summary.json", summary_to_json(s).dump(2) + "\n");
  if (out) *out = s;
  return any_failed ? 2 : 0;
}

/// Dispatches a parsed configuration; returns the process exit code
/// (0 success, 2 continuation failure, 3 invalid data/config).
inline int run(const RunConfig& cfg, RunSummary* out = nullptr) {
  if (cfg.subcommand == "solve") return run_solve(cfg, out);
  if (cfg.subcommand == "oracle") return run_oracle(cfg, out);
  if (cfg.subcommand == "flow") return run_flow(cfg, out);
  if (cfg.subcommand == "barriers-check") return run_barriers_check(cfg, out);
  if (cfg.subcommand == "sweep") return run_sweep(cfg, out);
  if (cfg.subcommand == "validate") return run_validate(cfg, out);
  std::fprintf(stderr, "unknown subcommand '%s'\n", cfg.subcommand.c_str());
  return 3;
}

}  // namespace motsflow
