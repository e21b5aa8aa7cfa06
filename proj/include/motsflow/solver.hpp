#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "motsflow/geometry.hpp"
#include "motsflow/grid.hpp"
#include "motsflow/initial_data.hpp"
#include "motsflow/operators.hpp"

namespace motsflow {

struct NewtonOptions {
  double tol = 1e-10;  // infinity norm of the residual
  int max_iters = 200;
  int max_backtracks = 30;
};

struct Diagnostics {
  double sup_u = 0.0;
  double max_gradient = 0.0;
  double residual_inf_norm = 0.0;
  double newton_effective_tol = 0.0;  // tolerance floored at the fp quantization level
  int newton_iters = 0;
  bool sup_bound_ok = false;
  std::pair<double, double> integral_estimate{0.0, 0.0};
  std::vector<double> newton_residual_history;  // last Newton solve
};

struct SolutionBundle {
  Field u_hat;
  OperatorParams params;
  double lambda = 0.0;  // eigen bound of the data, recorded at solve time
  Diagnostics diagnostics;
};

struct ContinuationFailure : MotsflowError {
  double last_good_s;
  double kappa;
  Diagnostics diagnostics;
  ContinuationFailure(const std::string& msg, double s, double k, Diagnostics d)
      : MotsflowError(msg), last_good_s(s), kappa(k), diagnostics(std::move(d)) {}
};

struct GeometricSchedule {
  double start = 1.0;
  double ratio = 0.5;
  int count = 20;

  std::vector<double> values() const {
    if (!(start > 0.0) || !(ratio > 0.0 && ratio < 1.0) || count < 1)
      throw std::invalid_argument("GeometricSchedule: need start > 0, ratio in (0,1), count >= 1");
    std::vector<double> v(static_cast<std::size_t>(count));
    double x = start;
    for (int i = 0; i < count; ++i, x *= ratio) v[static_cast<std::size_t>(i)] = x;
    return v;
  }
};

struct Schedules {
  int s_steps = 10;
  GeometricSchedule kappa{1.0, 0.5, 20};
  GeometricSchedule eps{0.25, 0.5, 8};  // eps.start defaults to eps_gate/2 when resolved
};

/// Inner-boundary closure of the solve. The coordinate annulus models the
/// ball-shaped domain of the continuum problem: zero_flux closes the inner
/// end by symmetry (no inner boundary exists in the ball), dirichlet_zero
/// pins u_hat = 0 there instead.
enum class InnerBc { zero_flux, dirichlet_zero };

namespace detail {

struct NewtonOutcome {
  Field w;
  bool converged = false;
  int iters = 0;
  double effective_tol = 0.0;
  std::vector<double> history;
};

inline Field system_residual(const Field& w, const OperatorParams& p, const DiscreteGeometry& g,
                             InnerBc bc) {
  Field r = residual_capillarity(w, p, g);
  const int n = w.size();
  if (bc == InnerBc::dirichlet_zero) {
    r[0] = w[0];
  } else {
    // Half-cell control volume at the closed inner end; inner flux is zero.
    const double h = g.grid.h;
    const double s0 = (w[1] - w[0]) / (h * g.m_half[0]);
    const double flux = g.A_half[0] * s0 / std::sqrt(s0 * s0 + 1.0);
    const double q0 = s0 * s0;
    r[0] = flux / (0.5 * h * g.m_node[0] * g.A_node[0]) -
           p.s * projected_trace(g, 0, q0, 1.0) + p.s / (p.eps * std::sqrt(q0 + 1.0)) -
           p.kappa * w[0];
  }
  r[n - 1] = w[n - 1];
  return r;
}

inline Tridiagonal system_jacobian(const Field& w, const OperatorParams& p,
                                   const DiscreteGeometry& g, InnerBc bc) {
  Tridiagonal J = assemble_jacobian(w, p, g);
  const int n = w.size();
  if (bc == InnerBc::dirichlet_zero) {
    J.diag[0] = 1.0;
    J.upper[0] = 0.0;
  } else {
    const double h = g.grid.h;
    const double s0 = (w[1] - w[0]) / (h * g.m_half[0]);
    const double W0 = std::sqrt(s0 * s0 + 1.0);
    const double gain = g.A_half[0] / (W0 * W0 * W0 * h * g.m_half[0]);
    const double vol = 0.5 * h * g.m_node[0] * g.A_node[0];
    const double q0 = s0 * s0;
    const double zq = p.s * g.a_node[0] / ((q0 + 1.0) * (q0 + 1.0)) -
                      p.s / (2.0 * p.eps) * std::pow(q0 + 1.0, -1.5);
    const double dq = 2.0 * s0 / (h * g.m_half[0]);  // dq0/dw_1 = +dq, dq0/dw_0 = -dq
    J.diag[0] = -gain / vol - p.kappa - zq * dq;
    J.upper[0] = gain / vol + zq * dq;
  }
  J.diag[n - 1] = 1.0;
  J.lower[n - 1] = 0.0;
  return J;
}

inline double two_norm(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return std::sqrt(s);
}

/// Damped Newton: backtracking line search on the residual 2-norm (smooth
/// merit), convergence declared on the infinity norm. The outer end carries
/// the Dirichlet row; the inner end row is set by the closure.
///
/// The convergence threshold is floored at the double-precision quantization
/// level of the discrete system, |J|_inf * ulp(|w|_inf): one ulp of the
/// iterate already moves the residual by a Jacobian row sum, so no iteration
/// can do better.
inline NewtonOutcome newton_solve(const DiscreteGeometry& g, const OperatorParams& p, Field w,
                                  const NewtonOptions& o, InnerBc bc) {
  NewtonOutcome out;
  const int n = w.size();
  constexpr double eps_mach = 2.220446049250313e-16;
  Field res = system_residual(w, p, g, bc);
  double rn = res.inf_norm();
  double merit = two_norm(res);
  double tol_eff = o.tol;
  out.history.push_back(rn);
  for (int it = 0; it < o.max_iters; ++it) {
    Tridiagonal J = system_jacobian(w, p, g, bc);
    double row_max = 0.0;
    for (int i = 0; i < n; ++i)
      row_max = std::max(row_max,
                         std::abs(J.lower[i]) + std::abs(J.diag[i]) + std::abs(J.upper[i]));
    tol_eff = std::max(o.tol, 4.0 * eps_mach * row_max * std::max(w.inf_norm(), 1.0));
    if (rn <= tol_eff) {
      out.w = std::move(w);
      out.converged = true;
      out.iters = it;
      out.effective_tol = tol_eff;
      return out;
    }
    std::vector<double> rhs(res.values);
    for (double& v : rhs) v = -v;
    std::vector<double> delta;
    try {
      delta = solve_tridiagonal(J, rhs);
    } catch (const MotsflowError&) {
      break;  // singular Jacobian: treat as a stall
    }
    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= o.max_backtracks; ++bt, step *= 0.5) {
      Field trial = w;
      for (int i = 0; i < n; ++i) trial[i] += step * delta[static_cast<std::size_t>(i)];
      Field trial_res = system_residual(trial, p, g, bc);
      if (!trial_res.all_finite()) continue;
      const double trial_merit = two_norm(trial_res);
      if (trial_merit <= (1.0 - 1e-4 * step) * merit) {
        w = std::move(trial);
        res = std::move(trial_res);
        merit = trial_merit;
        rn = res.inf_norm();
        accepted = true;
        break;
      }
    }
    out.history.push_back(rn);
    if (!accepted) break;
  }
  out.w = std::move(w);
  out.converged = rn <= tol_eff;
  out.iters = static_cast<int>(out.history.size()) - 1;
  out.effective_tol = tol_eff;
  return out;
}

inline double max_gradient(const DiscreteGeometry& g, const Field& u) {
  Field du = nodal_derivative(u);
  double m = 0.0;
  for (int i = 0; i < u.size(); ++i) m = std::max(m, std::abs(du[i]) / g.m_node[i]);
  return m;
}

inline Diagnostics collect_diagnostics(const DiscreteGeometry& g, const Field& u,
                                       const OperatorParams& p, const NewtonOutcome& n,
                                       InnerBc bc) {
  Diagnostics d;
  d.sup_u = u.max_value();
  d.max_gradient = max_gradient(g, u);
  d.residual_inf_norm = system_residual(u, p, g, bc).inf_norm();
  d.newton_effective_tol = n.effective_tol;
  d.newton_iters = n.iters;
  d.newton_residual_history = n.history;
  d.sup_bound_ok = u.min_value() >= -1e-10 &&
                   d.sup_u <= 2.0 / (p.eps * p.kappa) * (1.0 + 1e-8);
  return d;
}

inline void validate_existence_params(const InitialDataSet& data, const OperatorParams& p) {
  if (!(p.kappa > 0.0)) throw std::invalid_argument("solve_capillarity: kappa must be > 0");
  const double gate = eps_gate(data);
  if (!(p.eps > 0.0) || p.eps > gate * (1.0 + 1e-12))
    throw std::invalid_argument("solve_capillarity: eps must satisfy 0 < eps <= min{1/((n+1)lambda), 1/2}");
}

}  // namespace detail

/// Continuity method in s from the exact solution F(0,0)=0: each step is
/// Newton-solved seeded by the previous one; a failing step is halved down
/// to 1/1024 before giving up.
inline SolutionBundle solve_capillarity(const InitialDataSet& data, const DiscreteGeometry& g,
                                        OperatorParams p, int s_steps = 10,
                                        const NewtonOptions& opts = {},
                                        InnerBc inner_bc = InnerBc::zero_flux) {
  detail::validate_existence_params(data, p);
  if (s_steps < 1) throw std::invalid_argument("solve_capillarity: s_steps must be >= 1");

  Field w(g.grid, 0.0);
  double s = 0.0;
  double step = 1.0 / s_steps;
  const double min_step = 1.0 / 1024.0;
  detail::NewtonOutcome last;
  int total_iters = 0;
  while (s < 1.0 - 1e-15) {
    const double s_try = std::min(1.0, s + step);
    OperatorParams ps = p;
    ps.s = s_try;
    detail::NewtonOutcome out = detail::newton_solve(g, ps, w, opts, inner_bc);
    total_iters += out.iters;
    if (out.converged) {
      w = out.w;
      s = s_try;
      last = std::move(out);
    } else {
      step *= 0.5;
      if (step < min_step) {
        OperatorParams plast = p;
        plast.s = s;
        Diagnostics d = detail::collect_diagnostics(g, w, plast, out, inner_bc);
        throw ContinuationFailure("solve_capillarity: Newton stalled in the s-continuation", s,
                                  p.kappa, std::move(d));
      }
    }
  }
  p.s = 1.0;
  SolutionBundle bundle;
  bundle.u_hat = w;
  bundle.params = p;
  bundle.lambda = eigen_bound(data);
  bundle.diagnostics = detail::collect_diagnostics(g, w, p, last, inner_bc);
  bundle.diagnostics.newton_iters = total_iters;
  return bundle;
}

inline SolutionBundle solve_capillarity(const InitialDataSet& data, const RadialGrid& grid,
                                        const OperatorParams& p, int s_steps = 10,
                                        const NewtonOptions& opts = {},
                                        InnerBc inner_bc = InnerBc::zero_flux) {
  return solve_capillarity(data, discretize(data, grid), p, s_steps, opts, inner_bc);
}

/// Single Newton solve at s = 1 from a supplied seed (used by the kappa
/// continuation, which carries the solution from the previous kappa).
inline SolutionBundle solve_seeded(const InitialDataSet& data, const DiscreteGeometry& g,
                                   OperatorParams p, const Field& seed,
                                   const NewtonOptions& opts = {},
                                   InnerBc inner_bc = InnerBc::zero_flux) {
  detail::validate_existence_params(data, p);
  p.s = 1.0;
  detail::NewtonOutcome out = detail::newton_solve(g, p, seed, opts, inner_bc);
  if (!out.converged) {
    Diagnostics d = detail::collect_diagnostics(g, out.w, p, out, inner_bc);
    throw ContinuationFailure("solve_seeded: Newton stalled at s = 1", 1.0, p.kappa, std::move(d));
  }
  SolutionBundle bundle;
  bundle.u_hat = out.w;
  bundle.params = p;
  bundle.lambda = eigen_bound(data);
  bundle.diagnostics = detail::collect_diagnostics(g, bundle.u_hat, p, out, inner_bc);
  return bundle;
}

struct SupBoundReport {
  bool ok = true;
  double margin = 0.0;       // min over nodes of bound - u_hat
  int worst_node = -1;
  double bound = 0.0;        // 2/(eps kappa)
  double intermediate_bound = 0.0;  // (n+1) lambda / kappa + 1/(eps kappa)
};

/// 0 <= u_hat <= 2/(eps kappa) nodewise with 1e-8 relative slack.
inline SupBoundReport check_sup_bound(const SolutionBundle& bundle, int dim) {
  SupBoundReport rep;
  const double ek = bundle.params.eps * bundle.params.kappa;
  rep.bound = 2.0 / ek;
  rep.intermediate_bound = (dim + 1) * bundle.lambda / bundle.params.kappa + 1.0 / ek;
  rep.margin = rep.bound;
  const double upper = rep.bound * (1.0 + 1e-8);
  for (int i = 0; i < bundle.u_hat.size(); ++i) {
    const double u = bundle.u_hat[i];
    if (u < -1e-10 || u > upper) {
      rep.ok = false;
      rep.worst_node = i;
    }
    rep.margin = std::min(rep.margin, rep.bound - u);
  }
  return rep;
}

struct IntegralEstimate {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Normal integral estimate on the exterior region:
/// int 1/sqrt(eps^2 + |grad u|^2) dV <= |dOmega_0| + (n+2) lambda |Omega|,
/// where |dOmega_0| collects every boundary component of the region: the
/// outer sphere, the inner sphere of the computational annulus, and the
/// detected MOTS when one exists.
inline IntegralEstimate check_integral_estimate(const Field& u_eps, double eps,
                                                const InitialDataSet& data,
                                                std::optional<double> mots_radius = std::nullopt) {
  const RadialGrid& grid = u_eps.grid;
  const DiscreteGeometry g = discretize(data, grid);
  const Field du = nodal_derivative(u_eps);
  const double r_lo = mots_radius ? *mots_radius + 2.0 * grid.h : grid.r_in;

  IntegralEstimate est;
  int first = 0;
  while (first < grid.nodes && grid.r(first) < r_lo) ++first;
  for (int i = first; i < grid.nodes; ++i) {
    const double slope = du[i] / g.m_node[i];
    const double f = 1.0 / std::sqrt(eps * eps + slope * slope) * g.A_node[i] * g.m_node[i];
    const double w = (i == first || i == grid.nodes - 1) ? 0.5 : 1.0;
    est.lhs += w * f * grid.h;
  }
  double volume = 0.0;
  for (int i = 0; i < grid.nodes; ++i) {
    const double w = (i == 0 || i == grid.nodes - 1) ? 0.5 : 1.0;
    volume += w * g.A_node[i] * g.m_node[i] * grid.h;
  }
  est.rhs = sphere_area(data, grid.r_out) + sphere_area(data, grid.r_in) +
            (mots_radius ? sphere_area(data, *mots_radius) : 0.0) +
            (data.n + 2) * eigen_bound(data) * volume;
  return est;
}

struct GradientDiagnostics {
  double sup_gradient = 0.0;
  double boundary_gradient = 0.0;
  double boundary_term = 0.0;  // sup over the ends of 1/eps + v
  double empirical_eta = 0.0;
  double sup_u = 0.0;
};

/// Diagnostic only: the interior gradient estimate's eta has no computable
/// recipe, so an empirical surrogate is recorded, never asserted.
inline GradientDiagnostics monitor_gradient_bounds(const SolutionBundle& bundle,
                                                   const InitialDataSet& data) {
  const DiscreteGeometry g = discretize(data, bundle.u_hat.grid);
  GradientDiagnostics d;
  d.sup_u = bundle.u_hat.max_value();
  const Field du = nodal_derivative(bundle.u_hat);
  const int n = bundle.u_hat.size();
  for (int i = 0; i < n; ++i)
    d.sup_gradient = std::max(d.sup_gradient, std::abs(du[i]) / g.m_node[i]);
  for (int i : {0, n - 1}) {
    const double grad = std::abs(du[i]) / g.m_node[i];
    d.boundary_gradient = std::max(d.boundary_gradient, grad);
    d.boundary_term = std::max(d.boundary_term,
                               1.0 / bundle.params.eps + std::sqrt(1.0 + grad * grad));
  }
  if (d.sup_u > 0.0 && d.sup_gradient > 0.0 && d.boundary_term > 0.0)
    d.empirical_eta = std::log(d.sup_gradient / d.boundary_term) / d.sup_u;
  return d;
}

struct BlowUpRegion {
  double threshold = 0.0;                               // at the final kappa
  std::vector<std::pair<double, double>> intervals;     // final blow-up intervals
  std::optional<double> boundary_radius;                // outer edge of the outermost interval
  std::vector<std::pair<double, std::optional<double>>> kappa_trace;
  std::vector<double> boundary_diffs;                   // successive |boundary change|
  std::vector<double> sup_diffs;                        // successive sup|u_hat change|
};

/// Scale-aware blow-up threshold: grows like the supremum ceiling 2/(eps k)
/// but separates from any converged finite profile.
inline double blow_up_threshold(double eps, double kappa) {
  return std::min(10.0 / std::sqrt(eps * kappa), 1.0 / (eps * kappa));
}

inline std::vector<std::pair<double, double>> blow_up_intervals(const Field& u_hat, double threshold) {
  std::vector<std::pair<double, double>> out;
  const RadialGrid& g = u_hat.grid;
  const int n = u_hat.size();
  int i = 0;
  while (i < n) {
    if (u_hat[i] > threshold) {
      double lo = g.r(i);
      if (i > 0) {
        const double f = (threshold - u_hat[i - 1]) / (u_hat[i] - u_hat[i - 1]);
        lo = g.r(i - 1) + f * g.h;
      }
      int j = i;
      while (j + 1 < n && u_hat[j + 1] > threshold) ++j;
      double hi = g.r(j);
      if (j + 1 < n) {
        const double f = (u_hat[j] - threshold) / (u_hat[j] - u_hat[j + 1]);
        hi = g.r(j) + f * g.h;
      }
      out.emplace_back(lo, hi);
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

struct KappaContinuationResult {
  std::vector<SolutionBundle> bundles;
  BlowUpRegion blow_up;
  bool failed = false;
  double failed_kappa = 0.0;
  std::string failure_message;
};

/// Walks kappa down the schedule at s = 1, each solve seeded by the previous
/// solution (the first kappa runs the full s-continuation). Detects the
/// blow-up set {u_hat > threshold} per step; on data with no MOTS the
/// solutions converge and every interval list stays empty.
inline KappaContinuationResult kappa_continuation(const InitialDataSet& data, const RadialGrid& grid,
                                                  double eps, const std::vector<double>& kappas,
                                                  int s_steps = 10, const NewtonOptions& opts = {},
                                                  InnerBc inner_bc = InnerBc::zero_flux) {
  if (kappas.empty()) throw std::invalid_argument("kappa_continuation: empty schedule");
  const DiscreteGeometry g = discretize(data, grid);
  KappaContinuationResult result;

  // Seeded walk down in kappa. A failing step is bisected geometrically,
  // mirroring the s-continuation's step-halving policy.
  std::function<SolutionBundle(double, double, const Field&, int)> advance =
      [&](double k_from, double k_to, const Field& seed, int depth) -> SolutionBundle {
    OperatorParams p{eps, k_to, 1.0};
    try {
      return solve_seeded(data, g, p, seed, opts, inner_bc);
    } catch (const ContinuationFailure&) {
      if (depth >= 14) throw;
      const double mid = std::sqrt(k_from * k_to);
      SolutionBundle half = advance(k_from, mid, seed, depth + 1);
      return advance(mid, k_to, half.u_hat, depth + 1);
    }
  };

  Field prev;
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    OperatorParams p{eps, kappas[k], 1.0};
    SolutionBundle bundle;
    try {
      // First kappa runs the full s-continuation from F(0,0) = 0.
      bundle = (k == 0) ? solve_capillarity(data, g, p, s_steps, opts, inner_bc)
                        : advance(kappas[k - 1], kappas[k], prev, 0);
    } catch (const ContinuationFailure& f) {
      bool recovered = false;
      if (k > 0) {
        try {
          bundle = solve_capillarity(data, g, p, s_steps, opts, inner_bc);
          recovered = true;
        } catch (const ContinuationFailure&) {
        }
      }
      if (!recovered) {
        result.failed = true;
        result.failed_kappa = kappas[k];
        result.failure_message = f.what();
        break;
      }
    }
    const double threshold = blow_up_threshold(eps, kappas[k]);
    const auto intervals = blow_up_intervals(bundle.u_hat, threshold);
    std::optional<double> boundary;
    if (!intervals.empty()) boundary = intervals.back().second;
    if (!result.blow_up.kappa_trace.empty()) {
      const auto& prev_entry = result.blow_up.kappa_trace.back();
      if (prev_entry.second && boundary)
        result.blow_up.boundary_diffs.push_back(std::abs(*boundary - *prev_entry.second));
      double sup_diff = 0.0;
      for (int i = 0; i < bundle.u_hat.size(); ++i)
        sup_diff = std::max(sup_diff, std::abs(bundle.u_hat[i] - prev[i]));
      result.blow_up.sup_diffs.push_back(sup_diff);
    }
    result.blow_up.kappa_trace.emplace_back(kappas[k], boundary);
    result.blow_up.threshold = threshold;
    result.blow_up.intervals = intervals;
    result.blow_up.boundary_radius = boundary;
    prev = bundle.u_hat;
    result.bundles.push_back(std::move(bundle));
  }
  if (!result.bundles.empty()) {
    SolutionBundle& last = result.bundles.back();
    Field u(grid);
    for (int i = 0; i < u.size(); ++i) u[i] = eps * last.u_hat[i];
    const IntegralEstimate est =
        check_integral_estimate(u, eps, data, result.blow_up.boundary_radius);
    last.diagnostics.integral_estimate = {est.lhs, est.rhs};
  }
  return result;
}

struct EpsStage {
  double eps = 0.0;
  std::optional<double> boundary_radius;
  double sup_u_hat = 0.0;
  double integral_lhs = 0.0;
  double integral_rhs = 0.0;
  std::vector<double> kappa_sup_diffs;
  SolutionBundle final_bundle;
};

struct EpsilonLimitResult {
  Field u;                            // final-stage u = eps * u_hat
  std::vector<EpsStage> stages;
  std::vector<double> cauchy_traces;  // max |u_{k+1} - u_k| on the common exterior
  std::optional<double> boundary_radius;  // final stage
};

/// eps -> 0 stage loop: each stage runs the kappa continuation, forms
/// u_eps = eps u_hat, and records the Cauchy trace of consecutive stages on
/// the region outside every detected blow-up interval.
inline EpsilonLimitResult epsilon_limit(const InitialDataSet& data, const RadialGrid& grid,
                                        const std::vector<double>& eps_values,
                                        const std::vector<double>& kappas, int s_steps = 10,
                                        const NewtonOptions& opts = {},
                                        InnerBc inner_bc = InnerBc::zero_flux) {
  if (eps_values.empty()) throw std::invalid_argument("epsilon_limit: empty eps schedule");
  EpsilonLimitResult result;
  std::vector<Field> u_by_stage;
  double outer_edge = grid.r_in;
  for (double eps : eps_values) {
    KappaContinuationResult kc = kappa_continuation(data, grid, eps, kappas, s_steps, opts, inner_bc);
    if (kc.failed)
      throw ContinuationFailure("epsilon_limit: " + kc.failure_message, 1.0, kc.failed_kappa, {});
    EpsStage stage;
    stage.eps = eps;
    stage.boundary_radius = kc.blow_up.boundary_radius;
    if (stage.boundary_radius) outer_edge = std::max(outer_edge, *stage.boundary_radius);
    stage.kappa_sup_diffs = kc.blow_up.sup_diffs;
    stage.final_bundle = std::move(kc.bundles.back());
    stage.sup_u_hat = stage.final_bundle.diagnostics.sup_u;
    stage.integral_lhs = stage.final_bundle.diagnostics.integral_estimate.first;
    stage.integral_rhs = stage.final_bundle.diagnostics.integral_estimate.second;
    Field u(grid);
    for (int i = 0; i < u.size(); ++i) u[i] = eps * stage.final_bundle.u_hat[i];
    u_by_stage.push_back(u);
    result.stages.push_back(std::move(stage));
  }
  const bool any_blow_up = outer_edge > grid.r_in;
  const double r_common = outer_edge + 5.0 * grid.h;
  for (std::size_t k = 0; k + 1 < u_by_stage.size(); ++k) {
    double d = 0.0;
    for (int i = 0; i < grid.nodes; ++i)
      if (!any_blow_up || grid.r(i) >= r_common)
        d = std::max(d, std::abs(u_by_stage[k + 1][i] - u_by_stage[k][i]));
    result.cauchy_traces.push_back(d);
  }
  result.u = u_by_stage.back();
  result.boundary_radius = result.stages.back().boundary_radius;
  return result;
}

}  // namespace motsflow
