#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "motsflow/geometry.hpp"
#include "motsflow/grid.hpp"
#include "motsflow/initial_data.hpp"
#include "motsflow/operators.hpp"
#include "motsflow/oracle.hpp"

namespace motsflow {

enum class BarrierKind { zeta, psi_lower, psi_boundary };

/// Piecewise barrier profile with its stated derivatives on [t_min, t_max].
struct BarrierProfile {
  BarrierKind kind = BarrierKind::zeta;
  double t_min = 0.0, t_max = 0.0;
  double delta = 0.0, tau = 0.0;
  ScalarFn value, first_derivative, second_derivative;
};

/// zeta: log(t/delta + 1) on [0,1], matched quartic on [1,2] with
/// c1 = log(1/delta + 1), c0 = 1/(1 + delta); C2 at t = 1 and flat at t = 2.
inline BarrierProfile make_zeta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("make_zeta: delta must lie in (0, 1]");
  const double c1 = std::log(1.0 / delta + 1.0);
  const double c0 = 1.0 / (1.0 + delta);
  BarrierProfile b;
  b.kind = BarrierKind::zeta;
  b.t_min = 0.0;
  b.t_max = 2.0;
  b.delta = delta;
  b.value = [delta, c0, c1](double t) {
    if (t <= 1.0) return std::log(t / delta + 1.0);
    const double s = t - 1.0;
    return c1 + c0 * s - 0.5 * c0 * c0 * s * s + (2.0 * c0 * c0 - 3.0 * c0) / 3.0 * s * s * s +
           (-c0 * c0 + 2.0 * c0) / 4.0 * s * s * s * s;
  };
  b.first_derivative = [delta, c0](double t) {
    if (t <= 1.0) return 1.0 / (t + delta);
    const double s = t - 1.0;
    return c0 - c0 * c0 * s + (2.0 * c0 * c0 - 3.0 * c0) * s * s + (-c0 * c0 + 2.0 * c0) * s * s * s;
  };
  b.second_derivative = [delta, c0](double t) {
    if (t <= 1.0) return -1.0 / ((t + delta) * (t + delta));
    const double s = t - 1.0;
    return -c0 * c0 + (4.0 * c0 * c0 - 6.0 * c0) * s + (-3.0 * c0 * c0 + 6.0 * c0) * s * s;
  };
  return b;
}

/// psi(t) = zeta((2/tau)(tau - t)) on [0, tau]: zero at tau, floor
/// zeta(2) >= log(1/delta + 1) at 0, with vanishing derivatives there.
inline BarrierProfile make_psi_lower(double delta, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("make_psi_lower: tau must be > 0");
  const BarrierProfile z = make_zeta(delta);
  BarrierProfile b;
  b.kind = BarrierKind::psi_lower;
  b.t_min = 0.0;
  b.t_max = tau;
  b.delta = delta;
  b.tau = tau;
  const ScalarFn zv = z.value, zd = z.first_derivative, zdd = z.second_derivative;
  b.value = [zv, tau](double t) { return zv(2.0 / tau * (tau - t)); };
  b.first_derivative = [zd, tau](double t) { return -2.0 / tau * zd(2.0 / tau * (tau - t)); };
  b.second_derivative = [zdd, tau](double t) {
    return 4.0 / (tau * tau) * zdd(2.0 / tau * (tau - t));
  };
  return b;
}

/// Replacement rule guaranteeing floor psi(0) >= floor_value.
inline double delta_for_floor(double floor_value) {
  if (!(floor_value >= std::log(2.0)))
    throw std::invalid_argument("delta_for_floor: floor must be >= log 2 so that delta <= 1");
  return 1.0 / std::expm1(floor_value);
}

/// psi(t) = 2t + 1/(tau - t) - 1/tau on [0, tau), tau < 1/2.
inline BarrierProfile make_psi_boundary(double tau) {
  if (!(tau > 0.0 && tau < 0.5)) throw std::invalid_argument("make_psi_boundary: tau must lie in (0, 1/2)");
  BarrierProfile b;
  b.kind = BarrierKind::psi_boundary;
  b.t_min = 0.0;
  b.t_max = tau;
  b.tau = tau;
  b.value = [tau](double t) { return 2.0 * t + 1.0 / (tau - t) - 1.0 / tau; };
  b.first_derivative = [tau](double t) { return 2.0 + 1.0 / ((tau - t) * (tau - t)); };
  b.second_derivative = [tau](double t) { return 2.0 / ((tau - t) * (tau - t) * (tau - t)); };
  return b;
}

/// Arrival-time foliation of a short-time smooth flow, sampled on the
/// contiguous grid nodes covered up to time t_cut. Shrinking starts give the
/// boundary foliation from the outer sphere; trapped (expanding) starts give
/// the leaf foliation used by the lower barrier.
struct FlowFoliation {
  Field u;           // arrival times on the sub-grid
  int first_node = 0;  // index of the sub-grid origin in the parent grid
  double time_span = 0.0;
};

inline FlowFoliation build_foliation(const InitialDataSet& data, const RadialGrid& grid,
                                     double r_start, double t_cut, double dt = 0.0,
                                     double guard_theta = 1e-6) {
  if (dt <= 0.0) dt = 1e-4 * grid.r_out;
  FlowTrajectory traj = flow_spheres(data, r_start, dt, t_cut, guard_theta);
  const double reached = traj.times.back();
  const double r_lo = std::min(traj.radii.front(), traj.radii.back());
  const double r_hi = std::max(traj.radii.front(), traj.radii.back());
  int i0 = 0;
  while (i0 < grid.nodes && grid.r(i0) < r_lo - 1e-14) ++i0;
  int i1 = grid.nodes - 1;
  while (i1 >= 0 && grid.r(i1) > r_hi + 1e-14) --i1;
  if (i1 - i0 + 1 < 16)
    throw MotsflowError("build_foliation: flow covers fewer than 16 grid nodes");
  FlowFoliation fol;
  fol.first_node = i0;
  fol.time_span = reached;
  fol.u = Field(RadialGrid(grid.r(i0), grid.r(i1), i1 - i0 + 1));
  for (int i = i0; i <= i1; ++i) {
    double r = grid.r(i);
    if (r == traj.radii.front()) {
      fol.u[i - i0] = 0.0;
      continue;
    }
    fol.u[i - i0] = flow_time_at_radius(data, traj, r);
  }
  return fol;
}

/// Measured foliation regularity constant: max over the field of |grad u|,
/// 1/|grad u| and the radial/tangential Hessian components, floored at 1.
inline double measure_c0(const InitialDataSet& data, const Field& u) {
  const int n = u.size();
  const Field du = nodal_derivative(u);
  double c0 = 1.0;
  const double h = u.grid.h;
  for (int i = 0; i < n; ++i) {
    const double r = u.grid.r(i);
    const double p = data.phi(r);
    const double dp = data.dphi(r);
    const double grad = std::abs(du[i]) / (p * p);
    double upp = 0.0;
    if (i > 0 && i < n - 1) upp = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
    const double hess_rad = std::abs(upp / std::pow(p, 4) - 2.0 * du[i] * dp / std::pow(p, 5));
    const SphereGeometry sg = sphere_geometry(data, r);
    const double hess_tan = std::abs(sg.H / data.n * du[i] / (p * p));
    c0 = std::max({c0, grad, grad > 0.0 ? 1.0 / grad : 1.0, hess_rad, hess_tan});
  }
  return c0;
}

struct LowerBarrierReport {
  bool passed = false;
  double min_M = 0.0;          // min of M_eps(psi o u^-) over interior nodes
  double worst_r = 0.0;
  double tol_grid = 0.0;
  double measured_c0 = 0.0;
  double eps_used = 0.0;
  double eps1 = 0.0;           // (C0 + 80 C0^2/tau^2)^{-1}
  bool surrogate_ok = false;   // -psi' - min{C0^2|psi''|, |psi''|/psi'^2} >= -80 C0^2/tau^2
  double surrogate_margin = 0.0;
};

/// Sign verification of the lower-barrier inequality M_eps(psi o u^-) >= 0
/// (up to C h^2 discretization slack) on the foliated region, for the
/// barrier-mode operator with the modified data.
inline LowerBarrierReport verify_lower_barrier(const BarrierProfile& psi, const Field& u_minus,
                                               const InitialDataSet& data_modified, double eps,
                                               double slack_constant = 10.0) {
  if (psi.kind != BarrierKind::psi_lower)
    throw std::invalid_argument("verify_lower_barrier: profile must be a psi_lower barrier");
  const double tau = psi.tau;
  LowerBarrierReport rep;
  rep.eps_used = eps;
  rep.tol_grid = slack_constant * u_minus.grid.h * u_minus.grid.h;
  rep.measured_c0 = measure_c0(data_modified, u_minus);

  Field v(u_minus.grid);
  for (int i = 0; i < u_minus.size(); ++i) {
    const double t = std::clamp(u_minus[i], 0.0, tau);
    v[i] = psi.value(t);
  }
  const Field M = operator_M_eps(v, eps, data_modified, MepsMode::barrier);
  rep.min_M = std::numeric_limits<double>::infinity();
  for (int i = 1; i < M.size() - 1; ++i) {
    if (M[i] < rep.min_M) {
      rep.min_M = M[i];
      rep.worst_r = M.grid.r(i);
    }
  }
  rep.passed = rep.min_M >= -rep.tol_grid;

  const double c0 = rep.measured_c0;
  const double surrogate_bound = 80.0 * c0 * c0 / (tau * tau);
  rep.eps1 = 1.0 / (c0 + surrogate_bound);
  rep.surrogate_margin = std::numeric_limits<double>::infinity();
  const int samples = 10000;
  for (int k = 0; k <= samples; ++k) {
    const double t = tau * k / samples;
    const double dp = psi.first_derivative(t);
    const double ddp = std::abs(psi.second_derivative(t));
    const double ratio = (dp != 0.0) ? ddp / (dp * dp) : std::numeric_limits<double>::infinity();
    const double lhs = -dp - std::min(c0 * c0 * ddp, ratio);
    rep.surrogate_margin = std::min(rep.surrogate_margin, lhs + surrogate_bound);
  }
  rep.surrogate_ok = rep.surrogate_margin >= -1e-12 * surrogate_bound;
  return rep;
}

struct SupersolutionReport {
  bool passed = false;          // M_eps(v) <= -1/(tau - t)^2 + tol at every interior node
  double max_violation = 0.0;   // max of M + 1/(tau - t)^2 - tol (<= 0 when passed)
  double worst_r = 0.0;
  double tol_grid = 0.0;
  double measured_c0 = 0.0;
  double eps_used = 0.0;
  double eps0 = 0.0;            // min{(4(n+1)lambda)^{-1}, C0^{-2}}
  bool kterm_ok = false;        // K-difference term <= 2 eps (n+1) lambda nodewise
  double kterm_max = 0.0;
  double kterm_bound = 0.0;
  bool comparison_ok = false;   // u_eps <= v nodewise on the region (when supplied)
  double comparison_worst = 0.0;
  bool comparison_checked = false;
  double boundary_gradient = 0.0;        // one-sided |grad u_eps| at r_out
  double boundary_gradient_bound = 0.0;  // (2 + tau^{-2}) C0
  double region_lo = 0.0, region_hi = 0.0;
  double time_span = 0.0;
};

/// Builds the short-time boundary foliation from the outer sphere, bends it
/// with psi(t) = 2t + 1/(tau-t) - 1/tau and verifies the supersolution sign
/// M_eps(v) <= -1/(tau-t)^2 plus, optionally, the discrete comparison
/// u_eps <= v on the foliated annulus.
inline SupersolutionReport verify_supersolution(double tau, const InitialDataSet& data,
                                                const RadialGrid& grid, double eps,
                                                const Field* u_eps = nullptr,
                                                double slack_constant = 10.0,
                                                double time_cut_fraction = 0.95) {
  const BarrierProfile psi = make_psi_boundary(tau);
  SupersolutionReport rep;
  rep.eps_used = eps;
  rep.tol_grid = slack_constant * grid.h * grid.h;

  FlowFoliation fol = build_foliation(data, grid, grid.r_out, tau * time_cut_fraction);
  rep.time_span = fol.time_span;
  // Trim to arrival times below the cut so psi stays finite.
  const double t_cut = time_cut_fraction * std::min(tau, fol.time_span);
  int i0 = 0;
  while (i0 < fol.u.size() && fol.u[i0] > t_cut) ++i0;
  if (fol.u.size() - i0 < 16) throw MotsflowError("verify_supersolution: foliated region too thin");
  RadialGrid sub(fol.u.grid.r(i0), fol.u.grid.r_out, fol.u.size() - i0);
  Field u(sub), v(sub);
  for (int i = 0; i < u.size(); ++i) {
    u[i] = std::max(0.0, fol.u[i0 + i]);
    v[i] = psi.value(u[i]);
  }
  rep.region_lo = sub.r_in;
  rep.region_hi = sub.r_out;
  rep.measured_c0 = measure_c0(data, u);
  const double lambda = eigen_bound(data);
  rep.eps0 = (lambda > 0.0) ? std::min(1.0 / (4.0 * (data.n + 1) * lambda),
                                       1.0 / (rep.measured_c0 * rep.measured_c0))
                            : 1.0 / (rep.measured_c0 * rep.measured_c0);

  const Field M = operator_M_eps(v, eps, data, MepsMode::boundary);
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < M.size() - 1; ++i) {
    const double target = -1.0 / ((tau - u[i]) * (tau - u[i]));
    const double viol = M[i] - target - rep.tol_grid;
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.worst_r = sub.r(i);
    }
  }
  rep.passed = rep.max_violation <= 0.0;

  // K-difference term of the regularization chain,
  //   |grad v| (tangential trace) - sqrt(q + eps^2) (projected trace),
  // bounded by 2 eps (n+1) lambda.
  rep.kterm_bound = 2.0 * eps * (data.n + 1) * lambda;
  const Field dv = nodal_derivative(v);
  for (int i = 1; i < v.size() - 1; ++i) {
    const double r = sub.r(i);
    const double p = data.phi(r);
    const double slope = dv[i] / (p * p);
    const double q = slope * slope;
    const double w = std::sqrt(q + eps * eps);
    const double term2 = std::abs(slope) * (data.n * data.b(r)) -
                         w * (data.a(r) * eps * eps / (q + eps * eps) + data.n * data.b(r));
    rep.kterm_max = std::max(rep.kterm_max, std::abs(term2));
  }
  rep.kterm_ok = rep.kterm_max <= rep.kterm_bound * (1.0 + 1e-9) + rep.tol_grid;

  if (u_eps != nullptr) {
    rep.comparison_checked = true;
    rep.comparison_ok = true;
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < u.size(); ++i) {
      const int gi = grid.nodes - u.size() + i;
      const double excess = (*u_eps)[gi] - v[i];
      worst = std::max(worst, excess);
      if (excess > rep.tol_grid) rep.comparison_ok = false;
    }
    rep.comparison_worst = worst;
    const int n = grid.nodes;
    const double du_out = (3.0 * (*u_eps)[n - 1] - 4.0 * (*u_eps)[n - 2] + (*u_eps)[n - 3]) /
                          (2.0 * grid.h);
    const double p_out = data.phi(grid.r_out);
    rep.boundary_gradient = std::abs(du_out) / (p_out * p_out);
    rep.boundary_gradient_bound = (2.0 + 1.0 / (tau * tau)) * rep.measured_c0;
  }
  return rep;
}

}  // namespace motsflow
