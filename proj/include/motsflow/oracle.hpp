#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "motsflow/geometry.hpp"
#include "motsflow/grid.hpp"
#include "motsflow/initial_data.hpp"

namespace motsflow {

struct QueryInsideHorizon : MotsflowError {
  using MotsflowError::MotsflowError;
};
struct GuardBand : MotsflowError {
  using MotsflowError::MotsflowError;
};
struct NonMonotone : MotsflowError {
  double r_lo, r_hi;
  NonMonotone(const std::string& msg, double lo, double hi) : MotsflowError(msg), r_lo(lo), r_hi(hi) {}
};

struct ArrivalResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Exact arrival time of the inward flow started on the sphere of radius R:
/// u*(r) = int_r^R phi(rho)^2 / theta_plus(rho) drho (normal speed H + P,
/// proper radial length phi^2 dr). Divergent at a zero of theta_plus, so
/// queries are refused whenever theta_plus < guard_theta on [r, R].
inline ArrivalResult arrival_oracle_full(const InitialDataSet& data, double R, double r,
                                         double quad_tol = 1e-12, double guard_theta = 1e-6) {
  if (!(r <= R)) throw std::invalid_argument("arrival_oracle: need r <= R");
  if (r < data.r_in || R > data.r_out) throw std::invalid_argument("arrival_oracle: query outside domain");
  const int samples = 4096;
  for (int i = 0; i <= samples; ++i) {
    const double rho = r + (R - r) * i / samples;
    const double th = theta_plus(data, rho);
    if (th <= 0.0)
      throw QueryInsideHorizon("arrival_oracle: theta_plus <= 0 on [r, R]");
    if (th < guard_theta)
      throw GuardBand("arrival_oracle: theta_plus below guard band on [r, R]");
  }
  ArrivalResult res;
  if (r == R) return res;
  auto integrand = [&data](double rho) {
    const double p = data.phi(rho);
    return p * p / theta_plus(data, rho);
  };
  res.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      integrand, r, R, 20, quad_tol, &res.error_estimate);
  return res;
}

inline double arrival_oracle(const InitialDataSet& data, double R, double r,
                             double quad_tol = 1e-12, double guard_theta = 1e-6) {
  return arrival_oracle_full(data, R, r, quad_tol, guard_theta).value;
}

/// One-parameter family of coordinate spheres moving by null mean curvature,
/// dr/dt = -theta_plus(r)/phi(r)^2. bulk_energies holds the change of the
/// enclosed bulk integral int_{V_t} P dV, so that
/// d/dt(area + bulk) = -dissipation along the flow.
struct FlowTrajectory {
  std::vector<double> times;
  std::vector<double> radii;
  std::vector<double> areas;
  std::vector<double> bulk_energies;
  std::vector<double> dissipation;  // int_{Sigma_t} (H+P)^2 dmu
  std::string stop_reason;          // "t_max" | "guard_band" | "domain_end"
  double dt = 0.0;

  int size() const { return static_cast<int>(times.size()); }
};

namespace detail {

struct FlowState {
  double r;
  double bulk;
};

inline FlowState flow_rhs(const InitialDataSet& data, const FlowState& s) {
  const SphereGeometry g = sphere_geometry(data, s.r);
  const double p = data.phi(s.r);
  return {-g.theta_plus / (p * p), -g.theta_plus * g.P * sphere_area(data, s.r)};
}

inline FlowState rk4_step(const InitialDataSet& data, const FlowState& s, double dt) {
  const FlowState k1 = flow_rhs(data, s);
  const FlowState s2{s.r + 0.5 * dt * k1.r, s.bulk + 0.5 * dt * k1.bulk};
  const FlowState k2 = flow_rhs(data, s2);
  const FlowState s3{s.r + 0.5 * dt * k2.r, s.bulk + 0.5 * dt * k2.bulk};
  const FlowState k3 = flow_rhs(data, s3);
  const FlowState s4{s.r + dt * k3.r, s.bulk + dt * k3.bulk};
  const FlowState k4 = flow_rhs(data, s4);
  return {s.r + dt / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r),
          s.bulk + dt / 6.0 * (k1.bulk + 2.0 * k2.bulk + 2.0 * k3.bulk + k4.bulk)};
}

// Signed margin to the stop set; negative means stopped.
inline double flow_margin(const InitialDataSet& data, double r, double guard_theta) {
  const double to_domain = std::min(r - data.r_in, data.r_out - r);
  const double th = std::abs(theta_plus(data, r)) - guard_theta;
  return std::min(to_domain, th);
}

}  // namespace detail

/// RK4 with fixed dt; an event bisection locates the guard-band or domain
/// crossing within the final step. Expanding starts (theta_plus(r0) < 0) are
/// integrated with the same equation, giving the outward leaf flow.
inline FlowTrajectory flow_spheres(const InitialDataSet& data, double r0, double dt, double t_max,
                                   double guard_theta = 1e-6) {
  if (!(dt > 0.0) || !(t_max > 0.0)) throw std::invalid_argument("flow_spheres: need dt, t_max > 0");
  if (r0 < data.r_in || r0 > data.r_out) throw std::invalid_argument("flow_spheres: r0 outside domain");
  if (std::abs(theta_plus(data, r0)) < guard_theta)
    throw GuardBand("flow_spheres: start radius already inside the guard band");

  FlowTrajectory traj;
  traj.dt = dt;
  auto record = [&](double t, const detail::FlowState& s) {
    const SphereGeometry g = sphere_geometry(data, s.r);
    const double area = sphere_area(data, s.r);
    traj.times.push_back(t);
    traj.radii.push_back(s.r);
    traj.areas.push_back(area);
    traj.bulk_energies.push_back(s.bulk);
    traj.dissipation.push_back(g.theta_plus * g.theta_plus * area);
  };

  detail::FlowState s{r0, 0.0};
  double t = 0.0;
  record(t, s);
  while (true) {
    const double remaining = t_max - t;
    if (remaining <= 1e-9 * dt) break;  // avoid a degenerate final micro-step
    const double step = std::min(dt, remaining);
    const detail::FlowState next = detail::rk4_step(data, s, step);
    if (!std::isfinite(next.r)) {
      traj.stop_reason = "domain_end";
      break;
    }
    if (detail::flow_margin(data, next.r, guard_theta) <= 0.0) {
      // Bisect the step length to the event.
      double lo = 0.0, hi = step;
      detail::FlowState at_hi = next;
      for (int it = 0; it < 80 && hi - lo > 1e-14 * dt; ++it) {
        const double mid = 0.5 * (lo + hi);
        const detail::FlowState sm = detail::rk4_step(data, s, mid);
        if (detail::flow_margin(data, sm.r, guard_theta) <= 0.0) {
          hi = mid;
          at_hi = sm;
        } else {
          lo = mid;
        }
      }
      t += hi;
      record(t, at_hi);
      const double to_domain = std::min(at_hi.r - data.r_in, data.r_out - at_hi.r);
      traj.stop_reason = (to_domain <= std::abs(theta_plus(data, at_hi.r)) - guard_theta)
                             ? "domain_end"
                             : "guard_band";
      return traj;
    }
    t += step;
    s = next;
    record(t, s);
  }
  if (traj.stop_reason.empty()) traj.stop_reason = "t_max";
  return traj;
}

/// Inverts a strictly monotone trajectory: the flow time at which the radius
/// r is reached, via cubic Hermite interpolation on the bracketing step.
inline double flow_time_at_radius(const InitialDataSet& data, const FlowTrajectory& traj, double r) {
  const int n = traj.size();
  if (n < 2) throw std::invalid_argument("flow_time_at_radius: trajectory too short");
  const bool shrinking = traj.radii.back() < traj.radii.front();
  auto within = [&](double lo_r, double hi_r) { return r >= lo_r - 1e-14 && r <= hi_r + 1e-14; };
  int k = -1;
  for (int i = 0; i + 1 < n; ++i) {
    const double ra = traj.radii[i], rb = traj.radii[i + 1];
    if (shrinking ? within(rb, ra) : within(ra, rb)) {
      k = i;
      break;
    }
  }
  if (k < 0) throw std::invalid_argument("flow_time_at_radius: radius not reached by trajectory");
  const double t0 = traj.times[k], t1 = traj.times[k + 1], dt = t1 - t0;
  const double r0 = traj.radii[k], r1 = traj.radii[k + 1];
  auto rdot = [&data](double radius) {
    const double p = data.phi(radius);
    return -theta_plus(data, radius) / (p * p);
  };
  const double m0 = rdot(r0) * dt, m1 = rdot(r1) * dt;
  auto hermite = [&](double tau) {
    const double tau2 = tau * tau, tau3 = tau2 * tau;
    return (2.0 * tau3 - 3.0 * tau2 + 1.0) * r0 + (tau3 - 2.0 * tau2 + tau) * m0 +
           (-2.0 * tau3 + 3.0 * tau2) * r1 + (tau3 - tau2) * m1;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool past = shrinking ? (hermite(mid) <= r) : (hermite(mid) >= r);
    (past ? hi : lo) = mid;
  }
  return t0 + 0.5 * (lo + hi) * dt;
}

/// Max relative deviation of the steepest-descent identity
/// d/dt(area + bulk) = -dissipation, central differences at interior samples.
inline double energy_monotonicity_check(const FlowTrajectory& traj) {
  const int n = traj.size();
  if (n < 10) throw std::invalid_argument("energy_monotonicity_check: need >= 10 samples");
  double worst = 0.0;
  for (int k = 1; k + 1 < n; ++k) {
    const double dp = traj.times[k + 1] - traj.times[k];
    const double dm = traj.times[k] - traj.times[k - 1];
    const double fp = traj.areas[k + 1] + traj.bulk_energies[k + 1];
    const double f0 = traj.areas[k] + traj.bulk_energies[k];
    const double fm = traj.areas[k - 1] + traj.bulk_energies[k - 1];
    const double dfdt = (dm * dm * fp - dp * dp * fm + (dp * dp - dm * dm) * f0) /
                        (dp * dm * (dp + dm));
    const double diss = traj.dissipation[k];
    if (diss <= 0.0) continue;
    worst = std::max(worst, std::abs(dfdt + diss) / diss);
  }
  return worst;
}

enum class LevelStatus { found, below_range, above_range };

struct LevelCrossing {
  LevelStatus status = LevelStatus::found;
  double radius = 0.0;
};

/// Linear-interpolated crossing u = t for a field that decreases in r on its
/// region (Sigma_t as the boundary of the superlevel set {u > t}).
inline LevelCrossing extract_level_set(const Field& u, double t) {
  const int n = u.size();
  for (int i = 0; i + 1 < n; ++i)
    if (u[i + 1] >= u[i])
      throw NonMonotone("extract_level_set: field not strictly decreasing in r",
                        u.grid.r(i), u.grid.r(i + 1));
  if (t > u[0]) return {LevelStatus::above_range, 0.0};
  if (t < u[n - 1]) return {LevelStatus::below_range, 0.0};
  for (int i = 0; i + 1 < n; ++i) {
    if (u[i] >= t && t >= u[i + 1]) {
      const double frac = (u[i] - t) / (u[i] - u[i + 1]);
      return {LevelStatus::found, u.grid.r(i) + frac * u.grid.h};
    }
  }
  return {LevelStatus::found, u.grid.r_out};
}

}  // namespace motsflow
