#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "motsflow/grid.hpp"
#include "motsflow/initial_data.hpp"

namespace motsflow {

/// Area of the unit n-sphere, 2 pi^{(n+1)/2} / Gamma((n+1)/2).
inline double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

/// |Sigma_r| = omega_n (phi^2 r)^n.
inline double sphere_area(const InitialDataSet& data, double r) {
  const double p = data.phi(r);
  return unit_sphere_area(data.n) * std::pow(p * p * r, data.n);
}

/// Geometry of the coordinate sphere of radius r. Sign convention: nu is the
/// outward (increasing-r) unit normal, H = div(nu) > 0 for round spheres in
/// flat space, P = tr_Sigma K = n b(r), theta_plus = H + P.
struct SphereGeometry {
  double r = 0.0;
  double area_radius = 0.0;  // phi^2 r
  double H = 0.0;
  double P = 0.0;
  double theta_plus = 0.0;
};

inline SphereGeometry sphere_geometry(const InitialDataSet& data, double r) {
  const double p = data.phi(r);
  const double dp = data.dphi(r);
  SphereGeometry g;
  g.r = r;
  g.area_radius = p * p * r;
  g.H = (data.n / (p * p * r)) * (1.0 + 2.0 * r * dp / p);
  g.P = data.n * data.b(r);
  g.theta_plus = g.H + g.P;
  return g;
}

inline double theta_plus(const InitialDataSet& data, double r) {
  return sphere_geometry(data, r).theta_plus;
}

/// Mean curvature from the first variation of area, dA/drho = H A with
/// proper radius drho = phi^2 dr. Independent derivation used to cross-check
/// the closed form in sphere_geometry.
inline double mean_curvature_area_variation(const InitialDataSet& data, double r, double dr = 1e-5) {
  const double p = data.phi(r);
  return (sphere_area(data, r + dr) - sphere_area(data, r - dr)) / (2.0 * dr * p * p * sphere_area(data, r));
}

struct MotsEstimate {
  bool found = false;
  double oracle_radius = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  std::string method;  // "bisection" or "no_sign_change"
};

/// Dense scan of theta_plus from the outer end of the bracket downward for
/// the OUTERMOST sign change, refined by bisection. Returns found=false when
/// theta_plus > 0 throughout.
inline MotsEstimate find_mots_radius_bruteforce(const InitialDataSet& data, double lo, double hi,
                                                int scan_samples = 20000, double tol = 1e-10) {
  if (!(lo < hi)) throw std::invalid_argument("find_mots_radius_bruteforce: bad bracket");
  MotsEstimate est;
  est.bracket_lo = lo;
  est.bracket_hi = hi;
  if (scan_samples < 10000) scan_samples = 10000;
  double r_hi = hi, th_hi = theta_plus(data, hi);
  if (th_hi <= 0.0)
    throw MotsflowError("find_mots_radius_bruteforce: theta_plus(bracket_hi) <= 0, outer end not untrapped");
  double r_cross_lo = 0.0, r_cross_hi = 0.0;
  bool crossed = false;
  for (int i = 1; i <= scan_samples; ++i) {
    const double r = hi - (hi - lo) * i / scan_samples;
    const double th = theta_plus(data, r);
    if (th <= 0.0) {
      crossed = true;
      r_cross_lo = r;
      r_cross_hi = r_hi;
      break;
    }
    r_hi = r;
    th_hi = th;
  }
  if (!crossed) {
    est.found = false;
    est.method = "no_sign_change";
    return est;
  }
  while (r_cross_hi - r_cross_lo > tol) {
    const double mid = 0.5 * (r_cross_lo + r_cross_hi);
    if (theta_plus(data, mid) <= 0.0)
      r_cross_lo = mid;
    else
      r_cross_hi = mid;
  }
  est.found = true;
  est.oracle_radius = 0.5 * (r_cross_lo + r_cross_hi);
  est.method = "bisection";
  return est;
}

/// Gradient function v = sqrt(1 + |grad u|^2) with |grad u|^2 = (u')^2/phi^4
/// in the conformal metric. Centered differences, one-sided second order at
/// the ends.
inline Field nodal_derivative(const Field& u) {
  const int n = u.size();
  const double h = u.grid.h;
  Field d(u.grid);
  for (int i = 1; i < n - 1; ++i) d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
  d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
  d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
  return d;
}

inline Field gradient_function(const InitialDataSet& data, const Field& u) {
  Field du = nodal_derivative(u);
  Field v(u.grid);
  for (int i = 0; i < u.size(); ++i) {
    const double p = data.phi(u.grid.r(i));
    const double g = du[i] / (p * p);
    v[i] = std::sqrt(1.0 + g * g);
  }
  return v;
}

}  // namespace motsflow
