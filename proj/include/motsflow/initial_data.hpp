#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "motsflow/grid.hpp"

namespace motsflow {

using ScalarFn = std::function<double(double)>;

/// Radial profile with analytic first and second derivatives.
struct Profile {
  ScalarFn f, df, d2f;

  double operator()(double r) const { return f(r); }
};

inline Profile constant_profile(double c) {
  return Profile{[c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
}

inline Profile spline_profile(std::shared_ptr<const CubicSpline> s) {
  return Profile{[s](double r) { return s->eval(r); },
                 [s](double r) { return s->deriv(r); },
                 [s](double r) { return s->deriv2(r); }};
}

/// Spherically symmetric initial data set (M^{n+1}, g, K) with conformally
/// flat metric g = phi(r)^4 (dr^2 + r^2 dOmega_n^2). K is diagonal in the
/// radial orthonormal frame: eigenvalue a(r) on the radial direction and
/// b(r) on each of the n tangential directions.
struct InitialDataSet {
  int n = 2;
  Profile conformal_factor;
  ScalarFn k_radial;
  ScalarFn k_tangential;
  double r_in = 0.0;
  double r_out = 0.0;

  double phi(double r) const { return conformal_factor.f(r); }
  double dphi(double r) const { return conformal_factor.df(r); }
  double d2phi(double r) const { return conformal_factor.d2f(r); }
  double a(double r) const { return k_radial(r); }
  double b(double r) const { return k_tangential(r); }
  double trace_k(double r) const { return a(r) + n * b(r); }
};

enum class FamilyTag { flat, schwarzschild_isotropic, constant_trace, gaussian_pinch, custom };

inline std::string family_name(FamilyTag t) {
  switch (t) {
    case FamilyTag::flat: return "flat";
    case FamilyTag::schwarzschild_isotropic: return "schwarzschild_isotropic";
    case FamilyTag::constant_trace: return "constant_trace";
    case FamilyTag::gaussian_pinch: return "gaussian_pinch";
    case FamilyTag::custom: return "custom";
  }
  return "?";
}

/// Named data families plus their parameters. Custom profiles are supplied
/// directly (the CLI loads them from tabulated files).
struct DataFamily {
  FamilyTag tag = FamilyTag::flat;
  int n = 2;
  double r_in = 0.0, r_out = 0.0;

  double mass = 1.0;                   // schwarzschild_isotropic
  double trace_c = 0.0;                // constant_trace
  double pinch_c = 3.0, pinch_r0 = 0.7, pinch_w = 0.2;  // gaussian_pinch

  Profile custom_phi;                  // custom
  ScalarFn custom_a, custom_b;
};

namespace detail {

inline void validate_dataset(const InitialDataSet& d) {
  if (d.n < 1) throw std::invalid_argument("initial data: dimension n must be >= 1");
  if (!(d.r_in > 0.0)) throw std::invalid_argument("initial data: r_in must be > 0");
  if (!(d.r_out > d.r_in)) throw std::invalid_argument("initial data: r_out must exceed r_in");
  const int samples = 2048;
  for (int i = 0; i <= samples; ++i) {
    const double r = d.r_in + (d.r_out - d.r_in) * i / samples;
    const double p = d.phi(r);
    if (!std::isfinite(p) || p <= 0.0)
      throw std::invalid_argument("initial data: conformal factor must be positive on the domain");
    if (!std::isfinite(d.a(r)) || !std::isfinite(d.b(r)))
      throw std::invalid_argument("initial data: K profiles must be finite on the domain");
  }
}

}  // namespace detail

inline InitialDataSet make_dataset(const DataFamily& family) {
  if (!std::isfinite(family.r_in) || !std::isfinite(family.r_out))
    throw std::invalid_argument("make_dataset: domain bounds must be finite");
  InitialDataSet d;
  d.n = family.n;
  d.r_in = family.r_in;
  d.r_out = family.r_out;
  switch (family.tag) {
    case FamilyTag::flat:
      d.conformal_factor = constant_profile(1.0);
      d.k_radial = [](double) { return 0.0; };
      d.k_tangential = [](double) { return 0.0; };
      break;
    case FamilyTag::schwarzschild_isotropic: {
      const double m = family.mass;
      if (!(m > 0.0)) throw std::invalid_argument("schwarzschild_isotropic: mass must be > 0");
      if (!(family.r_in < 0.5 * m && 0.5 * m < family.r_out))
        throw std::invalid_argument("schwarzschild_isotropic: domain must straddle r = M/2");
      d.conformal_factor = Profile{[m](double r) { return 1.0 + 0.5 * m / r; },
                                   [m](double r) { return -0.5 * m / (r * r); },
                                   [m](double r) { return m / (r * r * r); }};
      d.k_radial = [](double) { return 0.0; };
      d.k_tangential = [](double) { return 0.0; };
      break;
    }
    case FamilyTag::constant_trace: {
      const double c = family.trace_c;
      if (!std::isfinite(c)) throw std::invalid_argument("constant_trace: c must be finite");
      d.conformal_factor = constant_profile(1.0);
      d.k_radial = [c](double) { return c; };
      d.k_tangential = [c](double) { return c; };
      break;
    }
    case FamilyTag::gaussian_pinch: {
      const double c = family.pinch_c, r0 = family.pinch_r0, w = family.pinch_w;
      if (!(w > 0.0) || !std::isfinite(c) || !std::isfinite(r0))
        throw std::invalid_argument("gaussian_pinch: need finite c, r0 and width w > 0");
      d.conformal_factor = constant_profile(1.0);
      d.k_radial = [](double) { return 0.0; };
      d.k_tangential = [c, r0, w](double r) {
        const double t = (r - r0) / w;
        return -c * std::exp(-t * t);
      };
      break;
    }
    case FamilyTag::custom:
      if (!family.custom_phi.f) throw std::invalid_argument("custom family: missing phi profile");
      d.conformal_factor = family.custom_phi;
      d.k_radial = family.custom_a ? family.custom_a : ScalarFn([](double) { return 0.0; });
      d.k_tangential = family.custom_b ? family.custom_b : ScalarFn([](double) { return 0.0; });
      break;
  }
  detail::validate_dataset(d);
  return d;
}

/// lambda = max over a dense radial sample of max(|a|, |b|); gates the
/// admissible regularization via eps <= min{1/((n+1) lambda), 1/2}.
inline double eigen_bound(const InitialDataSet& data, int samples = 20000) {
  double m = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double r = data.r_in + (data.r_out - data.r_in) * i / samples;
    m = std::max(m, std::max(std::abs(data.a(r)), std::abs(data.b(r))));
  }
  return m;
}

inline double eps_gate(const InitialDataSet& data) {
  const double lam = eigen_bound(data);
  return lam > 0.0 ? std::min(1.0 / ((data.n + 1) * lam), 0.5) : 0.5;
}

/// New data K' = K - (phi_mod/n) g: both eigenvalue profiles drop by
/// phi_mod/n, so the null expansion of every coordinate sphere drops by
/// exactly phi_mod(r). phi_mod must vanish outside [support_lo, support_hi].
inline InitialDataSet apply_interior_modification(const InitialDataSet& data, ScalarFn phi_mod,
                                                  double support_lo, double support_hi) {
  if (!(support_lo < support_hi) || support_lo < data.r_in || support_hi > data.r_out)
    throw std::invalid_argument("apply_interior_modification: bad support interval");
  const int samples = 4096;
  for (int i = 0; i <= samples; ++i) {
    const double r = data.r_in + (data.r_out - data.r_in) * i / samples;
    if (r >= support_lo && r <= support_hi) continue;
    if (std::abs(phi_mod(r)) > 1e-12)
      throw std::invalid_argument("apply_interior_modification: profile not supported in the stated interval");
  }
  InitialDataSet out = data;
  const double n = static_cast<double>(data.n);
  const ScalarFn a_old = data.k_radial, b_old = data.k_tangential;
  out.k_radial = [a_old, phi_mod, n](double r) { return a_old(r) - phi_mod(r) / n; };
  out.k_tangential = [b_old, phi_mod, n](double r) { return b_old(r) - phi_mod(r) / n; };
  return out;
}

/// Two-column "r value" text file with '#' comments, cubic interpolation.
inline std::shared_ptr<const CubicSpline> load_profile_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open profile table: " + path);
  std::vector<double> x, y;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double r, v;
    if (ss >> r >> v) {
      x.push_back(r);
      y.push_back(v);
    }
  }
  if (x.size() < 3) throw std::invalid_argument("profile table needs at least 3 samples: " + path);
  return std::make_shared<CubicSpline>(std::move(x), std::move(y));
}

}  // namespace motsflow
