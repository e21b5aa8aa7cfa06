#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "motsflow/geometry.hpp"
#include "motsflow/grid.hpp"
#include "motsflow/initial_data.hpp"

namespace motsflow {

struct OperatorParams {
  double eps = 0.1;
  double kappa = 1.0;
  double s = 1.0;
};

// Radial reduction used by every discrete operator below.
//
// A radial vector field X = xi nu (nu the outward unit normal, xi the
// physical component) has divergence
//     div X = (A xi)' / (A phi^2),        A(r) = omega_n (phi^2 r)^n,
// because the proper radius obeys drho = phi^2 dr and dA/drho = H A.
// For a radial function w,
//     grad w = (w'/phi^2) nu,   q := |grad w|^2 = (w')^2 / phi^4,
// and for any constant c the projected trace of K reduces to
//     (g^{ij} - grad^i w grad^j w/(q + c^2)) K_ij = a c^2/(q + c^2) + n b,
// which recovers the full trace a + n b at q = 0 and the tangential trace
// n b as q -> infinity; both limits are exercised by the tests.
//
// Discretization: conservative flux form. Fluxes A xi live at half points,
// their divided difference is divided by (h phi^2 A) at nodes; q uses the
// centered slope. Dirichlet end nodes are not part of the residual.

struct DiscreteGeometry {
  RadialGrid grid;
  std::vector<double> A_node, m_node;  // area weight and phi^2 at nodes
  std::vector<double> A_half, m_half;  // ... at half points
  std::vector<double> a_node, b_node;  // K eigenvalue profiles at nodes
  int dim = 2;
};

inline DiscreteGeometry discretize(const InitialDataSet& data, const RadialGrid& grid) {
  DiscreteGeometry g;
  g.grid = grid;
  g.dim = data.n;
  const int n = grid.nodes;
  g.A_node.resize(n);
  g.m_node.resize(n);
  g.a_node.resize(n);
  g.b_node.resize(n);
  g.A_half.resize(n - 1);
  g.m_half.resize(n - 1);
  for (int i = 0; i < n; ++i) {
    const double r = grid.r(i);
    const double p = data.phi(r);
    g.A_node[i] = sphere_area(data, r);
    g.m_node[i] = p * p;
    g.a_node[i] = data.a(r);
    g.b_node[i] = data.b(r);
  }
  for (int i = 0; i < n - 1; ++i) {
    const double r = grid.r_half(i);
    const double p = data.phi(r);
    g.A_half[i] = sphere_area(data, r);
    g.m_half[i] = p * p;
  }
  return g;
}

namespace detail {

// Interior-node machinery shared by the operators. c2 is the regularization
// constant under the square root (1 for the rescaled problems, eps^2 for the
// unrescaled one).
struct OperatorEval {
  std::vector<double> div;   // flux-form divergence of grad w / sqrt(q + c2)
  std::vector<double> q;     // centered |grad w|^2
};

inline OperatorEval evaluate_core(const DiscreteGeometry& g, const Field& w, double c2) {
  const int n = g.grid.nodes;
  const double h = g.grid.h;
  OperatorEval ev;
  ev.div.assign(n, 0.0);
  ev.q.assign(n, 0.0);
  std::vector<double> flux(n - 1);
  std::vector<double> diff(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    diff[i] = w[i + 1] - w[i];
    const double slope = diff[i] / (h * g.m_half[i]);
    flux[i] = g.A_half[i] * slope / std::sqrt(slope * slope + c2);
  }
  for (int i = 1; i < n - 1; ++i) {
    ev.div[i] = (flux[i] - flux[i - 1]) / (h * g.m_node[i] * g.A_node[i]);
    const double slope = (diff[i] + diff[i - 1]) / (2.0 * h * g.m_node[i]);
    ev.q[i] = slope * slope;
  }
  return ev;
}

inline double projected_trace(const DiscreteGeometry& g, int i, double q, double c2) {
  return g.a_node[i] * c2 / (q + c2) + g.dim * g.b_node[i];
}

}  // namespace detail

/// F^s(w) = div(grad w / sqrt(q+1)) - s (g^{ij} - ...) K_ij
///          + s / (eps sqrt(q+1)) - kappa w,   interior nodes only.
inline Field residual_capillarity(const Field& w, const OperatorParams& p, const DiscreteGeometry& g) {
  if (!same_grid(w.grid, g.grid)) throw std::invalid_argument("residual_capillarity: grid mismatch");
  const auto ev = detail::evaluate_core(g, w, 1.0);
  Field res(w.grid);
  for (int i = 1; i < w.size() - 1; ++i) {
    const double q = ev.q[i];
    res[i] = ev.div[i] - p.s * detail::projected_trace(g, i, q, 1.0) +
             p.s / (p.eps * std::sqrt(q + 1.0)) - p.kappa * w[i];
  }
  return res;
}

inline Field residual_capillarity(const Field& w, const OperatorParams& p, const InitialDataSet& data) {
  return residual_capillarity(w, p, discretize(data, w.grid));
}

/// Residual of the unrescaled strictly elliptic problem:
/// div(grad u / sqrt(q+eps^2)) - (g^{ij} - ...) K_ij + 1/sqrt(q+eps^2).
inline Field residual_eps(const Field& u, double eps, const DiscreteGeometry& g) {
  if (!same_grid(u.grid, g.grid)) throw std::invalid_argument("residual_eps: grid mismatch");
  const double c2 = eps * eps;
  const auto ev = detail::evaluate_core(g, u, c2);
  Field res(u.grid);
  for (int i = 1; i < u.size() - 1; ++i) {
    const double q = ev.q[i];
    res[i] = ev.div[i] - detail::projected_trace(g, i, q, c2) + 1.0 / std::sqrt(q + c2);
  }
  return res;
}

inline Field residual_eps(const Field& u, double eps, const InitialDataSet& data) {
  return residual_eps(u, eps, discretize(data, u.grid));
}

/// Raw Jang operator, (g^{ij} - ...)(Hess_ij/sqrt(q+1) + K_ij), written via
/// the divergence identity as div(grad w/sqrt(q+1)) + projected trace of K.
inline Field residual_jang(const Field& w, const DiscreteGeometry& g) {
  if (!same_grid(w.grid, g.grid)) throw std::invalid_argument("residual_jang: grid mismatch");
  const auto ev = detail::evaluate_core(g, w, 1.0);
  Field res(w.grid);
  for (int i = 1; i < w.size() - 1; ++i)
    res[i] = ev.div[i] + detail::projected_trace(g, i, ev.q[i], 1.0);
  return res;
}

inline Field residual_jang(const Field& w, const InitialDataSet& data) {
  return residual_jang(w, discretize(data, w.grid));
}

enum class MepsMode { barrier, boundary };

/// The two comparison operators. Barrier mode (modified data K'):
///   M_eps(v) = (g^{ij} - ...)Hess_ij v - (g^{ij} - ...)K'_ij sqrt(q+1) + 1/eps,
/// boundary mode (original data, eps^2 regularization, constant +1):
///   M_eps(v) = (g^{ij} - ...)Hess_ij v - (g^{ij} - ...)K_ij sqrt(q+eps^2) + 1.
/// The projected Hessian equals sqrt(q+c^2) times the flux-form divergence.
inline Field operator_M_eps(const Field& v, double eps, const DiscreteGeometry& g, MepsMode mode) {
  if (!same_grid(v.grid, g.grid)) throw std::invalid_argument("operator_M_eps: grid mismatch");
  const double c2 = (mode == MepsMode::barrier) ? 1.0 : eps * eps;
  const double constant = (mode == MepsMode::barrier) ? 1.0 / eps : 1.0;
  const auto ev = detail::evaluate_core(g, v, c2);
  Field res(v.grid);
  for (int i = 1; i < v.size() - 1; ++i) {
    const double W = std::sqrt(ev.q[i] + c2);
    res[i] = W * (ev.div[i] - detail::projected_trace(g, i, ev.q[i], c2)) + constant;
  }
  return res;
}

inline Field operator_M_eps(const Field& v, double eps, const InitialDataSet& data, MepsMode mode) {
  return operator_M_eps(v, eps, discretize(data, v.grid), mode);
}

/// Exact linearization of residual_capillarity at w. Rows of the Dirichlet
/// end nodes are zero, matching the operator.
inline Tridiagonal assemble_jacobian(const Field& w, const OperatorParams& p, const DiscreteGeometry& g) {
  if (!same_grid(w.grid, g.grid)) throw std::invalid_argument("assemble_jacobian: grid mismatch");
  const int n = w.size();
  const double h = g.grid.h;
  Tridiagonal J(n);
  std::vector<double> gain(n - 1), diff(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    diff[i] = w[i + 1] - w[i];
    const double slope = diff[i] / (h * g.m_half[i]);
    const double W = std::sqrt(slope * slope + 1.0);
    gain[i] = g.A_half[i] / (W * W * W * h * g.m_half[i]);
  }
  for (int i = 1; i < n - 1; ++i) {
    const double D = h * g.m_node[i] * g.A_node[i];
    J.lower[i] = gain[i - 1] / D;
    J.upper[i] = gain[i] / D;
    J.diag[i] = -(gain[i] + gain[i - 1]) / D - p.kappa;
    const double gc = (diff[i] + diff[i - 1]) / (2.0 * h);
    const double m = g.m_node[i];
    const double q = (gc / m) * (gc / m);
    const double dq = gc / (h * m * m);  // dq/dw_{i+1} = +dq, dq/dw_{i-1} = -dq
    const double zq = p.s * g.a_node[i] / ((q + 1.0) * (q + 1.0)) -
                      p.s / (2.0 * p.eps) * std::pow(q + 1.0, -1.5);
    J.upper[i] += zq * dq;
    J.lower[i] -= zq * dq;
  }
  return J;
}

inline Tridiagonal assemble_jacobian(const Field& w, const OperatorParams& p, const InitialDataSet& data) {
  return assemble_jacobian(w, p, discretize(data, w.grid));
}

}  // namespace motsflow
