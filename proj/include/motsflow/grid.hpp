#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace motsflow {

struct MotsflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform 1-D grid on the coordinate annulus [r_in, r_out].
struct RadialGrid {
  double r_in = 0.0;
  double r_out = 0.0;
  int nodes = 0;
  double h = 0.0;

  RadialGrid() = default;
  RadialGrid(double rin, double rout, int n) : r_in(rin), r_out(rout), nodes(n) {
    if (!(rin > 0.0) || !(rout > rin))
      throw std::invalid_argument("RadialGrid: need 0 < r_in < r_out");
    if (n < 16) throw std::invalid_argument("RadialGrid: need at least 16 nodes");
    h = (rout - rin) / static_cast<double>(n - 1);
  }

  double r(int i) const { return r_in + h * static_cast<double>(i); }
  double r_half(int i) const { return r_in + h * (static_cast<double>(i) + 0.5); }
};

inline bool same_grid(const RadialGrid& a, const RadialGrid& b) {
  return a.r_in == b.r_in && a.r_out == b.r_out && a.nodes == b.nodes;
}

/// Nodal scalar values on a RadialGrid.
struct Field {
  RadialGrid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const RadialGrid& g, double fill = 0.0)
      : grid(g), values(static_cast<std::size_t>(g.nodes), fill) {}

  int size() const { return grid.nodes; }
  double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
  double max_value() const {
    double m = values.empty() ? 0.0 : values[0];
    for (double v : values) m = std::max(m, v);
    return m;
  }
  double min_value() const {
    double m = values.empty() ? 0.0 : values[0];
    for (double v : values) m = std::min(m, v);
    return m;
  }
  double inf_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Tridiagonal matrix in band storage. lower[0] and upper[n-1] are unused.
struct Tridiagonal {
  std::vector<double> lower, diag, upper;

  explicit Tridiagonal(int n = 0)
      : lower(static_cast<std::size_t>(n), 0.0),
        diag(static_cast<std::size_t>(n), 0.0),
        upper(static_cast<std::size_t>(n), 0.0) {}

  int size() const { return static_cast<int>(diag.size()); }

  std::vector<double> apply(const std::vector<double>& x) const {
    const int n = size();
    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      double v = diag[i] * x[i];
      if (i > 0) v += lower[i] * x[i - 1];
      if (i < n - 1) v += upper[i] * x[i + 1];
      y[i] = v;
    }
    return y;
  }
};

/// Gaussian elimination with partial pivoting; the extra band u2 holds fill-in.
inline std::vector<double> solve_tridiagonal(Tridiagonal m, std::vector<double> rhs) {
  const int n = m.size();
  if (static_cast<int>(rhs.size()) != n) throw std::invalid_argument("solve_tridiagonal: size mismatch");
  std::vector<double> u2(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n - 1; ++i) {
    if (std::abs(m.lower[i + 1]) > std::abs(m.diag[i])) {
      std::swap(m.diag[i], m.lower[i + 1]);
      std::swap(m.upper[i], m.diag[i + 1]);
      if (i + 2 < n) std::swap(u2[i], m.upper[i + 1]);
      std::swap(rhs[i], rhs[i + 1]);
    }
    if (m.diag[i] == 0.0) throw MotsflowError("solve_tridiagonal: singular matrix");
    const double f = m.lower[i + 1] / m.diag[i];
    m.lower[i + 1] = 0.0;
    m.diag[i + 1] -= f * m.upper[i];
    if (i + 2 < n) m.upper[i + 1] -= f * u2[i];
    rhs[i + 1] -= f * rhs[i];
  }
  if (m.diag[n - 1] == 0.0) throw MotsflowError("solve_tridiagonal: singular matrix");
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double v = rhs[i];
    if (i + 1 < n) v -= m.upper[i] * x[i + 1];
    if (i + 2 < n) v -= u2[i] * x[i + 2];
    x[i] = v / m.diag[i];
  }
  return x;
}

/// Cubic spline through (x_i, y_i); C2, so second derivatives of
/// interpolated profiles are continuous. Not-a-knot ends (natural ends for
/// exactly three samples).
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    if (n < 3 || y_.size() != x_.size())
      throw std::invalid_argument("CubicSpline: need >= 3 samples with matching sizes");
    for (int i = 0; i + 1 < n; ++i)
      if (!(x_[i + 1] > x_[i])) throw std::invalid_argument("CubicSpline: abscissae must increase");
    auto hh = [this](int i) { return x_[i + 1] - x_[i]; };
    auto rr = [this, hh](int i) {
      return (y_[i + 1] - y_[i]) / hh(i) - (y_[i] - y_[i - 1]) / hh(i - 1);
    };
    m2_.assign(static_cast<std::size_t>(n), 0.0);
    if (n == 3) {
      Tridiagonal m(3);
      m.diag[0] = m.diag[2] = 1.0;
      m.lower[1] = hh(0) / 6.0;
      m.diag[1] = (hh(0) + hh(1)) / 3.0;
      m.upper[1] = hh(1) / 6.0;
      std::vector<double> rhs{0.0, rr(1), 0.0};
      m2_ = solve_tridiagonal(m, rhs);
      return;
    }
    // Not-a-knot: f''' continuous at x_1 and x_{n-2}; the end moments are
    // eliminated, the reduced system in M_1..M_{n-2} stays tridiagonal.
    const int k = n - 2;
    Tridiagonal m(k);
    std::vector<double> rhs(static_cast<std::size_t>(k), 0.0);
    for (int i = 1; i <= n - 2; ++i) {
      const int row = i - 1;
      if (row > 0) m.lower[row] = hh(i - 1) / 6.0;
      m.diag[row] = (hh(i - 1) + hh(i)) / 3.0;
      if (row < k - 1) m.upper[row] = hh(i) / 6.0;
      rhs[row] = rr(i);
    }
    {  // left end: M_0 = ((h0 + h1) M_1 - h0 M_2) / h1
      const double h0 = hh(0), h1 = hh(1);
      m.diag[0] += h0 * (h0 + h1) / (6.0 * h1);
      m.upper[0] += -h0 * h0 / (6.0 * h1);
    }
    {  // right end: M_{n-1} = ((ha + hb) M_{n-2} - hb M_{n-3}) / ha
      const double ha = hh(n - 3), hb = hh(n - 2);
      m.diag[k - 1] += hb * (ha + hb) / (6.0 * ha);
      m.lower[k - 1] += -hb * hb / (6.0 * ha);
    }
    const std::vector<double> inner = solve_tridiagonal(m, rhs);
    for (int i = 1; i <= n - 2; ++i) m2_[i] = inner[static_cast<std::size_t>(i - 1)];
    m2_[0] = ((hh(0) + hh(1)) * m2_[1] - hh(0) * m2_[2]) / hh(1);
    m2_[n - 1] = ((hh(n - 3) + hh(n - 2)) * m2_[n - 2] - hh(n - 2) * m2_[n - 3]) / hh(n - 3);
  }

  double eval(double x) const {
    const auto [i, h] = locate(x);
    const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m2_[i] + (b * b * b - b) * m2_[i + 1]) * h * h / 6.0;
  }
  double deriv(double x) const {
    const auto [i, h] = locate(x);
    const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           ((3.0 * b * b - 1.0) * m2_[i + 1] - (3.0 * a * a - 1.0) * m2_[i]) * h / 6.0;
  }
  double deriv2(double x) const {
    const auto [i, h] = locate(x);
    const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
    return a * m2_[i] + b * m2_[i + 1];
  }
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  struct Loc {
    int i;
    double h;
  };
  Loc locate(double x) const {
    int lo = 0, hi = static_cast<int>(x_.size()) - 1;
    if (x <= x_[0]) return {0, x_[1] - x_[0]};
    if (x >= x_.back()) return {hi - 1, x_[hi] - x_[hi - 1]};
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (x_[mid] <= x ? lo : hi) = mid;
    }
    return {lo, x_[lo + 1] - x_[lo]};
  }

  std::vector<double> x_, y_, m2_;
};

}  // namespace motsflow
