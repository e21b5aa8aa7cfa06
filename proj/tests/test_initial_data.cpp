#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "motsflow/geometry.hpp"
#include "motsflow/initial_data.hpp"

using namespace motsflow;

namespace {

DataFamily flat_family(double rin = 0.05, double rout = 1.0) {
  DataFamily f;
  f.tag = FamilyTag::flat;
  f.n = 2;
  f.r_in = rin;
  f.r_out = rout;
  return f;
}

DataFamily schwarzschild_family(double m = 1.0, double rin = 0.1, double rout = 2.0) {
  DataFamily f;
  f.tag = FamilyTag::schwarzschild_isotropic;
  f.n = 2;
  f.mass = m;
  f.r_in = rin;
  f.r_out = rout;
  return f;
}

DataFamily trace_family(double c, double rin = 0.1, double rout = 1.0) {
  DataFamily f;
  f.tag = FamilyTag::constant_trace;
  f.n = 2;
  f.trace_c = c;
  f.r_in = rin;
  f.r_out = rout;
  return f;
}

DataFamily pinch_family(double c = 3.0, double r0 = 0.7, double w = 0.2) {
  DataFamily f;
  f.tag = FamilyTag::gaussian_pinch;
  f.n = 2;
  f.pinch_c = c;
  f.pinch_r0 = r0;
  f.pinch_w = w;
  f.r_in = 0.2;
  f.r_out = 1.5;
  return f;
}

// Assembles K in the coordinate frame of g = phi^4(dr^2 + r^2 dOmega^2) and
// traces it against g^{-1}; independent of the a + n b shortcut.
double traced_k(const InitialDataSet& d, double r) {
  const double p4 = std::pow(d.phi(r), 4);
  const double g_rr = p4, g_tt = p4 * r * r;
  const double k_rr = d.a(r) * g_rr;
  const double k_tt = d.b(r) * g_tt;
  return k_rr / g_rr + d.n * (k_tt / g_tt);
}

}  // namespace

TEST(InitialData, FlatFamilyIsEuclideanTimeSymmetric) {
  const InitialDataSet d = make_dataset(flat_family());
  for (double r : {0.05, 0.3, 0.77, 1.0}) {
    EXPECT_DOUBLE_EQ(d.phi(r), 1.0);
    EXPECT_DOUBLE_EQ(d.a(r), 0.0);
    EXPECT_DOUBLE_EQ(d.b(r), 0.0);
  }
  EXPECT_DOUBLE_EQ(eigen_bound(d), 0.0);
}

TEST(InitialData, SchwarzschildIsotropicProfile) {
  const InitialDataSet d = make_dataset(schwarzschild_family(1.0));
  EXPECT_DOUBLE_EQ(d.phi(0.5), 2.0);  // phi(M/2) = 1 + M/(2 r)
  EXPECT_DOUBLE_EQ(d.a(0.5), 0.0);
  EXPECT_DOUBLE_EQ(d.b(0.5), 0.0);
  EXPECT_DOUBLE_EQ(d.dphi(0.5), -2.0);
  EXPECT_DOUBLE_EQ(eigen_bound(d), 0.0);
}

TEST(InitialData, SchwarzschildRejectsBadParameters) {
  EXPECT_THROW(make_dataset(schwarzschild_family(-1.0)), std::invalid_argument);
  EXPECT_THROW(make_dataset(schwarzschild_family(1.0, 0.6, 2.0)), std::invalid_argument);
  DataFamily f = flat_family();
  f.r_in = 0.0;
  EXPECT_THROW(make_dataset(f), std::invalid_argument);
  f.r_in = -0.2;
  EXPECT_THROW(make_dataset(f), std::invalid_argument);
}

TEST(InitialData, ConstantTraceEigenvalues) {
  const InitialDataSet d = make_dataset(trace_family(0.3));
  EXPECT_DOUBLE_EQ(d.a(0.4), 0.3);
  EXPECT_DOUBLE_EQ(d.b(0.4), 0.3);
  EXPECT_NEAR(d.trace_k(0.4), 0.9, 1e-15);  // (n+1) c
  EXPECT_DOUBLE_EQ(eigen_bound(d), 0.3);
}

TEST(InitialData, GaussianPinchEigenBound) {
  const InitialDataSet d = make_dataset(pinch_family());
  EXPECT_NEAR(d.b(0.7), -3.0, 1e-15);
  EXPECT_NEAR(eigen_bound(d), 3.0, 1e-6);  // dense scan hits the peak
}

TEST(InitialData, TraceIdentityAcrossFamilies) {
  std::mt19937_64 rng(0x5eed0001);
  const std::array<InitialDataSet, 4> sets = {
      make_dataset(flat_family()), make_dataset(schwarzschild_family()),
      make_dataset(trace_family(-0.4)), make_dataset(pinch_family())};
  for (const auto& d : sets) {
    std::uniform_real_distribution<double> radius(d.r_in, d.r_out);
    for (int k = 0; k < 40; ++k) {
      const double r = radius(rng);
      const double expected = d.a(r) + d.n * d.b(r);
      const double got = traced_k(d, r);
      const double scale = std::max(1.0, std::abs(expected));
      EXPECT_NEAR(got, expected, 1e-12 * scale);
    }
  }
}

TEST(InitialData, EpsGate) {
  EXPECT_DOUBLE_EQ(eps_gate(make_dataset(flat_family())), 0.5);
  // lambda = 1 => 1/((n+1) lambda) = 1/3 < 1/2
  EXPECT_NEAR(eps_gate(make_dataset(trace_family(1.0))), 1.0 / 3.0, 1e-15);
}

TEST(InteriorModification, ZeroProfileIsIdentity) {
  const InitialDataSet d = make_dataset(trace_family(0.3));
  const InitialDataSet d2 =
      apply_interior_modification(d, [](double) { return 0.0; }, 0.2, 0.5);
  for (double r : {0.15, 0.33, 0.8}) {
    EXPECT_DOUBLE_EQ(d2.a(r), d.a(r));
    EXPECT_DOUBLE_EQ(d2.b(r), d.b(r));
  }
}

TEST(InteriorModification, TraceDropsByConstant) {
  // phi_mod = 0.2 on [r_in, r_mid], zero outside: tr K' = -(n+1) 0.2/n = -0.3.
  const InitialDataSet d = make_dataset(flat_family(0.1, 1.0));
  const double r_mid = 0.5;
  const InitialDataSet d2 = apply_interior_modification(
      d, [r_mid](double r) { return r <= r_mid ? 0.2 : 0.0; }, 0.1, r_mid);
  EXPECT_NEAR(d2.trace_k(0.3), -0.3, 1e-15);
  EXPECT_DOUBLE_EQ(d2.trace_k(0.8), 0.0);
}

TEST(InteriorModification, RejectsUnsupportedProfile) {
  const InitialDataSet d = make_dataset(flat_family(0.1, 1.0));
  EXPECT_THROW(
      apply_interior_modification(d, [](double) { return 0.2; }, 0.3, 0.5),
      std::invalid_argument);
}

TEST(InteriorModification, AdditiveInTheProfile) {
  const InitialDataSet d = make_dataset(pinch_family());
  auto bump = [](double center, double half, double amp) {
    return [=](double r) {
      const double x = (r - center) / half;
      if (std::abs(x) >= 1.0) return 0.0;
      const double y = 1.0 - x * x;
      return amp * y * y;
    };
  };
  const auto p1 = bump(0.6, 0.2, 0.7), p2 = bump(0.7, 0.1, -0.3);
  const auto sum = [p1, p2](double r) { return p1(r) + p2(r); };
  const InitialDataSet one_then_two =
      apply_interior_modification(apply_interior_modification(d, p1, 0.4, 0.8), p2, 0.4, 0.8);
  const InitialDataSet combined = apply_interior_modification(d, sum, 0.4, 0.8);
  for (int k = 0; k <= 100; ++k) {
    const double r = 0.2 + 1.3 * k / 100.0;
    EXPECT_NEAR(one_then_two.a(r), combined.a(r), 1e-12);
    EXPECT_NEAR(one_then_two.b(r), combined.b(r), 1e-12);
  }
}

TEST(InteriorModification, ThetaShiftLaw) {
  const InitialDataSet d = make_dataset(schwarzschild_family());
  auto bump = [](double r) {
    const double x = (r - 0.8) / 0.3;
    if (std::abs(x) >= 1.0) return 0.0;
    const double y = 1.0 - x * x;
    return 0.4 * y * y;
  };
  const InitialDataSet d2 = apply_interior_modification(d, bump, 0.5, 1.1);
  for (int k = 0; k <= 200; ++k) {
    const double r = 0.1 + 1.9 * k / 200.0;
    const double shift = theta_plus(d, r) - theta_plus(d2, r);
    EXPECT_NEAR(shift, bump(r), 1e-12);
  }
}

TEST(CustomFamily, TabulatedProfileRoundTrip) {
  const std::string path = ::testing::TempDir() + "phi_table.txt";
  {
    std::ofstream out(path);
    out.precision(17);
    out << "# r value\n";
    for (int i = 0; i <= 400; ++i) {
      const double r = 0.1 + 0.9 * i / 400.0;
      out << r << " " << 1.0 + 0.2 * std::sin(3.0 * r) << "\n";
    }
  }
  DataFamily f;
  f.tag = FamilyTag::custom;
  f.n = 2;
  f.r_in = 0.12;
  f.r_out = 0.98;
  f.custom_phi = spline_profile(load_profile_table(path));
  const InitialDataSet d = make_dataset(f);
  for (double r : {0.2, 0.5, 0.9}) {
    EXPECT_NEAR(d.phi(r), 1.0 + 0.2 * std::sin(3.0 * r), 1e-8);
    EXPECT_NEAR(d.dphi(r), 0.6 * std::cos(3.0 * r), 1e-4);
  }
  EXPECT_DOUBLE_EQ(d.a(0.5), 0.0);
  std::remove(path.c_str());
}

TEST(CustomFamily, TabulatedSchwarzschildReproducesTheGeometry) {
  // phi = 1 + M/(2r) sampled and re-interpolated: theta_plus and the root
  // must match the analytic family to spline accuracy.
  const std::string path = ::testing::TempDir() + "phi_schw.txt";
  {
    std::ofstream out(path);
    out.precision(17);
    for (int i = 0; i <= 800; ++i) {
      const double r = 0.1 + 1.9 * i / 800.0;
      out << r << " " << 1.0 + 0.5 / r << "\n";
    }
  }
  DataFamily f;
  f.tag = FamilyTag::custom;
  f.n = 2;
  f.r_in = 0.12;
  f.r_out = 1.95;
  f.custom_phi = spline_profile(load_profile_table(path));
  const InitialDataSet d = make_dataset(f);

  DataFamily ref;
  ref.tag = FamilyTag::schwarzschild_isotropic;
  ref.n = 2;
  ref.mass = 1.0;
  ref.r_in = 0.12;
  ref.r_out = 1.95;
  const InitialDataSet exact = make_dataset(ref);
  for (double r : {0.2, 0.5, 1.0, 1.8}) {
    EXPECT_NEAR(theta_plus(d, r), theta_plus(exact, r), 1e-5);
  }
  const auto est = find_mots_radius_bruteforce(d, 0.12, 1.95);
  ASSERT_TRUE(est.found);
  EXPECT_NEAR(est.oracle_radius, 0.5, 1e-4);
  std::remove(path.c_str());
}

TEST(CustomFamily, RejectsNonPositiveConformalFactor) {
  DataFamily f;
  f.tag = FamilyTag::custom;
  f.n = 2;
  f.r_in = 0.1;
  f.r_out = 1.0;
  f.custom_phi = Profile{[](double r) { return 0.5 - r; },
                         [](double) { return -1.0; },
                         [](double) { return 0.0; }};
  EXPECT_THROW(make_dataset(f), std::invalid_argument);
}
