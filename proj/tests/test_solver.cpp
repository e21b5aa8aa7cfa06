#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "motsflow/initial_data.hpp"
#include "motsflow/oracle.hpp"
#include "motsflow/solver.hpp"

using namespace motsflow;

namespace {

InitialDataSet flat_data(double rin = 0.05, double rout = 1.0) {
  DataFamily f;
  f.tag = FamilyTag::flat;
  f.n = 2;
  f.r_in = rin;
  f.r_out = rout;
  return make_dataset(f);
}

InitialDataSet schwarzschild_data() {
  DataFamily f;
  f.tag = FamilyTag::schwarzschild_isotropic;
  f.n = 2;
  f.mass = 1.0;
  f.r_in = 0.1;
  f.r_out = 2.0;
  return make_dataset(f);
}

InitialDataSet trace_data(double c) {
  DataFamily f;
  f.tag = FamilyTag::constant_trace;
  f.n = 2;
  f.trace_c = c;
  f.r_in = 0.1;
  f.r_out = 1.0;
  return make_dataset(f);
}

}  // namespace

TEST(SolveCapillarity, FlatConvergesWithinSupremumBound) {
  const auto d = flat_data();
  const RadialGrid g(0.05, 1.0, 401);
  const OperatorParams p{0.1, 1.0, 1.0};
  const SolutionBundle b = solve_capillarity(d, g, p);
  EXPECT_LE(b.diagnostics.residual_inf_norm, b.diagnostics.newton_effective_tol);
  const double ceiling = 2.0 / (p.eps * p.kappa) * (1.0 + 1e-8);
  for (int i = 0; i < b.u_hat.size(); ++i) {
    EXPECT_GE(b.u_hat[i], -1e-10);
    EXPECT_LE(b.u_hat[i], ceiling);
  }
  EXPECT_TRUE(b.diagnostics.sup_bound_ok);
  // Interior-maximum inequality: kappa max u <= (n+1) lambda + 1/eps.
  EXPECT_LE(p.kappa * b.diagnostics.sup_u, (d.n + 1) * 0.0 + 1.0 / p.eps + 1e-8);
}

TEST(SolveCapillarity, SupBoundFormula) {
  // eps = 0.1, kappa = 0.01 -> ceiling 2/(eps kappa) = 2000.
  SolutionBundle b;
  b.u_hat = Field(RadialGrid(0.1, 1.0, 16), 0.0);
  b.params = {0.1, 0.01, 1.0};
  b.lambda = 0.0;
  const SupBoundReport rep = check_sup_bound(b, 2);
  EXPECT_DOUBLE_EQ(rep.bound, 2000.0);
  EXPECT_DOUBLE_EQ(rep.intermediate_bound, 1000.0);  // lambda = 0: 1/(eps kappa)
  EXPECT_TRUE(rep.ok);
}

TEST(SolveCapillarity, RejectsEpsAboveGate) {
  // lambda = 1 gives the gate 1/((n+1) lambda) = 1/3.
  const auto d = trace_data(1.0);
  const RadialGrid g(0.1, 1.0, 64);
  EXPECT_THROW(solve_capillarity(d, g, {0.4, 1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(solve_capillarity(d, g, {0.2, 0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(solve_capillarity(flat_data(), g, {0.6, 1.0, 1.0}), std::invalid_argument);
}

TEST(SolveCapillarity, StallRaisesContinuationFailure) {
  const auto d = flat_data();
  const RadialGrid g(0.05, 1.0, 128);
  NewtonOptions opts;
  opts.max_iters = 1;  // force a stall
  try {
    solve_capillarity(d, g, {0.1, 1.0, 1.0}, 10, opts);
    FAIL() << "expected ContinuationFailure";
  } catch (const ContinuationFailure& f) {
    EXPECT_LT(f.last_good_s, 1.0);
    EXPECT_GE(f.last_good_s, 0.0);
    EXPECT_DOUBLE_EQ(f.kappa, 1.0);
  }
}

TEST(CheckSupBound, FlagsHandBuiltViolation) {
  SolutionBundle b;
  b.u_hat = Field(RadialGrid(0.1, 1.0, 32), 0.0);
  b.params = {0.1, 0.1, 1.0};
  b.lambda = 0.0;
  b.u_hat[17] = 3.0 / (0.1 * 0.1);  // above the 2/(eps kappa) ceiling
  const SupBoundReport rep = check_sup_bound(b, 2);
  EXPECT_FALSE(rep.ok);
  EXPECT_EQ(rep.worst_node, 17);
  EXPECT_LT(rep.margin, 0.0);
}

TEST(Newton, QuadraticConvergenceInTheTerminalPhase) {
  const auto d = flat_data();
  const RadialGrid g(0.05, 1.0, 401);
  const SolutionBundle b = solve_capillarity(d, g, {0.1, 0.5, 1.0});
  const auto& hist = b.diagnostics.newton_residual_history;
  ASSERT_GE(hist.size(), 3u);
  const double floor = 10.0 * b.diagnostics.newton_effective_tol;
  int checked = 0;
  for (std::size_t k = 0; k + 1 < hist.size(); ++k) {
    if (hist[k] < 1e-3 && hist[k + 1] > floor) {
      EXPECT_LT(hist[k + 1], std::pow(hist[k], 1.5));
      ++checked;
    }
  }
  EXPECT_GE(checked, 1);
}

TEST(Schedules, DefaultsMatchTheStatedValues) {
  const Schedules s;
  EXPECT_EQ(s.s_steps, 10);
  const auto kappas = s.kappa.values();
  ASSERT_EQ(kappas.size(), 20u);
  EXPECT_DOUBLE_EQ(kappas.front(), 1.0);
  EXPECT_DOUBLE_EQ(kappas[1], 0.5);
  const auto eps = s.eps.values();
  ASSERT_EQ(eps.size(), 8u);
  EXPECT_DOUBLE_EQ(eps.front(), 0.25);
  EXPECT_THROW((GeometricSchedule{1.0, 1.2, 5}.values()), std::invalid_argument);
  EXPECT_THROW((GeometricSchedule{-1.0, 0.5, 5}.values()), std::invalid_argument);
}

TEST(KappaContinuation, FlatHasEmptyBlowUpAndCauchyTail) {
  const auto d = flat_data();
  const RadialGrid g(0.05, 1.0, 401);
  const auto kc = kappa_continuation(d, g, 0.05, GeometricSchedule{1.0, 0.5, 14}.values());
  ASSERT_FALSE(kc.failed);
  ASSERT_EQ(kc.bundles.size(), 14u);
  for (const auto& entry : kc.blow_up.kappa_trace) EXPECT_FALSE(entry.second.has_value());
  EXPECT_TRUE(kc.blow_up.intervals.empty());
  // Successive sup-differences halve along the geometric kappa tail.
  const auto& sd = kc.blow_up.sup_diffs;
  ASSERT_GE(sd.size(), 5u);
  for (std::size_t k = sd.size() - 3; k < sd.size(); ++k) {
    const double ratio = sd[k] / sd[k - 1];
    EXPECT_GT(ratio, 0.40);
    EXPECT_LT(ratio, 0.60);
  }
  // Nonnegativity of every converged iterate.
  for (const auto& b : kc.bundles) EXPECT_GE(b.u_hat.min_value(), -1e-10);
}

TEST(KappaContinuation, SchwarzschildBlowUpMarchesToTheHorizon) {
  const auto d = schwarzschild_data();
  const RadialGrid g(0.1, 2.0, 1001);
  const auto kc = kappa_continuation(d, g, 0.01, GeometricSchedule{1.0, 0.5, 26}.values());
  ASSERT_FALSE(kc.failed);
  ASSERT_TRUE(kc.blow_up.boundary_radius.has_value());
  EXPECT_GT(*kc.blow_up.boundary_radius, 0.40);
  EXPECT_LT(*kc.blow_up.boundary_radius, 0.52);
  // Monotone growth of the blow-up set while the profile still grows.
  std::optional<double> prev;
  for (std::size_t k = 0; k < kc.blow_up.kappa_trace.size(); ++k) {
    const auto& cur = kc.blow_up.kappa_trace[k].second;
    const bool profile_growing =
        k == 0 || kc.bundles[k].diagnostics.sup_u > kc.bundles[k - 1].diagnostics.sup_u * 1.001;
    if (prev && profile_growing) {
      ASSERT_TRUE(cur.has_value());
      EXPECT_GE(*cur, *prev - 1e-12);
    }
    if (cur) {
      prev = cur;
    }
  }
  // Supremum bound holds at every kappa (100% of converged solves).
  for (const auto& b : kc.bundles) {
    EXPECT_TRUE(check_sup_bound(b, d.n).ok);
  }
}

TEST(EpsilonLimit, FlatMatchesArrivalOracle) {
  const auto d = flat_data();
  const RadialGrid g(0.05, 1.0, 501);
  const auto res = epsilon_limit(d, g, GeometricSchedule{0.25, 0.5, 5}.values(),
                                 GeometricSchedule{1.0, 0.5, 14}.values());
  double worst = 0.0;
  for (int i = 0; i < g.nodes; ++i) {
    const double r = g.r(i);
    if (r < 0.1 || r > 0.95) continue;
    const double exact = (1.0 - r * r) / 4.0;
    worst = std::max(worst, std::abs(res.u[i] - exact) / exact);
  }
  EXPECT_LE(worst, 0.01);
  // Cauchy trace decays.
  ASSERT_GE(res.cauchy_traces.size(), 3u);
  for (std::size_t k = 1; k < res.cauchy_traces.size(); ++k)
    EXPECT_LT(res.cauchy_traces[k], res.cauchy_traces[k - 1]);
  // Superlevel sets nest: {u > t2} subset of {u > t1} for t1 < t2.
  const double t1 = 0.05, t2 = 0.11;
  for (int i = 0; i < g.nodes; ++i) {
    if (res.u[i] > t2) {
      EXPECT_GT(res.u[i], t1);
    }
  }
  // Monotone outside the peak: the level-set radius decreases in the level.
  Field exterior(RadialGrid(0.2, 1.0, 1 + (g.nodes - 1) * 4 / 5));
  int i0 = g.nodes - exterior.size();
  for (int i = 0; i < exterior.size(); ++i) exterior[i] = res.u[i0 + i];
  const auto hit1 = extract_level_set(exterior, t1);
  const auto hit2 = extract_level_set(exterior, t2);
  ASSERT_EQ(hit1.status, LevelStatus::found);
  ASSERT_EQ(hit2.status, LevelStatus::found);
  EXPECT_LT(hit2.radius, hit1.radius);
}

TEST(IntegralEstimate, FlatArrivalTimeIsTight) {
  // Exact u = (1 - r^2)/4 on the annulus: lhs -> |S^2_1| (1 - r_in^2) as
  // eps -> 0; the rhs collects both boundary spheres (lambda = 0, no MOTS).
  const auto d = flat_data();
  const RadialGrid g(0.05, 1.0, 2001);
  Field u(g);
  for (int i = 0; i < u.size(); ++i) u[i] = (1.0 - g.r(i) * g.r(i)) / 4.0;
  const auto est = check_integral_estimate(u, 1e-4, d);
  const double four_pi = 4.0 * std::numbers::pi;
  EXPECT_NEAR(est.rhs, four_pi * (1.0 + 0.05 * 0.05), 1e-10);
  EXPECT_LE(est.lhs, est.rhs * (1.0 + 1e-3));
  EXPECT_NEAR(est.lhs, four_pi * (1.0 - 0.05 * 0.05), 1e-3 * four_pi);
  EXPECT_GE(est.lhs / est.rhs, 0.98);
}

TEST(IntegralEstimate, RhsCollectsBoundariesAndDetectedMots) {
  const auto d = schwarzschild_data();
  const RadialGrid g(0.1, 2.0, 501);
  Field u(g, 0.0);
  const auto est = check_integral_estimate(u, 0.1, d, 0.5);
  // Outer sphere + inner sphere + Sigma_out, lambda = 0.
  EXPECT_NEAR(est.rhs, sphere_area(d, 2.0) + sphere_area(d, 0.1) + sphere_area(d, 0.5), 1e-10);
}

TEST(MonitorGradientBounds, ZeroFieldAndConvergedRun) {
  const auto d = flat_data();
  const RadialGrid g(0.05, 1.0, 256);
  SolutionBundle zero;
  zero.u_hat = Field(g, 0.0);
  zero.params = {0.1, 1.0, 1.0};
  const auto gd0 = monitor_gradient_bounds(zero, d);
  EXPECT_DOUBLE_EQ(gd0.sup_gradient, 0.0);
  EXPECT_DOUBLE_EQ(gd0.boundary_gradient, 0.0);
  EXPECT_DOUBLE_EQ(gd0.sup_u, 0.0);

  const SolutionBundle b = solve_capillarity(d, g, {0.1, 0.5, 1.0});
  const auto gd = monitor_gradient_bounds(b, d);
  EXPECT_DOUBLE_EQ(gd.sup_u, b.u_hat.max_value());
  EXPECT_GT(gd.sup_gradient, 0.0);
  EXPECT_GT(gd.boundary_term, 1.0 / 0.1);
  EXPECT_TRUE(std::isfinite(gd.empirical_eta));
}

TEST(MonitorGradientBounds, UniformGradientTrendAcrossEpsilon) {
  // Interior sup |grad u_eps| on the early-time region {u <= T/2} stays
  // bounded along the eps schedule: nondecreasing by < 10% per halving.
  const auto d = flat_data();
  const RadialGrid g(0.05, 1.0, 501);
  const auto res = epsilon_limit(d, g, GeometricSchedule{0.25, 0.5, 6}.values(),
                                 GeometricSchedule{1.0, 0.5, 14}.values());
  const double half_T = 0.12;  // T close to the flat extinction time 0.25
  std::vector<double> sups;
  for (const auto& stage : res.stages) {
    const Field du = nodal_derivative(stage.final_bundle.u_hat);
    double sup = 0.0;
    for (int i = 0; i < g.nodes; ++i) {
      const double u = stage.eps * stage.final_bundle.u_hat[i];
      if (u <= half_T) sup = std::max(sup, stage.eps * std::abs(du[i]));
    }
    sups.push_back(sup);
  }
  // Skip the first pair: at eps = 0.25 the regularization is comparable to
  // the solution scale, the asymptotic trend starts one halving later.
  for (std::size_t k = 2; k < sups.size(); ++k) EXPECT_LE(sups[k], sups[k - 1] * 1.10);
  EXPECT_LT(sups.back(), 0.55);  // converges to |grad u*|(r_out) = 1/2
}

TEST(SolveCapillarity, MaxPrincipleWithNonzeroTrace) {
  // kappa max u <= (n+1) lambda + 1/eps at an interior maximum.
  const auto d = trace_data(0.3);
  const RadialGrid g(0.1, 1.0, 401);
  const OperatorParams p{0.2, 0.7, 1.0};
  const SolutionBundle b = solve_capillarity(d, g, p);
  EXPECT_LE(p.kappa * b.diagnostics.sup_u, 3.0 * 0.3 + 1.0 / p.eps + 1e-6);
}

TEST(KappaContinuation, DetectionScalesWithTheMass) {
  // M = 2: the horizon doubles to r = M/2 = 1.
  DataFamily f;
  f.tag = FamilyTag::schwarzschild_isotropic;
  f.n = 2;
  f.mass = 2.0;
  f.r_in = 0.2;
  f.r_out = 4.0;
  const auto d = make_dataset(f);
  const RadialGrid g(0.2, 4.0, 1001);
  const auto kc = kappa_continuation(d, g, 0.01, GeometricSchedule{1.0, 0.5, 26}.values());
  ASSERT_FALSE(kc.failed);
  ASSERT_TRUE(kc.blow_up.boundary_radius.has_value());
  EXPECT_NEAR(*kc.blow_up.boundary_radius, 1.0, 0.08);
  const auto est = find_mots_radius_bruteforce(d, 0.2, 4.0);
  ASSERT_TRUE(est.found);
  EXPECT_NEAR(est.oracle_radius, 1.0, 1e-9);
}

TEST(EpsilonLimit, SchwarzschildLevelsPileUpAtTheHorizon) {
  // u stays finite outside the horizon and exceeds any fixed level just
  // inside the blow-up boundary as the regularization shrinks.
  const auto d = schwarzschild_data();
  const RadialGrid g(0.1, 2.0, 1001);
  const double eps = 0.01;
  const auto kc = kappa_continuation(d, g, eps, GeometricSchedule{1.0, 0.5, 26}.values());
  ASSERT_FALSE(kc.failed);
  const Field& u_hat = kc.bundles.back().u_hat;
  auto u_at = [&](double r) { return eps * u_hat[static_cast<int>(std::lround((r - 0.1) / g.h))]; };
  EXPECT_LT(u_at(0.8), 12.0);   // exterior arrival time scale
  EXPECT_GT(u_at(0.45), 50.0);  // inside the ridge
  EXPECT_GT(u_at(0.45), 10.0 * u_at(0.8));
}

TEST(ConvergedSolution, JangResidualApproachesForcing) {
  // At the kappa limit the capillarity equation rearranges to
  // residual_jang(u_hat) = -1/(eps v) + kappa u_hat on time-symmetric data.
  const auto d = flat_data();
  const RadialGrid g(0.05, 1.0, 501);
  const double eps = 0.05;
  const auto kc = kappa_continuation(d, g, eps, GeometricSchedule{1.0, 0.5, 18}.values());
  ASSERT_FALSE(kc.failed);
  const Field& u_hat = kc.bundles.back().u_hat;
  const double kappa_final = kc.bundles.back().params.kappa;
  const Field jang = residual_jang(u_hat, d);
  const Field v = gradient_function(d, u_hat);
  double worst = 0.0;
  for (int i = 1; i < g.nodes - 1; ++i)
    worst = std::max(worst, std::abs(jang[i] + 1.0 / (eps * v[i]) - kappa_final * u_hat[i]));
  EXPECT_LE(worst, 1e-6);
}

TEST(KappaContinuation, DetectionDependsOnThetaNotOnTheKSplit) {
  // Two data sets with the same null expansion but different eigenvalue
  // splits (a = 0 vs a = b) must locate the same boundary; their profiles
  // still differ, so the radial projector term demonstrably participates.
  DataFamily f1;
  f1.tag = FamilyTag::gaussian_pinch;
  f1.n = 2;
  f1.pinch_c = 3.0;
  f1.pinch_r0 = 0.7;
  f1.pinch_w = 0.2;
  f1.r_in = 0.2;
  f1.r_out = 1.5;
  const auto d1 = make_dataset(f1);
  DataFamily f2;
  f2.tag = FamilyTag::custom;
  f2.n = 2;
  f2.r_in = 0.2;
  f2.r_out = 1.5;
  f2.custom_phi = constant_profile(1.0);
  const auto ab = [](double r) {
    const double t = (r - 0.7) / 0.2;
    return -3.0 * std::exp(-t * t);
  };
  f2.custom_a = ab;
  f2.custom_b = ab;
  const auto d2 = make_dataset(f2);
  const RadialGrid g(0.2, 1.5, 1001);
  const auto kappas = GeometricSchedule{1.0, 0.5, 30}.values();
  const auto k1 = kappa_continuation(d1, g, 0.01, kappas);
  const auto k2 = kappa_continuation(d2, g, 0.01, kappas);
  ASSERT_FALSE(k1.failed);
  ASSERT_FALSE(k2.failed);
  ASSERT_TRUE(k1.blow_up.boundary_radius.has_value());
  ASSERT_TRUE(k2.blow_up.boundary_radius.has_value());
  EXPECT_NEAR(*k1.blow_up.boundary_radius, *k2.blow_up.boundary_radius, 1e-3);
  double profile_diff = 0.0;
  for (int i = 0; i < g.nodes; ++i)
    profile_diff = std::max(profile_diff, std::abs(k1.bundles.front().u_hat[i] -
                                                   k2.bundles.front().u_hat[i]));
  EXPECT_GT(profile_diff, 1e-3);
}

TEST(Determinism, IdenticalRunsAreBitIdentical) {
  const auto d = schwarzschild_data();
  const RadialGrid g(0.1, 2.0, 301);
  const auto k1 = kappa_continuation(d, g, 0.05, GeometricSchedule{1.0, 0.5, 10}.values());
  const auto k2 = kappa_continuation(d, g, 0.05, GeometricSchedule{1.0, 0.5, 10}.values());
  ASSERT_FALSE(k1.failed);
  ASSERT_EQ(k1.bundles.size(), k2.bundles.size());
  for (std::size_t b = 0; b < k1.bundles.size(); ++b) {
    const auto& ua = k1.bundles[b].u_hat.values;
    const auto& ub = k2.bundles[b].u_hat.values;
    ASSERT_EQ(ua.size(), ub.size());
    EXPECT_EQ(std::memcmp(ua.data(), ub.data(), ua.size() * sizeof(double)), 0);
  }
}
