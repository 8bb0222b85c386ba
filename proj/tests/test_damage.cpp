#include "adm/damage.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace adm;

namespace {

constexpr double kMu = 31.0;

IntegrateOptions tight() {
  IntegrateOptions o;
  o.tol = 1e-11;
  return o;
}

// c~ = 0: integrating mu dalpha/dt = (a k T_s x)^b over x in [0, 1 - s0] gives
// T_s^(b+1) = mu (b+1) / ((a k)^b (1 - s0)^(b+1)).
double no_growth_failure_time(double a, double b, double s0, double k, double mu) {
  return std::pow(mu * (b + 1) / (std::pow(a * k, b) * std::pow(1 - s0, b + 1)), 1.0 / (b + 1));
}

CanadianEffects random_canadian(std::mt19937& rng, double k) {
  std::uniform_real_distribution<double> u(0, 1);
  CanadianEffects e;
  e.b = 0.5 + 30 * u(rng);
  e.n = 0.3 + 5 * u(rng);
  e.sigma0 = 0.1 + 0.7 * u(rng);
  const double t0 = 5 + 100 * u(rng);
  e.a_tilde = std::pow(kMu * (e.b + 1) / (std::pow(t0, e.b + 1) * std::pow(1 - e.sigma0, e.b + 1)), 1.0 / e.b) / k;
  e.c_tilde = e.a_tilde * (0.1 + 3 * u(rng));
  return e;
}

}  // namespace

TEST(UsFailureTime, UnitEffects) {
  EXPECT_NEAR(us_failure_time({0.0, 1.0}, kMu).time(), 18.04127791294912, 1e-12);
}

TEST(UsFailureTime, LogTwoAndTwo) {
  EXPECT_NEAR(us_failure_time({std::log(2.0), 2.0}, kMu).time(), 19.408187700958543, 1e-12);
}

TEST(UsFailureTime, SmallBLimit) {
  EXPECT_NEAR(us_failure_time({0.0, 1e-12}, kMu).time(), kMu, 1e-9);
  EXPECT_NEAR(us_failure_time({0.0, 0.0}, kMu).time(), kMu, 1e-12);
  // continuity across the Taylor threshold: log(B / (e^B - 1)) = -B/2 + B^2/24 + O(B^4)
  for (double b : {0.99e-8, 1.01e-8}) {
    const double series = kMu * std::exp(0.3 - b / 2 + b * b / 24);
    EXPECT_NEAR(us_failure_time({0.3, b}, kMu).time(), series, 1e-14 * series);
  }
}

TEST(UsFailureTime, NegativeBIsInvalid) {
  EXPECT_THROW(us_failure_time({0.0, -0.5}, kMu), InvalidEffect);
  EXPECT_THROW(us_failure_time({0.0, 1.0}, -1.0), std::invalid_argument);
}

TEST(UsFailureTime, HugeBDoesNotOverflow) {
  // e^B overflows a double well before B = 700
  const auto t = us_failure_time({0.0, 700.0}, kMu);
  ASSERT_TRUE(t);
  EXPECT_NEAR(std::log(t.time()), std::log(kMu) + std::log(700.0) - 700.0, 1e-9);
}

TEST(UsFailureTime, AgreesWithOdeOracle) {
  for (auto e : {USEffects{0.0, 1.0}, USEffects{std::log(2.0), 2.0}, USEffects{1.3, 0.2}, USEffects{0.1, 9.0}}) {
    const double closed = us_failure_time(e, kMu).time();
    const auto path = integrate_damage(e, LoadProfile::ramp(150.0), kMu, tight());
    ASSERT_TRUE(path.outcome);
    EXPECT_NEAR(path.outcome.time() / closed, 1.0, 1e-8);
  }
}

TEST(UsDamageRamp, Endpoints) {
  EXPECT_EQ(us_damage_ramp(0.0, 20.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(us_damage_ramp(20.0, 20.0, 1.0), 1.0);
}

TEST(UsDamageRamp, HalfwayAtUnitB) {
  EXPECT_NEAR(us_damage_ramp(10.0, 20.0, 1.0), 0.3775406687981455, 1e-14);
}

TEST(UsDamageRamp, OutsideWindowIsDomainError) {
  EXPECT_THROW(us_damage_ramp(-1.0, 20.0, 1.0), DomainError);
  EXPECT_THROW(us_damage_ramp(21.0, 20.0, 1.0), DomainError);
}

TEST(UsDamageRamp, MonotoneAndBounded) {
  std::mt19937 rng(3);
  std::lognormal_distribution<double> B(0.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double b = B(rng);
    double prev = 0;
    for (int j = 0; j <= 50; ++j) {
      const double a = us_damage_ramp(j * 0.2, 10.0, b);
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
      EXPECT_GE(a, prev);
      prev = a;
    }
  }
}

TEST(UsDamageRamp, MatchesOdeTrajectory) {
  const USEffects e{0.4, 3.0};
  const double ts = us_failure_time(e, kMu).time();
  const auto path = integrate_damage(e, LoadProfile::ramp(100.0), kMu, tight());
  for (const auto& [t, a] : path.trajectory) {
    if (t > ts) continue;
    EXPECT_NEAR(a, us_damage_ramp(t, ts, e.B), 1e-8);
  }
}

TEST(UsRates, InitialAndTerminal) {
  EXPECT_NEAR(us_initial_rate({0.0, 1.0}, kMu), 1.0 / 31.0, 1e-16);
  EXPECT_LT(us_initial_rate({1.0, 1.0}, kMu), us_initial_rate({0.5, 1.0}, kMu));
  double prev = 0;
  for (double b : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    const double r = us_terminal_rate(b, 30.0);
    EXPECT_GT(r, prev);
    prev = r;
  }
}

TEST(CanadianRate, ZeroBelowThreshold) {
  const CanadianEffects e{1e-3, 3.0, 2e-3, 2.0, 0.4};
  const RampContext ctx{100.0, kMu};
  EXPECT_EQ(canadian_rate(0.2 * 30.0, 0.5, e, ctx, 30.0), 0.0);
}

TEST(CanadianRate, FirstTermOnlyAtZeroDamage) {
  const CanadianEffects e{1e-3, 3.0, 2e-3, 2.0, 0.4};
  const RampContext ctx{100.0, kMu};
  const double t = 24.0, ts = 30.0;
  const double expected = std::pow(1e-3 * 100.0 * ts * (t / ts - 0.4), 3.0) / kMu;
  EXPECT_NEAR(canadian_rate(t, 0.0, e, ctx, ts), expected, 1e-15);
}

TEST(CanadianRate, MatchesFiniteDifferenceOfOdeTrajectory) {
  const CanadianEffects e{1e-3, 3.0, 2e-3, 2.0, 0.4};
  const RampContext ctx{100.0, kMu};
  const double ts = 28.0;
  IntegrateOptions o;
  o.tol = 1e-12;
  o.tau_s = ctx.k * ts;
  // trajectory with fixed strength; central differences of alpha vs the rate
  const auto profile = LoadProfile::ramp(ctx.k);
  auto alpha_at = [&](double t) {
    IntegrateOptions oo = o;
    oo.horizon = t;
    const auto p = integrate_damage(e, profile, kMu, oo);
    return p.trajectory.back().second;
  };
  for (double t : {15.0, 20.0, 25.0}) {
    const double h = 1e-3;
    const double fd = (alpha_at(t + h) - alpha_at(t - h)) / (2 * h);
    const double rate = canadian_rate(t, alpha_at(t), e, ctx, ts);
    EXPECT_NEAR(fd / rate, 1.0, 1e-6) << t;
  }
}

TEST(CanadianFailureTime, ClosedFormWhenSecondTermVanishes) {
  const double a = 1e-3, b = 3.0, s0 = 0.4, k = 100.0;
  const double expected = no_growth_failure_time(a, b, s0, k, kMu);
  EXPECT_NEAR(expected, 31.275493478351212, 1e-10);
  const RampContext ctx{k, kMu};
  EXPECT_NEAR(canadian_failure_time({a, b, 0.0, 2.0, s0}, ctx).time(), expected, 1e-10 * expected);
  // the general root path approaches it as c~ -> 0
  EXPECT_NEAR(canadian_failure_time({a, b, 1e-9, 2.0, s0}, ctx).time(), expected, 1e-8 * expected);
  // and the ODE oracle agrees
  const auto path = integrate_damage(CanadianEffects{a, b, 0.0, 2.0, s0}, LoadProfile::ramp(k), kMu, tight());
  EXPECT_NEAR(path.outcome.time() / expected, 1.0, 1e-8);
}

TEST(CanadianFailureTime, MatchesIndependentReference) {
  // reference from an independent stiff-accurate integrator + Brent root
  const CanadianEffects e{1e-3, 3.0, 2e-3, 2.0, 0.4};
  EXPECT_NEAR(canadian_failure_time(e, {100.0, kMu}).time(), 25.764614722800264, 1e-8);
}

TEST(CanadianFailureTime, NonPositiveATildeNeverFails) {
  EXPECT_FALSE(canadian_failure_time({0.0, 3.0, 2e-3, 2.0, 0.4}, {100.0, kMu}));
  EXPECT_FALSE(canadian_failure_time({-1e-3, 3.0, 2e-3, 2.0, 0.4}, {100.0, kMu}));
  EXPECT_FALSE(canadian_failure_time({1e-3, 3.0, -2e-3, 2.0, 0.4}, {100.0, kMu}));
}

TEST(CanadianFailureTime, HorizonGivesNonFailing) {
  SolverOptions opt;
  opt.horizon_factor = 2.0;  // root is near 25.8 s = 0.83 mu; cut below it
  const CanadianEffects e{1e-3, 3.0, 2e-3, 2.0, 0.4};
  EXPECT_TRUE(canadian_failure_time(e, {100.0, kMu}, opt));
  opt.horizon_factor = 0.5;
  EXPECT_FALSE(canadian_failure_time(e, {100.0, kMu}, opt));
}

TEST(CanadianFailureTime, AgreesWithOdeOracleOnRandomDraws) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> kd(20, 400);
  for (int i = 0; i < 25; ++i) {
    const double k = kd(rng);
    const auto e = random_canadian(rng, k);
    const auto semi = canadian_failure_time(e, {k, kMu});
    const auto path = integrate_damage(e, LoadProfile::ramp(k), kMu, tight());
    ASSERT_TRUE(semi);
    ASSERT_TRUE(path.outcome);
    EXPECT_NEAR(semi.time() / path.outcome.time(), 1.0, 1e-6) << i;
  }
}

TEST(CanadianFailureTime, LargeExponentsStayFinite) {
  CanadianEffects e{1.0 / 2500.0, 400.0, 1.0 / 2600.0, 300.0, 0.3};
  const auto t = canadian_failure_time(e, {100.0, kMu});
  ASSERT_TRUE(t);
  EXPECT_TRUE(std::isfinite(t.time()));
  EXPECT_NEAR(canadian_log_damage_at(e, {100.0, kMu}, t.time()), 0.0, 1e-9);
}

TEST(Canadian2FailureTime, IndependentOfLoadingRate) {
  const Canadian2Effects e{3.0, 4.0, 1.5, 2.0, 0.3};
  const double t1 = canadian2_failure_time(e, {0.1, kMu}).time();
  const double t3 = canadian2_failure_time(e, {0.3, kMu}).time();
  EXPECT_EQ(t1, t3);
}

TEST(Canadian2FailureTime, NonPositiveANeverFails) {
  EXPECT_FALSE(canadian2_failure_time({0.0, 4.0, 1.5, 2.0, 0.3}, {0.1, kMu}));
  EXPECT_FALSE(canadian2_failure_time({-2.0, 4.0, 1.5, 2.0, 0.3}, {0.1, kMu}));
}

TEST(Canadian2FailureTime, AgreesWithOdeOracle) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 15; ++i) {
    const Canadian2Effects e{0.5 + 20 * u(rng), 0.5 + 10 * u(rng), 0.1 + 5 * u(rng), 0.3 + 4 * u(rng),
                             0.1 + 0.7 * u(rng)};
    const auto semi = canadian2_failure_time(e, {0.2, kMu});
    const auto path = integrate_damage(e, LoadProfile::ramp(0.2), kMu, tight());
    ASSERT_TRUE(semi);
    ASSERT_TRUE(path.outcome);
    EXPECT_NEAR(semi.time() / path.outcome.time(), 1.0, 1e-6) << i;
  }
}

TEST(FailsWithin, EquivalentToSolveThenCompare) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> kd(20, 400), c(0, 80);
  int hits = 0;
  for (int i = 0; i < 3000; ++i) {
    const double k = kd(rng);
    auto e = random_canadian(rng, k);
    if (i % 7 == 0) e.a_tilde = -e.a_tilde;
    const RampContext ctx{k, kMu};
    const double centre = c(rng);
    const auto t = canadian_failure_time(e, ctx);
    const bool expected = t && t.time() >= centre - 5 && t.time() <= centre + 5;
    EXPECT_EQ(fails_within(AnyEffects(e), ctx, centre - 5, centre + 5), expected) << i;
    hits += expected;
  }
  EXPECT_GT(hits, 100);
}

TEST(IntegrateDamage, ZeroLoadNeverFailsForThresholdModel) {
  IntegrateOptions o;
  o.tau_s = 5000.0;
  const auto path = integrate_damage(CanadianEffects{1e-3, 3.0, 2e-3, 2.0, 0.4}, LoadProfile::zero(), kMu, o);
  EXPECT_FALSE(path.outcome);
  EXPECT_EQ(path.trajectory.back().second, 0.0);
}

TEST(IntegrateDamage, NonRampNeedsStrength) {
  EXPECT_THROW(integrate_damage(USEffects{}, LoadProfile::zero(), kMu), std::invalid_argument);
}

TEST(IntegrateDamage, RampAndHoldMatchesPiecewiseClosedForm) {
  // Ramp to half of a fixed strength then hold: US damage then accumulates at a constant rate.
  const USEffects e{1.5, 2.0};
  const double tau_s = 6000.0;
  const LoadProfile hold({{0.0, 0.0}, {20.0, 0.5 * tau_s}});
  IntegrateOptions o;
  o.tau_s = tau_s;
  const auto path = integrate_damage(e, hold, kMu, o);
  ASSERT_TRUE(path.outcome);
  // alpha(20) = (20/mu) e^-A (e^{0.5B} - 1)/(0.5B); afterwards the rate is e^{-A+0.5B}/mu
  const double a20 = 20.0 / kMu * std::exp(-e.A) * std::expm1(0.5 * e.B) / (0.5 * e.B);
  ASSERT_LT(a20, 1.0);
  const double expected = 20.0 + (1 - a20) * kMu / std::exp(-e.A + 0.5 * e.B);
  EXPECT_NEAR(path.outcome.time(), expected, 1e-7 * expected);
}

TEST(IntegrateDamage, TrajectoriesAreMonotone) {
  std::mt19937 rng(23);
  for (int i = 0; i < 10; ++i) {
    const auto e = random_canadian(rng, 120.0);
    const auto path = integrate_damage(e, LoadProfile::ramp(120.0), kMu);
    for (std::size_t j = 1; j < path.trajectory.size(); ++j) {
      EXPECT_GE(path.trajectory[j].first, path.trajectory[j - 1].first);
      EXPECT_GE(path.trajectory[j].second, path.trajectory[j - 1].second);
    }
    EXPECT_EQ(path.trajectory.front().second, 0.0);
    EXPECT_NEAR(path.trajectory.back().second, 1.0, 1e-12);
  }
}

TEST(TimeUnits, FailureTimesScaleWithTheUnit) {
  // seconds -> minutes: t' = t/60, k' = 60 k, mu' = mu/60
  std::mt19937 rng(29);
  for (int i = 0; i < 50; ++i) {
    const double k = 150.0;
    const auto e = random_canadian(rng, k);
    const double ts = canadian_failure_time(e, {k, kMu}).time();
    const double tm = canadian_failure_time(e, {k * 60, kMu / 60}).time();
    EXPECT_NEAR(tm * 60 / ts, 1.0, 1e-10);
    const Canadian2Effects e2{2.0, e.b, 1.0, e.n, e.sigma0};
    EXPECT_NEAR(canadian2_failure_time(e2, {k * 60, kMu / 60}).time() * 60 /
                    canadian2_failure_time(e2, {k, kMu}).time(),
                1.0, 1e-10);
  }
  const USEffects u{0.3, 2.0};
  EXPECT_NEAR(us_failure_time(u, kMu / 60).time() * 60 / us_failure_time(u, kMu).time(), 1.0, 1e-14);
}

TEST(Deflection, ThirdPointBendingExample) {
  const Geometry g{73.5, 1.5, 3.5};
  EXPECT_NEAR(deflection_loading_rate(1.5e6, 0.045, g), 51.33730510837876, 1e-9);
  EXPECT_DOUBLE_EQ(deflection_loading_rate(3.0e6, 0.045, g), 2 * deflection_loading_rate(1.5e6, 0.045, g));
  EXPECT_EQ(deflection_loading_rate(1.5e6, 0.0, g), 0.0);
  EXPECT_THROW(deflection_loading_rate(-1.0, 0.045, g), std::invalid_argument);
}

TEST(UsFailureTime, OracleHandlesFemtosecondFailures) {
  for (auto e : {USEffects{1.1787944392279042, 39.787087475310912}, USEffects{1.0019181099805061, 47.662005848076916}}) {
    const double closed = us_failure_time(e, kMu).time();
    ASSERT_LT(closed, 1e-13);
    const auto path = integrate_damage(e, LoadProfile::ramp(1.0), kMu, tight());
    ASSERT_TRUE(path.outcome);
    EXPECT_NEAR(path.outcome.time() / closed, 1.0, 1e-9);
  }
}

TEST(CanadianFailureTime, HugeExponentsGiveAnOutcomeNotNaN) {
  const RampContext ctx{1.0, kMu};
  for (double n : {1e300, 1e200, 1e20})
    for (double c : {1e-3, 0.05, 10.0}) {
      const CanadianEffects e{0.05, 3.0, c, n, 0.4};
      EXPECT_NO_THROW(canadian_failure_time(e, ctx)) << n << " " << c;
      EXPECT_NO_THROW(fails_within(e, ctx, 10, 20)) << n << " " << c;
      const Canadian2Effects e2{2.0, 1e300, c, n, 0.4};
      EXPECT_NO_THROW(canadian2_failure_time(e2, ctx)) << n << " " << c;
    }
}
