#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "uavharvest/trajectory_sca.hpp"

using namespace uavh;

namespace {

struct Fixture {
  AirframeParams af;
  PowerConstants c = derive_constants(af);
  KinematicLimits lim;
};

void expect_non_increasing(const ScaTrace& t) {
  for (std::size_t i = 1; i < t.objective.size(); ++i) EXPECT_LE(t.objective[i], t.objective[i - 1]);
}

}  // namespace

TEST(Bounds, ProductUpperBoundHolds) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng), y = u(rng), x0 = u(rng), y0 = u(rng);
    EXPECT_LE(x * y, product_upper_bound(x, y, x0, y0) + 1e-9 * (1 + std::abs(x * y)));
  }
  EXPECT_DOUBLE_EQ(product_upper_bound(3.0, -2.0, 3.0, -2.0), -6.0);
}

TEST(Bounds, RadicalLowerBoundHolds) {
  const PowerConstants c = derive_constants(AirframeParams{});
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> av(-1.0, 2.0), vv(0.0, 30.0);
  for (int i = 0; i < 10000; ++i) {
    const double A = av(rng), v = vv(rng), A0 = av(rng), v0 = vv(rng);
    const double exact = std::sqrt(1 + A * A + c.c4 * c.c4 * std::pow(v, 4)) + c.c4 * v * v;
    EXPECT_LE(radical_lower_bound(A, v, A0, v0, c.c4), exact + 1e-9 * exact);
  }
  const double A = 0.3, v = 12.0;
  const double exact = std::sqrt(1 + A * A + c.c4 * c.c4 * std::pow(v, 4)) + c.c4 * v * v;
  EXPECT_NEAR(radical_lower_bound(A, v, A, v, c.c4), exact, 1e-12 * exact);
}

TEST(OptimizeStraight, ZeroDistance) {
  Fixture f;
  const LegResult r = optimize_straight(0.0, f.lim, f.c);
  EXPECT_EQ(r.energy, 0.0);
  for (double q : r.trajectory.positions) EXPECT_EQ(q, 0.0);
}

TEST(OptimizeStraight, LongLegBeatsFeasibleProfile) {
  Fixture f;
  const LegResult r = optimize_straight(1000.0, f.lim, f.c);
  const VelocityProfile p = feasible_profile(1000.0, f.lim);
  const double ref = straight_energy(discretize(p, default_slot_count(p.duration)), f.c);
  EXPECT_LE(r.feasible_energy, ref);
  EXPECT_LE(r.energy, ref + 1e-6);
  EXPECT_LT(r.energy, 0.9 * ref);
  expect_non_increasing(r.trace);
  const auto rep = validate(r.trajectory, f.lim, {0.0, 1000.0}, true);
  EXPECT_TRUE(rep.ok()) << rep.summary();
  EXPECT_FALSE(r.trace.degraded);
  EXPECT_LE(r.trace.kkt_residual.back(), 1e-2);
}

TEST(OptimizeStraight, SlacksAreTightAtConvergence) {
  Fixture f;
  const LegResult r = optimize_straight(400.0, f.lim, f.c);
  ASSERT_FALSE(r.used_feasible);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_LE(r.trace.max_residual.back(), 1e-4);
}

TEST(OptimizeStraight, WarmStartAtOptimumStopsImmediately) {
  Fixture f;
  ScaSettings s;
  const LegResult first = optimize_straight(300.0, f.lim, f.c, s);
  ASSERT_FALSE(first.used_feasible);
  const LegResult again = optimize_straight(300.0, f.lim, f.c, s, &first.trajectory);
  EXPECT_LE(again.trace.objective.size(), 2u);
  const double change = (again.trace.objective.front() - again.trace.objective.back()) / again.trace.objective.front();
  EXPECT_LT(change, s.objective_tol);
}

TEST(OptimizeStraight, ShortLegNeverWorseThanFeasible) {
  Fixture f;
  for (double d : {0.5, 5.0, 20.0, 60.0}) {
    const LegResult r = optimize_straight(d, f.lim, f.c);
    EXPECT_LE(r.energy, r.feasible_energy + 1e-6) << d;
    EXPECT_TRUE(validate(r.trajectory, f.lim, {0.0, d}, true).ok()) << d;
  }
}

TEST(OptimizeStraight, PaddingExcludedFromEnergy) {
  Fixture f;
  const LegResult r = optimize_straight(200.0, f.lim, f.c);
  const DiscreteTrajectory active = trim_padding(r.trajectory);
  EXPECT_NEAR(r.energy, straight_energy(active, f.c), 1e-9 * r.energy);
  EXPECT_LE(r.active_duration, r.trajectory.duration() + 1e-12);
}

TEST(OptimizeStraight, MultipleOfFeasibleRule) {
  Fixture f;
  ScaSettings s;
  s.duration_rule = DurationRule::multiple_of_feasible;
  const LegResult r = optimize_straight(500.0, f.lim, f.c, s);
  const double tf = feasible_profile(500.0, f.lim).duration;
  EXPECT_NEAR(r.trajectory.duration(), 1.5 * tf, 1e-9);
  EXPECT_LE(r.energy, r.feasible_energy);
}

TEST(OptimizeStraight, TraceCsv) {
  Fixture f;
  const LegResult r = optimize_straight(150.0, f.lim, f.c);
  std::ostringstream os;
  write_trace_csv(os, r.trace);
  const std::string out = os.str();
  EXPECT_EQ(out.rfind("iter,objective_J,max_residual\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(out.begin(), out.end(), '\n')), r.trace.objective.size() + 1);
}

TEST(OptimizeStraight, RejectsBadInput) {
  Fixture f;
  EXPECT_THROW(optimize_straight(-1.0, f.lim, f.c), InvalidParameter);
  ScaSettings s;
  s.max_outer_iters = 0;
  EXPECT_THROW(optimize_straight(10.0, f.lim, f.c, s), InvalidParameter);
}

TEST(OptimizeVertical, ZeroDrop) {
  Fixture f;
  const VerticalResult r = optimize_vertical(0.0, f.lim, f.c, f.af);
  EXPECT_EQ(r.energy, 0.0);
}

TEST(OptimizeVertical, DeepDropNotWorseThanFeasible) {
  Fixture f;
  const VerticalResult r = optimize_vertical(118.0, f.lim, f.c, f.af);
  const VelocityProfile p = feasible_profile(118.0, f.lim);
  const auto t = discretize(p, default_slot_count(p.duration));
  const double ref = vertical_energy(t, VerticalDirection::descent, f.c, f.af) +
                     vertical_energy(t, VerticalDirection::climb, f.c, f.af);
  EXPECT_LE(r.energy, ref + 1e-6);
  // The work against gravity is part of both legs.
  EXPECT_GT(r.energy, f.af.weight_newton * 118.0);
  for (const LegResult* leg : {&r.descent, &r.climb}) {
    expect_non_increasing(leg->trace);
    EXPECT_TRUE(validate(leg->trajectory, f.lim, {0.0, 118.0}, true).ok());
  }
}

TEST(OptimizeVertical, EnergyShrinksWithHoverHeight) {
  Fixture f;
  const double cruise = 120.0;
  double prev = std::numeric_limits<double>::infinity();
  for (double h : {0.5, 1.0, 2.0, 5.0}) {
    const double e = optimize_vertical(cruise - h, f.lim, f.c, f.af).energy;
    EXPECT_LE(e, prev) << h;
    prev = e;
  }
}

TEST(OptimizeVertical, RejectsAccelerationAtGravity) {
  Fixture f;
  EXPECT_THROW(optimize_vertical(10.0, KinematicLimits{30.0, 9.8}, f.c, f.af), ModelDomainError);
}
