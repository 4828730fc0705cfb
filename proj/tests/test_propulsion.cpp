#include <gtest/gtest.h>

#include <random>

#include "oracles/propulsion_oracle.hpp"
#include "uavharvest/kinematics.hpp"
#include "uavharvest/propulsion.hpp"

using namespace uavh;

namespace {

AirframeParams random_airframe(std::mt19937_64& rng) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  AirframeParams a;
  a.mass_kg = u(0.5, 10.0);
  a.gravity = 9.8;
  a.weight_newton = a.mass_kg * a.gravity * u(0.99, 1.01);
  a.air_density = u(0.9, 1.3);
  a.flat_plate_area = u(0.005, 0.05);
  a.rotor_radius = u(0.1, 0.8);
  a.rotor_disc_area = M_PI * a.rotor_radius * a.rotor_radius;
  a.blade_angular_velocity = u(100.0, 600.0);
  a.fuselage_drag_ratio = u(0.2, 1.0);
  a.rotor_solidity = u(0.02, 0.1);
  a.profile_drag_coeff = u(0.005, 0.02);
  a.induced_power_factor = u(0.05, 0.2);
  return a;
}

}  // namespace

TEST(Constants, ReferenceAirframe) {
  const PowerConstants c = derive_constants(AirframeParams{});
  EXPECT_NEAR(c.p0_watt, 79.85628, 1e-4);
  EXPECT_NEAR(c.p1_watt, 88.62794, 1e-4);
  EXPECT_NEAR(c.p2_watt, 87.91337, 1e-4);
  EXPECT_DOUBLE_EQ(c.c3, 2.04 / 20.0);
  EXPECT_NEAR(c.c1, 2.0833e-4, 1e-8);
  EXPECT_NEAR(c.c2, 4.624375e-4, 1e-10);
  EXPECT_NEAR(c.c4, 0.03080875, 1e-10);
  EXPECT_NEAR(c.c5, 0.009242625, 1e-10);
}

TEST(Constants, MatchPhysicalDefinitions) {
  const AirframeParams a;
  const auto ph = oracle::physical(a);
  const PowerConstants c = derive_constants(a);
  EXPECT_NEAR(c.p0_watt, ph.blade_profile, 1e-12 * ph.blade_profile);
  EXPECT_NEAR(c.hover_watt(), c.p2_watt + ph.induced_hover, 1e-9 * c.hover_watt());
  EXPECT_LT(c.p2_watt, c.hover_watt());
}

TEST(Constants, RejectsNonPositiveFieldByName) {
  AirframeParams a;
  a.rotor_solidity = 0.0;
  try {
    derive_constants(a);
    FAIL();
  } catch (const InvalidParameter& e) {
    EXPECT_EQ(e.field(), "rotor_solidity");
  }
  a = AirframeParams{};
  a.gravity = -1.0;
  EXPECT_THROW(derive_constants(a), InvalidParameter);
}

TEST(Constants, WeightMassMismatchOnlyWarns) {
  AirframeParams a;
  EXPECT_FALSE(weight_mass_warning(a).has_value());  // 2.04*9.8 = 19.99
  a.weight_newton = 25.0;
  EXPECT_TRUE(weight_mass_warning(a).has_value());
  EXPECT_NO_THROW(derive_constants(a));
}

TEST(StraightPower, HoverAndCruise) {
  const PowerConstants c = derive_constants(AirframeParams{});
  EXPECT_NEAR(straight_power(0, 0, c), c.hover_watt(), 1e-12 * c.hover_watt());
  EXPECT_NEAR(straight_power(30, 0, c), 358.3404510503, 1e-8);
  EXPECT_THROW(straight_power(-1.0, 0, c), InvalidParameter);
}

TEST(StraightPower, MatchesPhysicalForm) {
  const AirframeParams a;
  const PowerConstants c = derive_constants(a);
  for (double v : {0.0, 1.0, 10.0, 17.5, 30.0}) {
    for (double acc : {-5.0, -1.0, 0.0, 2.0, 5.0}) {
      const double ref = oracle::straight_power(v, acc, a);
      EXPECT_NEAR(straight_power(v, acc, c), ref, 1e-9 * ref) << v << " " << acc;
    }
  }
  EXPECT_NEAR(straight_power(10, 2, c), 128.1960605881, 1e-8);
}

// Level flight is cheaper than hovering over a band of moderate speeds, so
// hover is not the cheapest state once the UAV moves.
TEST(StraightPower, DipsBelowHoverAtModerateSpeed) {
  const PowerConstants c = derive_constants(AirframeParams{});
  EXPECT_NEAR(straight_power(10, 0, c), 126.0914068157, 1e-8);
  EXPECT_LT(straight_power(10, 0, c), c.hover_watt());
  EXPECT_GT(straight_power(30, 0, c), c.hover_watt());
  double lo = 1e9;
  for (double v = 0.5; v <= 30.0; v += 0.5) lo = std::min(lo, straight_power(v, 0, c));
  EXPECT_LT(lo, 0.75 * c.hover_watt());
  EXPECT_GT(lo, c.p2_watt * 0.5);
}

TEST(StraightPower, FiniteAndPositiveOnDomain) {
  const PowerConstants c = derive_constants(AirframeParams{});
  for (double v = 0.0; v <= 30.0; v += 0.25) {
    for (double acc = -5.0; acc <= 5.0; acc += 0.5) {
      const double p = straight_power(v, acc, c);
      EXPECT_TRUE(std::isfinite(p));
      EXPECT_GT(p, 0.0);
    }
  }
}

TEST(VerticalPower, HoverIdentityAndLimits) {
  const AirframeParams a;
  const PowerConstants c = derive_constants(a);
  EXPECT_NEAR(vertical_power(0, 0, VerticalDirection::descent, c, a), c.hover_watt(), 1e-9 * c.hover_watt());
  EXPECT_NEAR(vertical_power(0, 0, VerticalDirection::climb, c, a), c.hover_watt(), 1e-9 * c.hover_watt());
  const double near_g = vertical_power(0, a.gravity * (1 - 1e-9), VerticalDirection::descent, c, a);
  EXPECT_NEAR(near_g, c.p2_watt, 1e-3);
  EXPECT_THROW(vertical_power(0, a.gravity, VerticalDirection::descent, c, a), ModelDomainError);
  EXPECT_THROW(vertical_power(0, -10.0, VerticalDirection::climb, c, a), ModelDomainError);
  EXPECT_THROW(vertical_power(-1, 0, VerticalDirection::climb, c, a), InvalidParameter);
}

TEST(VerticalPower, MatchesDirectEvaluation) {
  const AirframeParams a;
  const PowerConstants c = derive_constants(a);
  const double climb = vertical_power(2, 0, VerticalDirection::climb, c, a);
  EXPECT_NEAR(climb, oracle::vertical_power(2, 0, true, a), 1e-9 * climb);
  EXPECT_NEAR(climb, 190.9294014788, 1e-8);
  for (double v : {0.0, 3.0, 30.0}) {
    for (double acc : {-5.0, 0.0, 5.0}) {
      const double d = vertical_power(v, acc, VerticalDirection::descent, c, a);
      EXPECT_NEAR(d, oracle::vertical_power(v, acc, false, a), 1e-9 * d);
    }
  }
}

TEST(PowerProperty, HoverIdentityOnRandomAirframes) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const AirframeParams a = random_airframe(rng);
    const PowerConstants c = derive_constants(a);
    const double hover = c.hover_watt();
    EXPECT_NEAR(straight_power(0, 0, c), hover, 1e-9 * hover);
    EXPECT_NEAR(vertical_power(0, 0, VerticalDirection::descent, c, a), hover, 1e-9 * hover);
    EXPECT_NEAR(vertical_power(0, 0, VerticalDirection::climb, c, a), hover, 1e-9 * hover);
  }
}

TEST(StraightEnergy, HoverForTenSeconds) {
  const PowerConstants c = derive_constants(AirframeParams{});
  const auto t = DiscreteTrajectory::stationary(40, 0.25, 0.0);
  EXPECT_NEAR(straight_energy(t, c), 10.0 * c.hover_watt(), 1e-9);
  EXPECT_NEAR(straight_energy(t, c), 1684.84, 0.01);
}

TEST(StraightEnergy, TriangleMatchesQuadrature) {
  const AirframeParams a;
  const PowerConstants c = derive_constants(a);
  const KinematicLimits lim;
  const VelocityProfile p = feasible_profile(20.0, lim);
  const double ref = oracle::quadrature(p, [&](double v, double acc) { return oracle::straight_power(v, acc, a); });
  const double e = straight_energy(discretize(p, 400), c);
  EXPECT_NEAR(e, ref, 0.005 * ref);
}

TEST(StraightEnergy, ConvergesUnderRefinement) {
  const PowerConstants c = derive_constants(AirframeParams{});
  const VelocityProfile p = feasible_profile(1000.0, KinematicLimits{});
  const double coarse = straight_energy(discretize(p, 200), c);
  const double fine = straight_energy(discretize(p, 400), c);
  EXPECT_LT(std::abs(fine - coarse), 0.005 * fine);
}

TEST(StraightEnergy, PaddingCostsHoverPower) {
  const PowerConstants c = derive_constants(AirframeParams{});
  const VelocityProfile p = feasible_profile(200.0, KinematicLimits{});
  const std::size_t n = 80;
  const double step = p.duration / (n - 1);
  const auto base = discretize_padded(p, step, n);
  const auto padded = discretize_padded(p, step, n + 12);
  const double extra = straight_energy(padded, c) - straight_energy(base, c);
  EXPECT_NEAR(extra, 12 * step * c.hover_watt(), 1e-9 * straight_energy(padded, c));
}

TEST(VerticalEnergy, HoverForFiveSeconds) {
  const AirframeParams a;
  const PowerConstants c = derive_constants(a);
  const auto t = DiscreteTrajectory::stationary(20, 0.25, 0.0);
  EXPECT_NEAR(vertical_energy(t, VerticalDirection::descent, c, a), 5.0 * c.hover_watt(), 1e-9);
  EXPECT_NEAR(vertical_energy(t, VerticalDirection::climb, c, a), 842.42, 0.01);
}

TEST(VerticalEnergy, DescentAndClimbMatchQuadrature) {
  const AirframeParams a;
  const PowerConstants c = derive_constants(a);
  const VelocityProfile p = feasible_profile(118.0, KinematicLimits{});
  const auto t = discretize(p, 400);
  const double down = vertical_energy(t, VerticalDirection::descent, c, a);
  const double up = vertical_energy(t, VerticalDirection::climb, c, a);
  const double ref_down =
      oracle::quadrature(p, [&](double v, double acc) { return oracle::vertical_power(v, acc, false, a); });
  const double ref_up =
      oracle::quadrature(p, [&](double v, double acc) { return oracle::vertical_power(v, acc, true, a); });
  EXPECT_NEAR(down + up, ref_down + ref_up, 0.005 * (ref_down + ref_up));
  // Both legs carry the W*118/2 work term.
  const double radical_free = c.p2_watt * t.duration() + 0.5 * a.weight_newton * 118.0;
  EXPECT_GT(down, radical_free);
  EXPECT_GT(up, radical_free);
}

TEST(VerticalEnergy, RestToRestHasNoKineticTerm) {
  const AirframeParams a;
  const PowerConstants c = derive_constants(a);
  const auto t = discretize(feasible_profile(10.0, KinematicLimits{}), 50);
  double radical = 0.0;
  for (std::size_t n = 1; n <= t.slots(); ++n) {
    radical += vertical_radical(std::abs(t.velocities[n]), vertical_thrust(t.accels[n], VerticalDirection::climb, a), a);
  }
  const double expected = c.p2_watt * t.duration() + 0.5 * a.weight_newton * 10.0 + radical * t.step;
  EXPECT_NEAR(vertical_energy(t, VerticalDirection::climb, c, a), expected, 1e-9 * expected);
}
