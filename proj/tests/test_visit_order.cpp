#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "uavharvest/visit_order.hpp"

using namespace uavh;

namespace {

// Linear-in-distance energy keeps the tests independent of the flight model.
double linear_energy(double d) { return 300.0 + 12.0 * d; }

EnergyMatrix random_matrix(std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<Point2> users(k);
  for (auto& p : users) p = {u(rng), u(rng)};
  return pairwise_energy_matrix({500.0, 500.0}, users, linear_energy);
}

}  // namespace

TEST(EnergyMatrix, CoincidentUsersCostNothing) {
  const auto m = pairwise_energy_matrix({0, 0}, {{10, 10}, {10, 10}}, linear_energy);
  EXPECT_EQ(m(1, 2), 0.0);
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_GT(m(0, 1), 0.0);
}

TEST(EnergyMatrix, SymmetricAndEvaluatedOncePerPair) {
  int calls = 0;
  const auto m = pairwise_energy_matrix({0, 0}, {{100, 0}, {200, 0}, {300, 0}}, [&](double d) {
    ++calls;
    return linear_energy(d);
  });
  EXPECT_EQ(calls, 6);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(m(i, j), m(j, i));
  EXPECT_DOUBLE_EQ(m(1, 3), linear_energy(200.0));
}

TEST(EnergyMatrix, FailureNamesThePair) {
  try {
    pairwise_energy_matrix({0, 0}, {{100, 0}, {250, 0}}, [](double d) -> double {
      if (d > 200) throw SolverError("boom");
      return d;
    });
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_NE(std::string(e.what()).find("(0, 2)"), std::string::npos);
  }
}

TEST(Exhaustive, SingleUser) {
  const auto m = pairwise_energy_matrix({0, 0}, {{30, 40}}, linear_energy);
  const auto o = solve_order_exhaustive(m);
  EXPECT_EQ(o.order, std::vector<std::size_t>{1});
  EXPECT_DOUBLE_EQ(o.total_energy, 2 * linear_energy(50.0));
}

TEST(Exhaustive, RefusesMoreThanTenUsers) {
  std::vector<Point2> users(11, {1.0, 1.0});
  const auto m = pairwise_energy_matrix({0, 0}, users, linear_energy);
  EXPECT_THROW(solve_order_exhaustive(m), InvalidParameter);
}

TEST(Exhaustive, NoSampledPermutationIsCheaper) {
  const auto m = random_matrix(8, 7);
  const auto best = solve_order_exhaustive(m);
  for (std::uint64_t s = 0; s < 200; ++s) EXPECT_LE(best.total_energy, random_order(m, s).total_energy + 1e-9);
}

TEST(Dual, SingleUser) {
  const auto m = pairwise_energy_matrix({0, 0}, {{30, 40}}, linear_energy);
  const auto r = solve_order_dual(m);
  EXPECT_EQ(r.order.order, std::vector<std::size_t>{1});
  EXPECT_DOUBLE_EQ(r.order.total_energy, m(0, 1) + m(1, 0));
}

TEST(Dual, TwoSymmetricUsersTieToLexicographicOrder) {
  const auto m = pairwise_energy_matrix({0, 0}, {{100, 0}, {-100, 0}}, linear_energy);
  const auto r = solve_order_dual(m);
  EXPECT_EQ(r.order.order, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(solve_order_exhaustive(m).order, (std::vector<std::size_t>{1, 2}));
}

TEST(Dual, CollinearUsersMatchExhaustive) {
  const auto m = pairwise_energy_matrix({0, 0}, {{100, 0}, {200, 0}, {300, 0}}, linear_energy);
  const auto r = solve_order_dual(m);
  const auto ex = solve_order_exhaustive(m);
  EXPECT_EQ(ex.order, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(r.order.order, ex.order);
  EXPECT_DOUBLE_EQ(r.order.total_energy, ex.total_energy);
}

TEST(Dual, MultipliersStayNonNegativeAndOrderIsPermutation) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = random_matrix(5, seed);
    const auto r = solve_order_dual(m);
    EXPECT_TRUE(is_permutation_of_users(r.order.order, 5));
    for (double v : r.state.gamma) EXPECT_GE(v, 0.0);
    for (double v : r.state.lambda) EXPECT_GE(v, 0.0);
    for (double v : r.state.mu) EXPECT_GE(v, 0.0);
    std::vector<std::size_t> rev(r.order.order.rbegin(), r.order.order.rend());
    EXPECT_NEAR(tour_cost(m, rev), r.order.total_energy, 1e-9 * r.order.total_energy);
    EXPECT_GE(r.order.total_energy, solve_order_exhaustive(m).total_energy - 1e-9);
  }
}

TEST(Dual, DualObjectiveNeverExceedsOptimum) {
  const auto m = random_matrix(5, 11);
  const auto r = solve_order_dual(m);
  const double opt = solve_order_exhaustive(m).total_energy;
  for (const auto& it : r.trace) EXPECT_LE(it.dual_objective, opt * (1 + 1e-9));
}

TEST(Dual, PolishingNeverWorsensRepair) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const auto m = random_matrix(6, seed);
    const auto r = solve_order_dual(m);
    EXPECT_LE(r.repaired_best.total_energy, r.repaired_final.total_energy + 1e-9);
    EXPECT_LE(r.order.total_energy, r.repaired_best.total_energy + 1e-9);
    EXPECT_NEAR(r.order.total_energy, tour_cost(m, r.order.order), 1e-9);
  }
}

TEST(Dual, PolishedOrderMatchesExhaustiveOnMostInstances) {
  int hits = 0;
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    const auto m = random_matrix(6, seed);
    hits += solve_order_dual(m).order.total_energy <= solve_order_exhaustive(m).total_energy * (1 + 1e-9);
  }
  EXPECT_GE(hits, 18);
}

TEST(Dual, TraceCsvHeader) {
  const auto r = solve_order_dual(random_matrix(3, 2));
  std::ostringstream os;
  write_dual_trace_csv(os, r.trace);
  const std::string text = os.str();
  EXPECT_EQ(text.rfind("iter,dual_objective,primal_cost,infeasibility_count\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), r.trace.size() + 1);
}

TEST(Assignment, DiagonalDominantGivesIdentity) {
  std::vector<std::vector<double>> c = {{0, 5, 5}, {5, 0, 5}, {5, 5, 0}};
  EXPECT_EQ(recover_assignment(c), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Assignment, CollidingPreferencesResolvedByTotalCost) {
  // both columns prefer row 0; enumerating the two assignments: 1+5=6 vs 2+3=5
  std::vector<std::vector<double>> c = {{1, 2}, {3, 5}};
  EXPECT_EQ(recover_assignment(c), (std::vector<std::size_t>{1, 0}));
}

TEST(Assignment, AlwaysPermutationAndOptimal) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + rep % 6;
    std::vector<std::vector<double>> c(n, std::vector<double>(n));
    for (auto& row : c)
      for (auto& v : row) v = u(rng);
    const auto a = recover_assignment(c);
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    EXPECT_TRUE(std::is_permutation(a.begin(), a.end(), p.begin()));
    double got = 0, best = 1e300;
    for (std::size_t k = 0; k < n; ++k) got += c[k][a[k]];
    do {
      double s = 0;
      for (std::size_t k = 0; k < n; ++k) s += c[k][p[k]];
      best = std::min(best, s);
    } while (std::next_permutation(p.begin(), p.end()));
    EXPECT_NEAR(got, best, 1e-9);
  }
}
