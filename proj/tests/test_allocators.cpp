#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "lamdrl/allocators.hpp"
#include "oracles.hpp"

using namespace lamdrl;

namespace {
ChannelSnapshot flat(std::size_t n, double gain = 1e-12) {
  ChannelSnapshot s;
  s.gain.assign(n, gain);
  s.noise_floor.assign(n, 8e-14);
  return s;
}
}  // namespace

TEST(Equal, PerUserCapsAndBudget) {
  auto s = flat(4);
  auto a = equal_allocation(s);
  for (std::size_t u = 0; u < 4; ++u) {
    EXPECT_EQ(a.power_fraction[u], 1.0);
    EXPECT_EQ(a.bandwidth_fraction[u], 1.0);
  }
  s.budget_w = 4 * 10.0;
  EXPECT_EQ(equal_allocation(s).power_fraction, a.power_fraction);
  s.budget_w = 0.0;
  for (double f : equal_allocation(s).power_fraction) EXPECT_EQ(f, 0.0);
  s.budget_w = 20.0;
  for (double f : equal_allocation(s).power_fraction) EXPECT_NEAR(f, 0.5, 1e-15);
}

TEST(WaterFilling, SymmetricSplit) {
  const auto r = water_filling(flat(2), 8.0);
  EXPECT_NEAR(r.power_w[0], 4.0, 1e-8);
  EXPECT_NEAR(r.power_w[1], 4.0, 1e-8);
  for (double b : r.allocation.bandwidth_fraction) EXPECT_EQ(b, 1.0);
}

TEST(WaterFilling, WeakUserBelowLevelGetsNothing) {
  ChannelSnapshot s = flat(2);
  s.gain = {1e-12, 1e-16};  // noise-to-gain 0.08 W vs 800 W
  const auto r = water_filling(s, 5.0);
  EXPECT_EQ(r.power_w[1], 0.0);
  EXPECT_NEAR(r.power_w[0], 5.0, 1e-8);
  const auto g = oracle::grid_search(2, 5.0, 10.0, 1000, [&](const std::vector<double>& p) {
    return fixtures::sum_rate(s, p);
  });
  EXPECT_GE(fixtures::sum_rate(s, r.power_w), g.best * (1 - 1e-3));
}

TEST(WaterFilling, SingleUser) {
  EXPECT_NEAR(water_filling(flat(1), 3.0).power_w[0], 3.0, 1e-9);
  const auto over = water_filling(flat(1), 25.0);
  EXPECT_EQ(over.power_w[0], 10.0);
  EXPECT_NEAR(over.unspent_w, 15.0, 1e-12);
}

TEST(WaterFilling, GridOracleAndKkt) {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = trial % 2 ? 3 : 2;
    const auto s = fixtures::random_snapshot(gen, n);
    const double budget = frac(gen) * static_cast<double>(n) * s.p_max_w();
    const auto r = water_filling(s, budget);
    double spent = 0;
    for (double p : r.power_w) spent += p;
    EXPECT_NEAR(spent, budget, 1e-8 * budget);
    const auto g = oracle::grid_search(n, budget, s.p_max_w(), n == 2 ? 1000 : 400,
                                       [&](const std::vector<double>& p) { return fixtures::sum_rate(s, p); });
    EXPECT_GE(fixtures::sum_rate(s, r.power_w), g.best * (1 - 1e-3));
    for (std::size_t u = 0; u < n; ++u) {
      if (r.power_w[u] <= 0 || r.power_w[u] >= s.p_max_w()) continue;
      EXPECT_NEAR(r.power_w[u] + s.noise_floor[u] / s.gain[u], r.level, 1e-6 * r.level);
    }
    // At least as good as the equal split of the same budget.
    std::vector<double> eq(n, std::min(budget / n, s.p_max_w()));
    EXPECT_GE(fixtures::sum_rate(s, r.power_w), fixtures::sum_rate(s, eq) * (1 - 1e-12));
  }
}

TEST(WaterFilling, RejectsNonPositiveBudget) {
  EXPECT_THROW(water_filling(flat(2), 0.0), DomainError);
  ChannelSnapshot bad = flat(2);
  bad.gain[1] = 0.0;
  EXPECT_THROW(water_filling(bad, 1.0), DomainError);
}

TEST(MaxMin, SymmetricSplit) {
  const auto r = max_min_fairness(flat(3), 9.0);
  for (double p : r.power_w) EXPECT_NEAR(p, 3.0, 9.0 / 1e4);
}

TEST(MaxMin, WeakerUserGetsMore) {
  ChannelSnapshot s = flat(2);
  s.gain = {1e-12, 1e-13};
  const double budget = 10.0;
  const auto r = max_min_fairness(s, budget);
  EXPECT_GT(r.power_w[1], r.power_w[0]);
  std::vector<double> eq{5.0, 5.0};
  EXPECT_GE(fixtures::min_rate(s, r.power_w), fixtures::min_rate(s, eq));
  const auto g = oracle::grid_search(2, budget, 10.0, 1000,
                                     [&](const std::vector<double>& p) { return fixtures::min_rate(s, p); });
  EXPECT_GE(fixtures::min_rate(s, r.power_w), g.best * 0.99);
}

TEST(MaxMin, SaturatesWithLargeBudget) {
  const auto r = max_min_fairness(flat(3), 1e6);
  for (double f : r.allocation.power_fraction) EXPECT_EQ(f, 1.0);
}

TEST(MaxMin, RandomSnapshotsBeatEqualSplit) {
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 4;
    const auto s = fixtures::random_snapshot(gen, n);
    const double budget = frac(gen) * static_cast<double>(n) * s.p_max_w();
    const auto r = max_min_fairness(s, budget);
    std::vector<double> eq(n, budget / n);
    EXPECT_GE(fixtures::min_rate(s, r.power_w), fixtures::min_rate(s, eq) * (1 - 1e-12));
    double spent = 0;
    for (double p : r.power_w) {
      EXPECT_LE(p, s.p_max_w());
      spent += p;
    }
    EXPECT_LE(spent, budget * (1 + 1e-9));
  }
}

TEST(Proportional, Normalization) {
  auto s = flat(3);
  for (double f : proportional_capacity(s).power_fraction) EXPECT_EQ(f, 1.0);
  // Capacities (1, 2) Mbps up to the common log2 factor.
  ChannelSnapshot t = flat(2);
  t.gain = {8e-14 / 10.0 * 1.0, 8e-14 / 10.0 * 3.0};  // SNR 1 and 3 -> log2 = 1 and 2
  const auto a = proportional_capacity(t);
  EXPECT_NEAR(a.power_fraction[0], 0.5, 1e-12);
  EXPECT_NEAR(a.power_fraction[1], 1.0, 1e-12);
  EXPECT_EQ(a.power_fraction, a.bandwidth_fraction);
  ChannelSnapshot weak = flat(2);
  weak.gain[1] = 1e-30;
  EXPECT_LT(proportional_capacity(weak).power_fraction[1], 1e-10);
}

TEST(Allocators, RangeAndDeterminism) {
  std::mt19937_64 gen(303);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = fixtures::random_snapshot(gen, 6);
    const double budget = 0.5 * 6 * s.p_max_w();
    for (const auto& a : {equal_allocation(s), water_filling(s, budget).allocation,
                          max_min_fairness(s, budget).allocation, proportional_capacity(s)}) {
      for (double f : a.power_fraction) EXPECT_TRUE(f >= 0 && f <= 1);
      for (double f : a.bandwidth_fraction) EXPECT_TRUE(f >= 0 && f <= 1);
    }
    EXPECT_EQ(water_filling(s, budget).power_w, water_filling(s, budget).power_w);
    EXPECT_EQ(max_min_fairness(s, budget).power_w, max_min_fairness(s, budget).power_w);
  }
}

TEST(Allocators, Names) {
  for (auto k : {AllocatorKind::Equal, AllocatorKind::WaterFilling, AllocatorKind::MaxMin,
                 AllocatorKind::ProportionalCapacity, AllocatorKind::Drl, AllocatorKind::LamDrl})
    EXPECT_EQ(parse_allocator(to_string(k)), k);
  EXPECT_THROW(parse_allocator("greedy"), ConfigError);
  EXPECT_TRUE(is_learning(AllocatorKind::Drl));
  EXPECT_FALSE(is_learning(AllocatorKind::MaxMin));
}
