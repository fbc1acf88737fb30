#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lamdrl/channel.hpp"
#include "lamdrl/kpi.hpp"
#include "oracles.hpp"

using namespace lamdrl;

namespace {
LinkState unit_link() {
  LinkState l;
  l.tx_gain_dbi = 0.0;
  l.rx_gain_dbi = 0.0;
  l.total_loss_db = 0.0;
  return l;
}
}  // namespace

TEST(Sinr, UnitCancellation) {
  // P = 1 W (30 dBm), gains cancel, N0 * B = 0.5 W.
  Allocation a(1, 1.0, 1.0, 30.0, 1.0);
  EXPECT_NEAR(sinr(unit_link(), a, 0, 0.0, 0.5), 2.0, 1e-12);
}

TEST(Sinr, ZeroPowerAndZeroBandwidth) {
  Allocation a(1, 0.0, 1.0);
  EXPECT_EQ(sinr(unit_link(), a, 0, 0.0, 1e-20), 0.0);
  Allocation b(1, 1.0, 0.0);
  EXPECT_EQ(sinr(unit_link(), b, 0, 0.0, 1e-20), 0.0);
  EXPECT_EQ(rate(0.0, 5.0), 0.0);
}

TEST(Sinr, DualPathOracle) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> loss(150, 210), frac(0, 1), intf(0, 1e-12);
  const double n0_dbm = -174.0;
  const double n0 = dbm_to_watts(n0_dbm);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    LinkState l;
    l.tx_gain_dbi = 30.0;
    l.rx_gain_dbi = 25.0;
    l.total_loss_db = loss(gen);
    Allocation a(1, frac(gen), frac(gen));
    const double I = intf(gen);
    const double lin = sinr(l, a, 0, I, n0);
    const double ref = oracle::sinr_db_path(a.power_watts(0), 30.0, 25.0, l.total_loss_db,
                                            a.bandwidth_hz(0), I, n0_dbm);
    if (ref > 0) worst = std::max(worst, std::abs(lin - ref) / ref);
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Sinr, MonotoneInOwnPower) {
  LinkState l;
  l.tx_gain_dbi = 30;
  l.rx_gain_dbi = 25;
  l.total_loss_db = 180;
  double prev = -1;
  for (double p = 0; p <= 1.0; p += 0.01) {
    Allocation a(1, p, 1.0);
    const double g = sinr(l, a, 0, 1e-13, 4e-21);
    EXPECT_GE(g, prev);
    prev = g;
  }
}

TEST(Rate, ShannonExamples) {
  EXPECT_DOUBLE_EQ(rate(20e6, 1.0), 20e6);
  EXPECT_DOUBLE_EQ(rate(10e6, 3.0), 2e7);
  EXPECT_DOUBLE_EQ(rate(20e6, 0.0), 0.0);
}

TEST(Jain, Examples) {
  std::vector<double> eq(7, 3.5);
  EXPECT_DOUBLE_EQ(jain(eq), 1.0);
  std::vector<double> one(50, 0.0);
  one[13] = 4.0;
  EXPECT_NEAR(jain(one), 0.02, 1e-15);
  std::vector<double> r{1, 2, 3};
  EXPECT_NEAR(jain(r), 36.0 / 42.0, 1e-15);
  std::vector<double> zeros(5, 0.0);
  EXPECT_EQ(jain(zeros), 1.0);
}

TEST(Jain, BoundsAndScaleInvariance) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> r(0, 1e8), c(1e-3, 1e3);
  std::uniform_int_distribution<int> n(1, 60);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> v(static_cast<std::size_t>(n(gen)));
    for (auto& x : v) x = r(gen);
    const double j = jain(v);
    EXPECT_GE(j, 1.0 / v.size());
    EXPECT_LE(j, 1.0);
    const double k = c(gen);
    std::vector<double> w(v);
    for (auto& x : w) x *= k;
    EXPECT_NEAR(jain(w), j, 1e-12);
    EXPECT_NEAR(j, oracle::jain(v), 1e-12);
  }
}

TEST(Outage, StrictThreshold) {
  const double th = std::pow(10.0, -0.3);
  std::vector<double> above{1, 2, 3};
  EXPECT_EQ(outage(above, th), 0.0);
  std::vector<double> half{0.1, 0.2, 1.0, 2.0};
  EXPECT_EQ(outage(half, th), 0.5);
  std::vector<double> at{th};
  EXPECT_EQ(outage(at, th), 0.0);
}

namespace {
/// Two satellites, users spread along the line between them.
LinkGrid two_sat_grid(std::size_t users, double kappa_visible = true) {
  LinkGrid g(2, users);
  ChannelParams p;
  for (std::size_t u = 0; u < users; ++u) {
    const double x = static_cast<double>(u) / std::max<std::size_t>(users - 1, 1);
    g.at(0, u) = link_loss(600 + 1000 * x, 40, WeatherScenario::nominal(), 0.5, p);
    g.at(1, u) = link_loss(1600 - 1000 * x, 40, WeatherScenario::nominal(), 0.5, p);
    g.visible[u] = g.visible[users + u] = kappa_visible ? 1 : 0;
  }
  return g;
}
}  // namespace

TEST(Interference, DegenerateCases) {
  LinkGrid one(1, 3);
  for (auto& l : one.links) l = link_loss(800, 40, WeatherScenario::nominal(), 0.5, ChannelParams{});
  std::vector<std::size_t> serving{0, 0, 0};
  Allocation a(3, 1.0, 1.0);
  for (double v : interference(one, serving, a, 0.1)) EXPECT_EQ(v, 0.0);
  const auto two = two_sat_grid(3);
  std::vector<std::size_t> s2{0, 0, 1};
  for (double v : interference(two, s2, a, 0.0)) EXPECT_EQ(v, 0.0);
}

TEST(Interference, MatchesDirectSum) {
  const auto g = two_sat_grid(4);
  std::vector<std::size_t> serving{0, 0, 1, 1};
  Allocation a(4, 1.0, 1.0);
  a.power_fraction = {0.2, 0.6, 1.0, 0.5};
  const auto I = interference(g, serving, a, 0.1);
  const double p0 = (0.2 + 0.6) / 2 * 10.0, p1 = (1.0 + 0.5) / 2 * 10.0;
  EXPECT_DOUBLE_EQ(I[0], 0.1 * p1 * g.at(1, 0).linear_gain());
  EXPECT_DOUBLE_EQ(I[2], 0.1 * p0 * g.at(0, 2).linear_gain());
}

TEST(Interference, SymmetricMidpoint) {
  // Midpoint user of a symmetric two-satellite layout: the leakage is the same
  // whichever satellite serves it.
  const auto g = two_sat_grid(3);
  Allocation a(3, 1.0, 1.0);
  std::vector<std::size_t> via0{0, 0, 1}, via1{0, 1, 1};
  const double i0 = interference(g, via0, a, 0.1)[1];
  const double i1 = interference(g, via1, a, 0.1)[1];
  EXPECT_NEAR(i0, i1, 1e-12 * i0);
}

TEST(Interference, HiddenSatellitesDoNotLeak) {
  const auto g = two_sat_grid(3, false);
  Allocation a(3, 1.0, 1.0);
  std::vector<std::size_t> s{0, 0, 1};
  for (double v : interference(g, s, a, 0.1)) EXPECT_EQ(v, 0.0);
}

TEST(Regions, Aggregates) {
  std::vector<double> r{1, 2, 3};
  std::vector<Region> eq(3, Region::Equatorial);
  auto a = region_aggregates(r, eq);
  EXPECT_EQ(a.r_hl, 0.0);
  EXPECT_EQ(a.r_eq, 6.0);
  std::vector<double> flat(4, 5.0);
  EXPECT_EQ(region_aggregates(flat, std::vector<Region>(4, Region::NorthHigh)).variance, 0.0);
  std::vector<double> r2{0, 4};
  std::vector<Region> mixed{Region::Equatorial, Region::SouthHigh};
  a = region_aggregates(r2, mixed);
  EXPECT_EQ(a.mean, 2.0);
  EXPECT_EQ(a.variance, 4.0);
  EXPECT_EQ(a.r_hl, 4.0);
}

TEST(Frame, InvariantsOnRandomGrids) {
  std::mt19937_64 gen(29);
  std::uniform_real_distribution<double> frac(0, 1), d(550, 3000), el(-30, 90), q(0, 1);
  std::uniform_int_distribution<int> ns(1, 5), nu(1, 20), reg(0, 2);
  ChannelParams p;
  KpiParams kp;
  for (int trial = 0; trial < 300; ++trial) {
    const auto S = static_cast<std::size_t>(ns(gen)), U = static_cast<std::size_t>(nu(gen));
    LinkGrid g(S, U);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t u = 0; u < U; ++u) {
        g.at(s, u) = link_loss(d(gen), el(gen), WeatherScenario::nominal(), q(gen), p);
        g.visible[s * U + u] = g.at(s, u).elevation_deg >= 10.0;
      }
    std::vector<std::size_t> serving(U);
    std::vector<Region> regions(U);
    Allocation a(U, 0.0, 0.0);
    for (std::size_t u = 0; u < U; ++u) {
      serving[u] = static_cast<std::size_t>(gen() % S);
      regions[u] = static_cast<Region>(reg(gen));
      a.power_fraction[u] = frac(gen);
      a.bandwidth_fraction[u] = frac(gen);
    }
    const auto f = compute_frame(g, serving, a, regions, kp);
    EXPECT_EQ(f.r_eq + f.r_hl, f.sum_rate);
    double sum = 0;
    for (double r : f.rate) sum += r;
    EXPECT_NEAR(sum, f.sum_rate, 1e-9 * std::max(sum, 1.0));
    const double steps = f.outage * static_cast<double>(U);
    EXPECT_NEAR(steps, std::round(steps), 1e-9);
    EXPECT_NEAR(f.rate_variance, oracle::population_variance(f.rate),
                1e-9 * std::max(f.rate_variance, 1.0));
    for (std::size_t u = 0; u < U; ++u) {
      const double ref = oracle::sinr_db_path(a.power_watts(u), 30, 25, g.at(serving[u], u).total_loss_db,
                                              a.bandwidth_hz(u), f.interference[u], -174.0);
      EXPECT_NEAR(f.sinr[u], ref, 1e-9 * std::max(ref, 1e-300));
      EXPECT_NEAR(f.rate[u], oracle::shannon(a.bandwidth_hz(u), ref), 1e-9 * std::max(f.rate[u], 1.0));
    }
  }
}

TEST(Frame, OutageNonIncreasingUnderPowerScaling) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> d(550, 8000), q(0, 1);
  ChannelParams p;
  KpiParams kp;
  kp.kappa = 0.0;
  const std::size_t U = 30;
  LinkGrid g(1, U);
  for (std::size_t u = 0; u < U; ++u) g.at(0, u) = link_loss(d(gen), 20, WeatherScenario::extreme(), q(gen), p);
  std::vector<std::size_t> serving(U, 0);
  std::vector<Region> regions(U, Region::Equatorial);
  double prev = 2.0;
  for (double s = 0.05; s <= 1.0; s += 0.05) {
    const auto f = compute_frame(g, serving, Allocation(U, s, 1.0), regions, kp);
    EXPECT_LE(f.outage, prev);
    prev = f.outage;
  }
}

TEST(Allocation, ActionMappingAndClamp) {
  std::vector<double> act{0.5, -0.2, 1.7, 0.25};
  const auto a = Allocation::from_action(act);
  EXPECT_EQ(a.power_fraction, (std::vector<double>{0.5, 0.0}));
  EXPECT_EQ(a.bandwidth_fraction, (std::vector<double>{1.0, 0.25}));
  EXPECT_NEAR(a.power_watts(0), 5.0, 1e-12);  // half of 10 W, linear
  EXPECT_EQ(a.bandwidth_hz(1), 5e6);
  std::vector<double> odd{0.1, 0.2, 0.3};
  EXPECT_THROW(Allocation::from_action(odd), DomainError);
}
