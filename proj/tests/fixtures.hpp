#pragma once

#include <random>
#include <vector>

#include "lamdrl/allocators.hpp"
#include "lamdrl/env.hpp"
#include "lamdrl/kpi.hpp"

namespace fixtures {

/// Snapshot with per-user losses spread wide enough that water-filling
/// switches users off and caps bind.
inline lamdrl::ChannelSnapshot random_snapshot(std::mt19937_64& gen, std::size_t users) {
  std::uniform_real_distribution<double> loss(160.0, 200.0);
  lamdrl::ChannelSnapshot s;
  for (std::size_t u = 0; u < users; ++u) {
    s.gain.push_back(lamdrl::db_to_linear(55.0 - loss(gen)));
    s.noise_floor.push_back(lamdrl::dbm_to_watts(-174.0) * s.b_max_hz);
  }
  return s;
}

inline double sum_rate(const lamdrl::ChannelSnapshot& s, const std::vector<double>& p) {
  double acc = 0.0;
  for (std::size_t u = 0; u < p.size(); ++u)
    acc += s.b_max_hz * std::log2(1.0 + s.gain[u] * p[u] / s.noise_floor[u]);
  return acc;
}

inline double min_rate(const lamdrl::ChannelSnapshot& s, const std::vector<double>& p) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < p.size(); ++u)
    m = std::min(m, s.b_max_hz * std::log2(1.0 + s.gain[u] * p[u] / s.noise_floor[u]));
  return m;
}

/// KPI frame with random per-user rates and regions; region sums follow the
/// library's definitions.
inline lamdrl::KpiFrame random_frame(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> n(1, 40), reg(0, 2);
  std::uniform_real_distribution<double> r(0.0, 2e8), zero(0.0, 1.0);
  const auto users = static_cast<std::size_t>(n(gen));
  std::vector<double> rates(users);
  std::vector<lamdrl::Region> regions(users);
  std::vector<double> sinrs(users);
  for (std::size_t u = 0; u < users; ++u) {
    rates[u] = zero(gen) < 0.1 ? 0.0 : r(gen);
    regions[u] = static_cast<lamdrl::Region>(reg(gen));
    sinrs[u] = std::exp2(rates[u] / 20e6) - 1.0;
  }
  lamdrl::KpiFrame f;
  f.rate = rates;
  f.sinr = sinrs;
  const auto agg = lamdrl::region_aggregates(rates, regions);
  f.r_eq = agg.r_eq;
  f.r_hl = agg.r_hl;
  f.sum_rate = agg.r_eq + agg.r_hl;
  f.mean_rate = agg.mean;
  f.rate_variance = agg.variance;
  f.jain = lamdrl::jain(rates);
  f.outage = lamdrl::outage(sinrs, std::pow(10.0, -0.3));
  return f;
}

}  // namespace fixtures
