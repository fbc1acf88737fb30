#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lamdrl/channel.hpp"
#include "lamdrl/error.hpp"
#include "lamdrl/geometry.hpp"

namespace lamdrl {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// The action: per-user power and bandwidth fractions of the beam caps.
/// Fractions scale linear watts, so 0.5 is half of P_max in watts.
struct Allocation {
  std::vector<double> power_fraction;
  std::vector<double> bandwidth_fraction;
  double p_max_dbm = 40.0;
  double b_max_hz = 20e6;

  Allocation() = default;
  Allocation(std::size_t num_users, double power, double bandwidth, double p_max = 40.0,
             double b_max = 20e6)
      : power_fraction(num_users, std::clamp(power, 0.0, 1.0)),
        bandwidth_fraction(num_users, std::clamp(bandwidth, 0.0, 1.0)),
        p_max_dbm(p_max),
        b_max_hz(b_max) {}

  /// First half of `action` are power fractions, second half bandwidth
  /// fractions; out-of-range entries are clamped.
  static Allocation from_action(std::span<const double> action, double p_max = 40.0,
                                double b_max = 20e6) {
    if (action.size() % 2 != 0) throw DomainError("action length must be even (2 * N_u)");
    const std::size_t n = action.size() / 2;
    Allocation a;
    a.p_max_dbm = p_max;
    a.b_max_hz = b_max;
    a.power_fraction.resize(n);
    a.bandwidth_fraction.resize(n);
    for (std::size_t u = 0; u < n; ++u) {
      a.power_fraction[u] = std::clamp(action[u], 0.0, 1.0);
      a.bandwidth_fraction[u] = std::clamp(action[n + u], 0.0, 1.0);
    }
    return a;
  }

  std::size_t size() const { return power_fraction.size(); }
  double p_max_watts() const { return dbm_to_watts(p_max_dbm); }
  double power_watts(std::size_t u) const { return power_fraction[u] * p_max_watts(); }
  double bandwidth_hz(std::size_t u) const { return bandwidth_fraction[u] * b_max_hz; }
};

struct KpiParams {
  double noise_density_dbm_hz = -174.0;
  double sinr_threshold_db = -3.0;
  /// Co-channel overlap factor for leakage from non-serving visible satellites.
  double kappa = 0.1;

  double noise_density_w_hz() const { return dbm_to_watts(noise_density_dbm_hz); }
  double sinr_threshold() const { return std::pow(10.0, sinr_threshold_db / 10.0); }

  void validate() const {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("kappa must lie in [0, 1]");
    if (!std::isfinite(noise_density_dbm_hz)) throw ConfigError("noise density must be finite");
  }
};

/// Every (satellite, user) link at one geometry update.
struct LinkGrid {
  std::size_t num_sats = 0;
  std::size_t num_users = 0;
  std::vector<LinkState> links;
  std::vector<char> visible;

  LinkGrid() = default;
  LinkGrid(std::size_t sats, std::size_t users)
      : num_sats(sats), num_users(users), links(sats * users), visible(sats * users, 1) {}

  LinkState& at(std::size_t s, std::size_t u) { return links[s * num_users + u]; }
  const LinkState& at(std::size_t s, std::size_t u) const { return links[s * num_users + u]; }
  bool is_visible(std::size_t s, std::size_t u) const { return visible[s * num_users + u] != 0; }

  LossTable loss_table() const {
    LossTable t(num_sats, num_users);
    for (std::size_t s = 0; s < num_sats; ++s)
      for (std::size_t u = 0; u < num_users; ++u) {
        t.loss(s, u) = at(s, u).total_loss_db;
        t.set_visible(s, u, is_visible(s, u));
      }
    return t;
  }
};

inline double sinr(const LinkState& link, const Allocation& alloc, std::size_t user,
                   double interference_w, double noise_density_w_hz) {
  const double bw = alloc.bandwidth_hz(user);
  if (bw <= 0.0) return 0.0;  // zero bandwidth: no service, counted in outage
  const double signal = alloc.power_watts(user) * link.linear_gain();
  return signal / (interference_w + noise_density_w_hz * bw);
}

inline double rate(double bandwidth_hz, double sinr_linear) {
  if (bandwidth_hz <= 0.0) return 0.0;
  return bandwidth_hz * std::log2(1.0 + sinr_linear);
}

/// Jain's index; all-zero input returns 1.
inline double jain(std::span<const double> rates) {
  if (rates.empty()) throw DomainError("jain index needs at least one user");
  double s = 0.0, s2 = 0.0;
  for (double r : rates) {
    s += r;
    s2 += r * r;
  }
  if (s2 == 0.0) return 1.0;
  if (std::all_of(rates.begin(), rates.end(), [&](double r) { return r == rates[0]; })) return 1.0;
  const double n = static_cast<double>(rates.size());
  // The true value lies in [1/n, 1]; clamp away rounding at the ends.
  return std::clamp((s * s) / (n * s2), 1.0 / n, 1.0);
}

/// Fraction of users strictly below the threshold.
inline double outage(std::span<const double> sinrs, double threshold) {
  if (sinrs.empty()) throw DomainError("outage needs at least one user");
  std::size_t below = 0;
  for (double g : sinrs)
    if (g < threshold) ++below;
  return static_cast<double>(below) / static_cast<double>(sinrs.size());
}

/// Mean allocated transmit power per satellite over the users it serves.
inline std::vector<double> mean_satellite_power(std::size_t num_sats,
                                                std::span<const std::size_t> serving,
                                                const Allocation& alloc) {
  std::vector<double> sum(num_sats, 0.0);
  std::vector<std::size_t> count(num_sats, 0);
  for (std::size_t u = 0; u < serving.size(); ++u) {
    sum[serving[u]] += alloc.power_watts(u);
    ++count[serving[u]];
  }
  for (std::size_t s = 0; s < num_sats; ++s) sum[s] = count[s] ? sum[s] / count[s] : 0.0;
  return sum;
}

/// Co-channel leakage from every visible non-serving satellite, transmitting
/// at its mean allocated power, scaled by kappa.
inline std::vector<double> interference(const LinkGrid& grid, std::span<const std::size_t> serving,
                                        const Allocation& alloc, double kappa) {
  std::vector<double> out(grid.num_users, 0.0);
  if (kappa == 0.0 || grid.num_sats < 2) return out;
  const auto p_mean = mean_satellite_power(grid.num_sats, serving, alloc);
  for (std::size_t u = 0; u < grid.num_users; ++u) {
    double acc = 0.0;
    for (std::size_t s = 0; s < grid.num_sats; ++s) {
      if (s == serving[u] || !grid.is_visible(s, u)) continue;
      acc += p_mean[s] * grid.at(s, u).linear_gain();
    }
    out[u] = kappa * acc;
  }
  return out;
}

struct RegionAggregates {
  double r_eq = 0.0;
  double r_hl = 0.0;
  double variance = 0.0;  // population variance
  double mean = 0.0;
};

inline RegionAggregates region_aggregates(std::span<const double> rates,
                                          std::span<const Region> regions) {
  if (rates.size() != regions.size() || rates.empty())
    throw DomainError("region labels must cover every user");
  RegionAggregates agg;
  for (std::size_t u = 0; u < rates.size(); ++u) {
    if (is_high_latitude(regions[u]))
      agg.r_hl += rates[u];
    else
      agg.r_eq += rates[u];
  }
  const double n = static_cast<double>(rates.size());
  agg.mean = (agg.r_eq + agg.r_hl) / n;
  for (double r : rates) agg.variance += (r - agg.mean) * (r - agg.mean);
  agg.variance /= n;
  return agg;
}

struct KpiFrame {
  std::vector<double> sinr;
  std::vector<double> rate;
  std::vector<double> interference;
  double sum_rate = 0.0;
  double jain = 1.0;
  double outage = 0.0;
  double r_eq = 0.0;
  double r_hl = 0.0;
  double rate_variance = 0.0;
  double mean_rate = 0.0;
  double noise_density = 0.0;
  double sinr_threshold = 0.0;
};

inline KpiFrame compute_frame(const LinkGrid& grid, std::span<const std::size_t> serving,
                              const Allocation& alloc, std::span<const Region> regions,
                              const KpiParams& params) {
  const std::size_t n = grid.num_users;
  if (alloc.size() != n || serving.size() != n || regions.size() != n)
    throw DomainError("frame inputs disagree on the number of users");
  KpiFrame f;
  f.noise_density = params.noise_density_w_hz();
  f.sinr_threshold = params.sinr_threshold();
  f.interference = interference(grid, serving, alloc, params.kappa);
  f.sinr.resize(n);
  f.rate.resize(n);
  for (std::size_t u = 0; u < n; ++u) {
    f.sinr[u] = sinr(grid.at(serving[u], u), alloc, u, f.interference[u], f.noise_density);
    f.rate[u] = rate(alloc.bandwidth_hz(u), f.sinr[u]);
  }
  // Summed in region order so that r_eq + r_hl == sum_rate bit for bit.
  const auto agg = region_aggregates(f.rate, regions);
  f.r_eq = agg.r_eq;
  f.r_hl = agg.r_hl;
  f.sum_rate = agg.r_eq + agg.r_hl;
  f.mean_rate = agg.mean;
  f.rate_variance = agg.variance;
  f.jain = jain(f.rate);
  f.outage = outage(f.sinr, f.sinr_threshold);
  return f;
}

}  // namespace lamdrl
