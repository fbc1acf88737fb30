#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lamdrl/error.hpp"
#include "lamdrl/kpi.hpp"

namespace lamdrl {

/// Noise-limited channel estimate the heuristics plan against.
struct ChannelSnapshot {
  std::vector<double> gain;         // g_u, linear
  std::vector<double> noise_floor;  // n_u = N0 * B_max, watts
  double p_max_dbm = 40.0;
  double b_max_hz = 20e6;
  std::optional<double> budget_w;   // total power for budgeted variants

  std::size_t size() const { return gain.size(); }
  double p_max_w() const { return dbm_to_watts(p_max_dbm); }

  void validate() const {
    if (gain.empty()) throw DomainError("snapshot needs at least one user");
    if (noise_floor.size() != gain.size()) throw DomainError("snapshot size mismatch");
    for (std::size_t u = 0; u < gain.size(); ++u)
      if (!(gain[u] > 0.0) || !std::isfinite(gain[u]) || !(noise_floor[u] > 0.0))
        throw DomainError("snapshot gains and noise floors must be positive and finite");
    if (!(b_max_hz > 0.0)) throw DomainError("bandwidth cap must be positive");
  }

  /// Snapshot of the serving links of `grid`, ignoring interference.
  static ChannelSnapshot from_links(const LinkGrid& grid, std::span<const std::size_t> serving,
                                    double p_max_dbm, double b_max_hz,
                                    double noise_density_w_hz) {
    ChannelSnapshot snap;
    snap.p_max_dbm = p_max_dbm;
    snap.b_max_hz = b_max_hz;
    for (std::size_t u = 0; u < grid.num_users; ++u) {
      snap.gain.push_back(grid.at(serving[u], u).linear_gain());
      snap.noise_floor.push_back(noise_density_w_hz * b_max_hz);
    }
    return snap;
  }
};

/// Outcome of a budgeted allocator.
struct BudgetedAllocation {
  Allocation allocation;
  std::vector<double> power_w;
  double level = 0.0;      // water level (WF) or common rate level (MMF)
  double unspent_w = 0.0;  // budget left once every user sits at its cap
};

namespace detail {

inline Allocation from_powers(const ChannelSnapshot& snap, std::span<const double> power_w) {
  Allocation a(snap.size(), 0.0, 1.0, snap.p_max_dbm, snap.b_max_hz);
  const double cap = snap.p_max_w();
  for (std::size_t u = 0; u < snap.size(); ++u)
    a.power_fraction[u] = std::clamp(power_w[u] / cap, 0.0, 1.0);
  return a;
}

inline double user_rate(const ChannelSnapshot& snap, std::size_t u, double p) {
  return snap.b_max_hz * std::log2(1.0 + snap.gain[u] * p / snap.noise_floor[u]);
}

/// Power needed by user u to reach `rate_bps` at full bandwidth.
inline double power_for_rate(const ChannelSnapshot& snap, std::size_t u, double rate_bps) {
  return snap.noise_floor[u] / snap.gain[u] * std::expm1(rate_bps / snap.b_max_hz * std::log(2.0));
}

}  // namespace detail

inline Allocation equal_allocation(const ChannelSnapshot& snap) {
  if (snap.size() == 0) throw DomainError("equal allocation needs at least one user");
  Allocation a(snap.size(), 1.0, 1.0, snap.p_max_dbm, snap.b_max_hz);
  if (snap.budget_w) {
    const double share = std::max(*snap.budget_w, 0.0) / static_cast<double>(snap.size());
    std::fill(a.power_fraction.begin(), a.power_fraction.end(),
              std::clamp(share / snap.p_max_w(), 0.0, 1.0));
  }
  return a;
}

/// Classical water-filling of `total_power_w` under per-user caps. Water
/// level found by bisection; users that overflow their cap are pinned at it and
/// the clipped excess is redistributed over the remaining users.
inline BudgetedAllocation water_filling(const ChannelSnapshot& snap, double total_power_w) {
  snap.validate();
  if (!(total_power_w > 0.0)) throw DomainError("water-filling budget must be positive");
  const std::size_t n = snap.size();
  const double cap = snap.p_max_w();
  BudgetedAllocation out;
  out.power_w.assign(n, 0.0);

  if (total_power_w >= cap * static_cast<double>(n)) {
    std::fill(out.power_w.begin(), out.power_w.end(), cap);
    out.unspent_w = total_power_w - cap * static_cast<double>(n);
    out.level = std::numeric_limits<double>::infinity();
    out.allocation = detail::from_powers(snap, out.power_w);
    return out;
  }

  std::vector<double> floor(n);
  for (std::size_t u = 0; u < n; ++u) floor[u] = snap.noise_floor[u] / snap.gain[u];

  std::vector<char> pinned(n, 0);
  double budget = total_power_w;
  double mu = 0.0;
  for (;;) {
    if (budget <= 0.0 || std::all_of(pinned.begin(), pinned.end(), [](char c) { return c != 0; }))
      break;
    auto filled = [&](double level) {
      double s = 0.0;
      for (std::size_t u = 0; u < n; ++u)
        if (!pinned[u]) s += std::max(0.0, level - floor[u]);
      return s;
    };
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < n; ++u)
      if (!pinned[u]) lo = std::min(lo, floor[u]);
    double hi = lo + budget;
    while (filled(hi) < budget) hi = lo + 2.0 * (hi - lo);
    mu = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
      mu = 0.5 * (lo + hi);
      const double s = filled(mu);
      if (std::abs(s - budget) / budget < 1e-9) break;
      (s < budget ? lo : hi) = mu;
    }
    // Bisection fixes the active set; the level on that set has a closed form.
    double active = 0.0, floors = 0.0;
    for (std::size_t u = 0; u < n; ++u)
      if (!pinned[u] && floor[u] < mu) {
        active += 1.0;
        floors += floor[u];
      }
    if (active > 0.0) mu = (budget + floors) / active;
    bool clipped = false;
    for (std::size_t u = 0; u < n; ++u) {
      if (pinned[u]) continue;
      if (mu - floor[u] > cap) {
        pinned[u] = 1;
        out.power_w[u] = cap;
        budget -= cap;
        clipped = true;
      }
    }
    if (!clipped) break;
  }
  for (std::size_t u = 0; u < n; ++u)
    if (!pinned[u]) out.power_w[u] = std::max(0.0, mu - floor[u]);
  out.level = mu;
  out.allocation = detail::from_powers(snap, out.power_w);
  return out;
}

/// Progressive filling: the user with the lowest current rate receives the
/// next increment of total_power / 1e4 until the budget or every cap is
/// exhausted. The still-unsaturated users finish within one increment of a
/// common rate; a final leveling pass equalizes them exactly on the power they
/// jointly hold.
inline BudgetedAllocation max_min_fairness(const ChannelSnapshot& snap, double total_power_w) {
  snap.validate();
  if (!(total_power_w > 0.0)) throw DomainError("max-min budget must be positive");
  const std::size_t n = snap.size();
  const double cap = snap.p_max_w();
  BudgetedAllocation out;
  out.power_w.assign(n, 0.0);

  if (total_power_w >= cap * static_cast<double>(n)) {
    std::fill(out.power_w.begin(), out.power_w.end(), cap);
    out.unspent_w = total_power_w - cap * static_cast<double>(n);
    out.level = std::numeric_limits<double>::infinity();
    out.allocation = detail::from_powers(snap, out.power_w);
    return out;
  }

  const double delta = total_power_w / 1e4;
  std::vector<double> rate(n, 0.0);
  double remaining = total_power_w;
  while (remaining > 0.0) {
    std::size_t best = n;
    for (std::size_t u = 0; u < n; ++u) {
      if (out.power_w[u] >= cap) continue;
      if (best == n || rate[u] < rate[best]) best = u;
    }
    if (best == n) break;
    const double grant = std::min({delta, cap - out.power_w[best], remaining});
    out.power_w[best] += grant;
    remaining -= grant;
    if (remaining < delta * 1e-9) remaining = 0.0;
    rate[best] = detail::user_rate(snap, best, out.power_w[best]);
  }

  // Leveling over the unsaturated users.
  std::vector<std::size_t> open;
  double pool = 0.0;
  for (std::size_t u = 0; u < n; ++u)
    if (out.power_w[u] < cap) {
      open.push_back(u);
      pool += out.power_w[u];
    }
  if (!open.empty() && pool > 0.0) {
    auto need = [&](double level) {
      double s = 0.0;
      for (std::size_t u : open) s += std::min(cap, detail::power_for_rate(snap, u, level));
      return s;
    };
    double lo = 0.0, hi = 0.0;
    for (std::size_t u : open) hi = std::max(hi, detail::user_rate(snap, u, cap));
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (need(mid) < pool ? lo : hi) = mid;
    }
    out.level = lo;
    for (std::size_t u : open) out.power_w[u] = std::min(cap, detail::power_for_rate(snap, u, lo));
  }
  out.allocation = detail::from_powers(snap, out.power_w);
  return out;
}

/// Fractions proportional to each user's full-cap capacity estimate,
/// normalized so the strongest user runs at its cap.
inline Allocation proportional_capacity(const ChannelSnapshot& snap) {
  snap.validate();
  const std::size_t n = snap.size();
  std::vector<double> cap_bps(n);
  double best = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    cap_bps[u] = detail::user_rate(snap, u, snap.p_max_w());
    best = std::max(best, cap_bps[u]);
  }
  if (!(best > 0.0)) {
    ChannelSnapshot per_user = snap;
    per_user.budget_w.reset();
    return equal_allocation(per_user);
  }
  Allocation a(n, 0.0, 0.0, snap.p_max_dbm, snap.b_max_hz);
  for (std::size_t u = 0; u < n; ++u) {
    a.power_fraction[u] = std::clamp(cap_bps[u] / best, 0.0, 1.0);
    a.bandwidth_fraction[u] = a.power_fraction[u];
  }
  return a;
}

enum class AllocatorKind { Equal, WaterFilling, MaxMin, ProportionalCapacity, Drl, LamDrl };

inline const char* to_string(AllocatorKind k) {
  switch (k) {
    case AllocatorKind::Equal: return "equal";
    case AllocatorKind::WaterFilling: return "wf";
    case AllocatorKind::MaxMin: return "mmf";
    case AllocatorKind::ProportionalCapacity: return "pc";
    case AllocatorKind::Drl: return "drl";
    case AllocatorKind::LamDrl: return "lamdrl";
  }
  return "?";
}

inline AllocatorKind parse_allocator(const std::string& s) {
  for (auto k : {AllocatorKind::Equal, AllocatorKind::WaterFilling, AllocatorKind::MaxMin,
                 AllocatorKind::ProportionalCapacity, AllocatorKind::Drl, AllocatorKind::LamDrl})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown allocator '" + s + "' (expected equal|wf|mmf|pc|drl|lamdrl)");
}

inline bool is_learning(AllocatorKind k) {
  return k == AllocatorKind::Drl || k == AllocatorKind::LamDrl;
}

}  // namespace lamdrl
