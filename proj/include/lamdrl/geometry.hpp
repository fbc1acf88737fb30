#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lamdrl/error.hpp"
#include "lamdrl/rng.hpp"

namespace lamdrl {

using Vec3 = Eigen::Vector3d;

inline constexpr double kEarthRotationRate = 7.2921159e-5;  // rad/s
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct ConstellationConfig {
  int num_satellites = 10;
  double altitude_km = 550.0;
  double inclination_deg = 53.0;
  double earth_radius_km = 6371.0;
  double mu_km3_s2 = 398600.4418;
  /// Common argument-of-latitude phase shared by all satellites at t = 0.
  double initial_phase_deg = 0.0;
  /// Optional per-satellite phase offsets; empty means all zero.
  std::vector<double> phase_offsets_deg{};
  /// Elevation mask for association eligibility and interference visibility.
  double min_elevation_deg = 10.0;

  double raan_spacing_deg() const { return 360.0 / num_satellites; }
  double orbital_radius_km() const { return earth_radius_km + altitude_km; }
  double mean_motion() const {
    const double r = orbital_radius_km();
    return std::sqrt(mu_km3_s2 / (r * r * r));
  }
  double period_s() const { return 2.0 * std::numbers::pi / mean_motion(); }

  void validate() const {
    if (num_satellites < 1) throw ConfigError("num_satellites must be >= 1");
    if (!(altitude_km > 0.0)) throw ConfigError("altitude must be positive");
    if (!(inclination_deg >= 0.0 && inclination_deg <= 180.0))
      throw ConfigError("inclination must lie in [0, 180] degrees");
    if (!(earth_radius_km > 0.0) || !(mu_km3_s2 > 0.0))
      throw ConfigError("earth radius and gravitational parameter must be positive");
    if (!phase_offsets_deg.empty() &&
        phase_offsets_deg.size() != static_cast<std::size_t>(num_satellites))
      throw ConfigError("phase_offsets must have one entry per satellite");
    if (!(min_elevation_deg >= 0.0 && min_elevation_deg < 90.0))
      throw ConfigError("min_elevation must lie in [0, 90) degrees");
  }
};

struct SatelliteState {
  int id = 0;
  Vec3 position = Vec3::Zero();  // km
  double epoch = 0.0;            // s
};

enum class Region { Equatorial = 0, NorthHigh = 1, SouthHigh = 2 };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::Equatorial: return "equatorial";
    case Region::NorthHigh: return "north_high";
    case Region::SouthHigh: return "south_high";
  }
  return "?";
}

inline Region region_of_latitude(double lat_deg) {
  if (lat_deg > 30.0) return Region::NorthHigh;
  if (lat_deg < -30.0) return Region::SouthHigh;
  return Region::Equatorial;
}

inline bool is_high_latitude(Region r) { return r != Region::Equatorial; }

struct UserTerminal {
  int id = 0;
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  Region region = Region::Equatorial;
  Vec3 position = Vec3::Zero();  // km, Earth-fixed
};

/// Earth-fixed position of a point on the spherical Earth.
inline Vec3 surface_position(double lat_deg, double lon_deg, double earth_radius_km) {
  const double lat = lat_deg * kDegToRad;
  const double lon = lon_deg * kDegToRad;
  return earth_radius_km *
         Vec3(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat));
}

inline UserTerminal make_user(int id, double lat_deg, double lon_deg, double earth_radius_km) {
  return UserTerminal{id, lat_deg, lon_deg, region_of_latitude(lat_deg),
                      surface_position(lat_deg, lon_deg, earth_radius_km)};
}

/// Inertial (Earth-centred, non-rotating) positions of the circular constellation.
inline std::vector<SatelliteState> propagate_inertial(const ConstellationConfig& cfg, double t) {
  cfg.validate();
  if (!(t >= 0.0)) throw DomainError("propagation time must be non-negative");
  const double r = cfg.orbital_radius_km();
  const double n = cfg.mean_motion();
  const double inc = cfg.inclination_deg * kDegToRad;
  std::vector<SatelliteState> out;
  out.reserve(static_cast<std::size_t>(cfg.num_satellites));
  for (int k = 0; k < cfg.num_satellites; ++k) {
    const double raan = k * cfg.raan_spacing_deg() * kDegToRad;
    const double offset =
        cfg.phase_offsets_deg.empty() ? 0.0 : cfg.phase_offsets_deg[static_cast<std::size_t>(k)];
    const double u = (cfg.initial_phase_deg + offset) * kDegToRad + n * t;
    const double cu = std::cos(u), su = std::sin(u);
    const double co = std::cos(raan), so = std::sin(raan);
    const double ci = std::cos(inc), si = std::sin(inc);
    Vec3 pos(r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * su * si);
    out.push_back(SatelliteState{k, pos, t});
  }
  return out;
}

/// Earth-fixed positions: inertial positions rotated by -omega_E * t about z.
inline std::vector<SatelliteState> propagate(const ConstellationConfig& cfg, double t) {
  auto sats = propagate_inertial(cfg, t);
  const double theta = kEarthRotationRate * t;
  const double c = std::cos(theta), s = std::sin(theta);
  for (auto& sat : sats) {
    const Vec3 p = sat.position;
    sat.position = Vec3(c * p.x() + s * p.y(), -s * p.x() + c * p.y(), p.z());
  }
  return sats;
}

/// Counts per zone (equatorial, north, south). High-latitude zones are rounded
/// in fixed order: north rounds halves up, south rounds halves down, and the
/// equatorial zone absorbs the remainder so the total is exact.
inline std::array<int, 3> zone_counts(int num_users, const std::array<double, 3>& fractions) {
  if (num_users < 1) throw ConfigError("num_users must be >= 1");
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9 || fractions[0] < 0 || fractions[1] < 0 || fractions[2] < 0)
    throw ConfigError("zone fractions must be non-negative and sum to 1");
  const int north = static_cast<int>(std::floor(num_users * fractions[1] + 0.5));
  const int south = static_cast<int>(std::ceil(num_users * fractions[2] - 0.5));
  int eq = num_users - north - south;
  if (eq < 0) throw ConfigError("zone fractions leave no room for equatorial users");
  return {eq, north, south};
}

inline std::vector<UserTerminal> sample_users(int num_users, const std::array<double, 3>& fractions,
                                              Rng& rng, double earth_radius_km = 6371.0) {
  const auto counts = zone_counts(num_users, fractions);
  std::vector<UserTerminal> users;
  users.reserve(static_cast<std::size_t>(num_users));
  int id = 0;
  auto emit = [&](double lat) {
    const double lon = rng.uniform(-180.0, 180.0);
    users.push_back(make_user(id++, lat, lon, earth_radius_km));
  };
  for (int i = 0; i < counts[0]; ++i) emit(-30.0 + 60.0 * rng.uniform());
  for (int i = 0; i < counts[1]; ++i) emit(70.0 - 40.0 * rng.uniform());   // (30, 70]
  for (int i = 0; i < counts[2]; ++i) emit(-70.0 + 40.0 * rng.uniform());  // [-70, -30)
  return users;
}

inline double slant_distance(const SatelliteState& sat, const UserTerminal& user) {
  return (sat.position - user.position).norm();
}

/// Elevation of the satellite above the user's local horizon, degrees.
/// Negative when the satellite is below the horizon.
inline double elevation_deg(const SatelliteState& sat, const UserTerminal& user) {
  const Vec3 los = sat.position - user.position;
  const double d = los.norm();
  if (d == 0.0) return 90.0;
  const double s = los.dot(user.position.normalized()) / d;
  return std::asin(std::clamp(s, -1.0, 1.0)) * kRadToDeg;
}

/// Per-pair loss table indexed [satellite position in list][user].
struct LossTable {
  std::size_t num_sats = 0;
  std::size_t num_users = 0;
  std::vector<double> loss_db;   // total loss
  std::vector<char> visible;     // elevation >= mask

  LossTable() = default;
  LossTable(std::size_t sats, std::size_t users)
      : num_sats(sats), num_users(users), loss_db(sats * users, 0.0), visible(sats * users, 1) {}

  double& loss(std::size_t s, std::size_t u) { return loss_db[s * num_users + u]; }
  double loss(std::size_t s, std::size_t u) const { return loss_db[s * num_users + u]; }
  bool is_visible(std::size_t s, std::size_t u) const { return visible[s * num_users + u] != 0; }
  void set_visible(std::size_t s, std::size_t u, bool v) { visible[s * num_users + u] = v ? 1 : 0; }
};

/// Serving satellite (list index) per user: minimum total loss among visible
/// satellites, ties to the lowest satellite id. A user with no satellite above
/// the mask falls back to the minimum-loss satellite overall.
inline std::vector<std::size_t> associate(const std::vector<SatelliteState>& sats,
                                          const std::vector<UserTerminal>& users,
                                          const LossTable& losses) {
  if (sats.empty()) throw AssociationError("cannot associate users without satellites");
  if (losses.num_sats != sats.size() || losses.num_users != users.size())
    throw AssociationError("loss table does not match satellites x users");
  std::vector<std::size_t> serving(users.size());
  for (std::size_t u = 0; u < users.size(); ++u) {
    auto pick = [&](bool require_visible) -> std::optional<std::size_t> {
      std::optional<std::size_t> best;
      for (std::size_t s = 0; s < sats.size(); ++s) {
        if (require_visible && !losses.is_visible(s, u)) continue;
        if (!best) {
          best = s;
          continue;
        }
        const double l = losses.loss(s, u), lb = losses.loss(*best, u);
        if (l < lb || (l == lb && sats[s].id < sats[*best].id)) best = s;
      }
      return best;
    };
    auto best = pick(true);
    if (!best) best = pick(false);
    serving[u] = *best;
  }
  return serving;
}

}  // namespace lamdrl
