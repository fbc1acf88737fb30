#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "lamdrl/error.hpp"
#include "lamdrl/geometry.hpp"
#include "lamdrl/rng.hpp"

namespace lamdrl {

enum class WeatherKind { Nominal, Extreme };

inline const char* to_string(WeatherKind k) { return k == WeatherKind::Nominal ? "nominal" : "extreme"; }

inline WeatherKind parse_weather(const std::string& s) {
  if (s == "nominal") return WeatherKind::Nominal;
  if (s == "extreme") return WeatherKind::Extreme;
  throw ConfigError("unknown weather scenario '" + s + "' (expected nominal|extreme)");
}

/// Parametric stand-in for the rain/gas attenuation recommendations.
struct WeatherScenario {
  WeatherKind kind = WeatherKind::Nominal;
  double rain_min_db = 0.0;
  double rain_max_db = 3.0;
  double gas_zenith_db = 0.5;

  static WeatherScenario nominal() { return {WeatherKind::Nominal, 0.0, 3.0, 0.5}; }
  static WeatherScenario extreme() { return {WeatherKind::Extreme, 8.0, 20.0, 2.0}; }

  void validate() const {
    if (!(rain_min_db <= rain_max_db)) throw ConfigError("rain range must be non-empty");
    if (!(gas_zenith_db >= 0.0)) throw ConfigError("gas attenuation must be non-negative");
    if (kind == WeatherKind::Nominal && (rain_min_db < 0.0 || rain_max_db > 4.0))
      throw ConfigError("nominal rain range must lie within [0, 4] dB");
    if (kind == WeatherKind::Extreme && (rain_min_db < 6.0 || rain_max_db > 25.0))
      throw ConfigError("extreme rain range must lie within [6, 25] dB");
  }
};

struct ChannelParams {
  double frequency_ghz = 12.0;
  double margin_db = 3.0;
  double tx_gain_dbi = 30.0;
  double rx_gain_dbi = 25.0;
  /// Elevation floor used for the gas cosecant scaling.
  double gas_elevation_floor_deg = 10.0;

  void validate() const {
    if (!(frequency_ghz > 0.0)) throw ConfigError("carrier frequency must be positive");
    if (!(margin_db >= 0.0)) throw ConfigError("implementation margin must be non-negative");
    if (!(gas_elevation_floor_deg > 0.0 && gas_elevation_floor_deg <= 90.0))
      throw ConfigError("gas elevation floor must lie in (0, 90]");
  }
};

struct LinkState {
  int sat_id = 0;
  int user_id = 0;
  double distance_km = 0.0;
  double elevation_deg = 0.0;
  double fspl_db = 0.0;
  double gas_db = 0.0;
  double rain_db = 0.0;
  double margin_db = 0.0;
  double total_loss_db = 0.0;
  double tx_gain_dbi = 0.0;
  double rx_gain_dbi = 0.0;

  /// Linear end-to-end power gain 10^((G_t + G_r - L)/10).
  double linear_gain() const {
    return std::pow(10.0, (tx_gain_dbi + rx_gain_dbi - total_loss_db) / 10.0);
  }
};

inline double free_space_loss(double distance_km, double frequency_ghz) {
  if (!(distance_km > 0.0) || !(frequency_ghz > 0.0))
    throw DomainError("free-space loss needs positive distance and frequency");
  return 92.45 + 20.0 * std::log10(distance_km) + 20.0 * std::log10(frequency_ghz);
}

inline double gas_attenuation(double gas_zenith_db, double elevation_deg, double floor_deg) {
  const double el = std::max(elevation_deg, floor_deg) * kDegToRad;
  return gas_zenith_db / std::sin(el);
}

/// Loss components for one link given the rain quantile `rain_u` in [0, 1).
inline LinkState link_loss(double distance_km, double elevation_deg, const WeatherScenario& weather,
                           double rain_u, const ChannelParams& params) {
  LinkState ls;
  ls.distance_km = distance_km;
  ls.elevation_deg = elevation_deg;
  ls.fspl_db = free_space_loss(distance_km, params.frequency_ghz);
  ls.gas_db = gas_attenuation(weather.gas_zenith_db, elevation_deg, params.gas_elevation_floor_deg);
  ls.rain_db = weather.rain_min_db + (weather.rain_max_db - weather.rain_min_db) * rain_u;
  ls.margin_db = params.margin_db;
  ls.total_loss_db = ls.fspl_db + ls.gas_db + ls.rain_db + ls.margin_db;
  ls.tx_gain_dbi = params.tx_gain_dbi;
  ls.rx_gain_dbi = params.rx_gain_dbi;
  return ls;
}

inline LinkState total_loss(double distance_km, double elevation_deg, const WeatherScenario& weather,
                            Rng& rng, const ChannelParams& params) {
  return link_loss(distance_km, elevation_deg, weather, rng.uniform(), params);
}

/// Rain quantile for a link at a given geometry update; keyed, not sequential,
/// so draws are independent of evaluation order.
inline double rain_quantile(std::uint64_t episode_seed, int step, int sat_id, int user_id) {
  // Counter-based: the keyed hash is the draw, no generator state per link.
  const std::uint64_t h = derive_seed(episode_seed, "rain",
                                      {static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(sat_id),
                                       static_cast<std::uint64_t>(user_id)});
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace lamdrl
