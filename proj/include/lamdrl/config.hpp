#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lamdrl/allocators.hpp"
#include "lamdrl/channel.hpp"
#include "lamdrl/error.hpp"
#include "lamdrl/geometry.hpp"
#include "lamdrl/kpi.hpp"
#include "lamdrl/rng.hpp"
#include "lamdrl/strategy.hpp"

namespace lamdrl {

struct RewardConfig {
  double lambda_r = 1.0;
  double lambda_j = 0.5;
  double lambda_o = 1.0;
  double r_ref_bps = 0.0;  // <= 0 selects the N_u-scaled default
  double eta_a = 0.2;
  double eta_b = 0.2;
  double eta_c = 0.2;
  double epsilon = 1e-6;
  double discount = 0.99;

  void validate() const {
    for (double w : {lambda_r, lambda_j, lambda_o, eta_a, eta_b, eta_c})
      if (!(w >= 0.0)) throw ConfigError("reward weights must be non-negative");
    if (!(epsilon > 0.0)) throw ConfigError("reward epsilon must be positive");
    if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("discount must lie in (0, 1)");
  }
};

struct AgentConfig {
  int d_str = 16;
  int d_h = 32;
  int hidden = 128;
  int batch_size = 256;
  int buffer_capacity = 100000;
  double lr_critic = 1e-3;
  double lr_actor = 1e-4;
  double tau = 0.005;
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  int policy_delay = 2;
  double explore_noise = 0.1;

  void validate() const {
    if (d_str < 1 || d_h < 1 || hidden < 1) throw ConfigError("network widths must be >= 1");
    if (batch_size < 1 || buffer_capacity < batch_size)
      throw ConfigError("buffer capacity must be >= batch size >= 1");
    if (!(lr_critic > 0.0) || !(lr_actor > 0.0)) throw ConfigError("learning rates must be positive");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
    if (policy_delay < 1) throw ConfigError("policy delay must be >= 1");
    if (policy_noise < 0.0 || noise_clip < 0.0 || explore_noise < 0.0)
      throw ConfigError("noise parameters must be non-negative");
  }
};

/// Every physical, constellation, reward and training constant.
struct ScenarioConfig {
  ConstellationConfig constellation{};
  /// Draw a fresh common orbital phase per episode from the episode seed.
  bool randomize_phase = true;
  int num_users = 50;
  std::array<double, 3> zone_fractions{0.70, 0.15, 0.15};
  ChannelParams channel{};
  WeatherScenario nominal = WeatherScenario::nominal();
  WeatherScenario extreme = WeatherScenario::extreme();
  KpiParams kpi{};
  double p_max_dbm = 40.0;
  double b_max_hz = 20e6;
  RewardConfig reward{};
  int horizon = 20;
  double step_s = 30.0;
  /// Total power budget of WF/MMF as a fraction of N_u * P_max.
  double baseline_budget_fraction = 0.5;
  AgentConfig agent{};

  const WeatherScenario& weather(WeatherKind k) const {
    return k == WeatherKind::Nominal ? nominal : extreme;
  }

  double r_ref() const {
    if (reward.r_ref_bps > 0.0) return reward.r_ref_bps;
    return num_users * b_max_hz * std::log2(1.0 + kpi.sinr_threshold()) * 0.5;
  }

  double baseline_budget_w() const {
    return baseline_budget_fraction * num_users * dbm_to_watts(p_max_dbm);
  }

  void validate() const {
    constellation.validate();
    if (num_users < 1) throw ConfigError("num_users must be >= 1");
    zone_counts(num_users, zone_fractions);
    channel.validate();
    nominal.validate();
    extreme.validate();
    if (nominal.kind != WeatherKind::Nominal || extreme.kind != WeatherKind::Extreme)
      throw ConfigError("weather scenario kinds are fixed");
    kpi.validate();
    if (!(b_max_hz > 0.0)) throw ConfigError("bandwidth cap must be positive");
    reward.validate();
    if (horizon < 1) throw ConfigError("episode horizon must be >= 1");
    if (!(step_s > 0.0)) throw ConfigError("geometry step must be positive");
    if (!(baseline_budget_fraction > 0.0)) throw ConfigError("baseline budget must be positive");
    agent.validate();
  }
};

/// Small constellation for minutes-scale runs.
inline ScenarioConfig desk_profile() {
  ScenarioConfig c;
  c.constellation.num_satellites = 4;
  c.num_users = 10;
  return c;
}

inline ScenarioConfig paper_profile() { return ScenarioConfig{}; }

struct CampaignConfig {
  ScenarioConfig scenario = desk_profile();
  std::string profile = "desk";
  std::vector<AllocatorKind> allocators{AllocatorKind::Equal, AllocatorKind::WaterFilling,
                                        AllocatorKind::MaxMin, AllocatorKind::ProportionalCapacity,
                                        AllocatorKind::Drl, AllocatorKind::LamDrl};
  std::vector<WeatherKind> scenarios{WeatherKind::Nominal, WeatherKind::Extreme};
  int episodes_train = 300;
  int episodes_eval = 100;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";
  std::string provider = "mock";
  /// Empty means round-robin over intents.
  std::optional<OperatorIntent> intent;
  /// Per-step attention logging during evaluation.
  bool log_attention = true;

  void validate() const {
    scenario.validate();
    if (allocators.empty()) throw ConfigError("at least one allocator is required");
    if (scenarios.empty()) throw ConfigError("at least one weather scenario is required");
    if (episodes_eval < 1) throw ConfigError("episodes_eval must be >= 1");
    if (episodes_train < 1) throw ConfigError("episodes_train must be >= 1");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (provider != "mock" && provider != "remote")
      throw ConfigError("provider must be mock or remote");
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double to_double(const std::string& s) {
  std::size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

inline long long to_int(const std::string& s) {
  std::size_t pos = 0;
  long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

inline bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("expected true|false");
}

struct Key {
  std::string name;
  std::function<std::string(const CampaignConfig&)> get;
  std::function<void(CampaignConfig&, const std::string&)> set;
  bool campaign = false;  // excluded from the checkpoint config hash
};

template <class Getter>
Key real_key(std::string name, Getter field) {
  return {std::move(name), [field](const CampaignConfig& c) {
            CampaignConfig copy = c;
            return num(field(copy));
          },
          [field](CampaignConfig& c, const std::string& v) { field(c) = to_double(v); }};
}

template <class Getter>
Key int_key(std::string name, Getter field) {
  return {std::move(name),
          [field](const CampaignConfig& c) {
            CampaignConfig copy = c;
            return std::to_string(field(copy));
          },
          [field](CampaignConfig& c, const std::string& v) {
            field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(to_int(v));
          }};
}

inline std::vector<Key> registry() {
  std::vector<Key> k;
  auto S = [](CampaignConfig& c) -> ScenarioConfig& { return c.scenario; };
  k.push_back(int_key("constellation.num_satellites", [S](CampaignConfig& c) -> int& { return S(c).constellation.num_satellites; }));
  k.push_back(real_key("constellation.altitude_km", [S](CampaignConfig& c) -> double& { return S(c).constellation.altitude_km; }));
  k.push_back(real_key("constellation.inclination_deg", [S](CampaignConfig& c) -> double& { return S(c).constellation.inclination_deg; }));
  k.push_back(real_key("constellation.earth_radius_km", [S](CampaignConfig& c) -> double& { return S(c).constellation.earth_radius_km; }));
  k.push_back(real_key("constellation.mu_km3_s2", [S](CampaignConfig& c) -> double& { return S(c).constellation.mu_km3_s2; }));
  k.push_back(real_key("constellation.initial_phase_deg", [S](CampaignConfig& c) -> double& { return S(c).constellation.initial_phase_deg; }));
  k.push_back({"constellation.phase_offsets_deg",
               [](const CampaignConfig& c) {
                 std::string s;
                 for (double v : c.scenario.constellation.phase_offsets_deg) s += (s.empty() ? "" : ",") + num(v);
                 return s;
               },
               [](CampaignConfig& c, const std::string& v) {
                 c.scenario.constellation.phase_offsets_deg.clear();
                 for (auto& item : split_list(v)) c.scenario.constellation.phase_offsets_deg.push_back(to_double(item));
               }});
  k.push_back({"constellation.randomize_phase",
               [](const CampaignConfig& c) { return std::string(c.scenario.randomize_phase ? "true" : "false"); },
               [](CampaignConfig& c, const std::string& v) { c.scenario.randomize_phase = to_bool(v); }});
  k.push_back(real_key("constellation.min_elevation_deg", [S](CampaignConfig& c) -> double& { return S(c).constellation.min_elevation_deg; }));
  k.push_back(int_key("users.num_users", [S](CampaignConfig& c) -> int& { return S(c).num_users; }));
  k.push_back({"users.zone_fractions",
               [](const CampaignConfig& c) {
                 const auto& f = c.scenario.zone_fractions;
                 return num(f[0]) + "," + num(f[1]) + "," + num(f[2]);
               },
               [](CampaignConfig& c, const std::string& v) {
                 auto items = split_list(v);
                 if (items.size() != 3) throw std::invalid_argument("expected three fractions");
                 for (int i = 0; i < 3; ++i) c.scenario.zone_fractions[static_cast<std::size_t>(i)] = to_double(items[static_cast<std::size_t>(i)]);
               }});
  k.push_back(real_key("channel.frequency_ghz", [S](CampaignConfig& c) -> double& { return S(c).channel.frequency_ghz; }));
  k.push_back(real_key("channel.margin_db", [S](CampaignConfig& c) -> double& { return S(c).channel.margin_db; }));
  k.push_back(real_key("channel.tx_gain_dbi", [S](CampaignConfig& c) -> double& { return S(c).channel.tx_gain_dbi; }));
  k.push_back(real_key("channel.rx_gain_dbi", [S](CampaignConfig& c) -> double& { return S(c).channel.rx_gain_dbi; }));
  k.push_back(real_key("weather.nominal.rain_min_db", [S](CampaignConfig& c) -> double& { return S(c).nominal.rain_min_db; }));
  k.push_back(real_key("weather.nominal.rain_max_db", [S](CampaignConfig& c) -> double& { return S(c).nominal.rain_max_db; }));
  k.push_back(real_key("weather.nominal.gas_zenith_db", [S](CampaignConfig& c) -> double& { return S(c).nominal.gas_zenith_db; }));
  k.push_back(real_key("weather.extreme.rain_min_db", [S](CampaignConfig& c) -> double& { return S(c).extreme.rain_min_db; }));
  k.push_back(real_key("weather.extreme.rain_max_db", [S](CampaignConfig& c) -> double& { return S(c).extreme.rain_max_db; }));
  k.push_back(real_key("weather.extreme.gas_zenith_db", [S](CampaignConfig& c) -> double& { return S(c).extreme.gas_zenith_db; }));
  k.push_back(real_key("link.p_max_dbm", [S](CampaignConfig& c) -> double& { return S(c).p_max_dbm; }));
  k.push_back(real_key("link.b_max_hz", [S](CampaignConfig& c) -> double& { return S(c).b_max_hz; }));
  k.push_back(real_key("link.noise_density_dbm_hz", [S](CampaignConfig& c) -> double& { return S(c).kpi.noise_density_dbm_hz; }));
  k.push_back(real_key("link.sinr_threshold_db", [S](CampaignConfig& c) -> double& { return S(c).kpi.sinr_threshold_db; }));
  k.push_back(real_key("link.kappa", [S](CampaignConfig& c) -> double& { return S(c).kpi.kappa; }));
  k.push_back(real_key("reward.lambda_r", [S](CampaignConfig& c) -> double& { return S(c).reward.lambda_r; }));
  k.push_back(real_key("reward.lambda_j", [S](CampaignConfig& c) -> double& { return S(c).reward.lambda_j; }));
  k.push_back(real_key("reward.lambda_o", [S](CampaignConfig& c) -> double& { return S(c).reward.lambda_o; }));
  k.push_back(real_key("reward.r_ref_bps", [S](CampaignConfig& c) -> double& { return S(c).reward.r_ref_bps; }));
  k.push_back(real_key("reward.eta_a", [S](CampaignConfig& c) -> double& { return S(c).reward.eta_a; }));
  k.push_back(real_key("reward.eta_b", [S](CampaignConfig& c) -> double& { return S(c).reward.eta_b; }));
  k.push_back(real_key("reward.eta_c", [S](CampaignConfig& c) -> double& { return S(c).reward.eta_c; }));
  k.push_back(real_key("reward.epsilon", [S](CampaignConfig& c) -> double& { return S(c).reward.epsilon; }));
  k.push_back(real_key("reward.discount", [S](CampaignConfig& c) -> double& { return S(c).reward.discount; }));
  k.push_back(int_key("episode.horizon", [S](CampaignConfig& c) -> int& { return S(c).horizon; }));
  k.push_back(real_key("episode.step_s", [S](CampaignConfig& c) -> double& { return S(c).step_s; }));
  k.push_back(real_key("baseline.budget_fraction", [S](CampaignConfig& c) -> double& { return S(c).baseline_budget_fraction; }));
  k.push_back(int_key("agent.d_str", [S](CampaignConfig& c) -> int& { return S(c).agent.d_str; }));
  k.push_back(int_key("agent.d_h", [S](CampaignConfig& c) -> int& { return S(c).agent.d_h; }));
  k.push_back(int_key("agent.hidden", [S](CampaignConfig& c) -> int& { return S(c).agent.hidden; }));
  k.push_back(int_key("agent.batch_size", [S](CampaignConfig& c) -> int& { return S(c).agent.batch_size; }));
  k.push_back(int_key("agent.buffer_capacity", [S](CampaignConfig& c) -> int& { return S(c).agent.buffer_capacity; }));
  k.push_back(real_key("agent.lr_critic", [S](CampaignConfig& c) -> double& { return S(c).agent.lr_critic; }));
  k.push_back(real_key("agent.lr_actor", [S](CampaignConfig& c) -> double& { return S(c).agent.lr_actor; }));
  k.push_back(real_key("agent.tau", [S](CampaignConfig& c) -> double& { return S(c).agent.tau; }));
  k.push_back(real_key("agent.policy_noise", [S](CampaignConfig& c) -> double& { return S(c).agent.policy_noise; }));
  k.push_back(real_key("agent.noise_clip", [S](CampaignConfig& c) -> double& { return S(c).agent.noise_clip; }));
  k.push_back(int_key("agent.policy_delay", [S](CampaignConfig& c) -> int& { return S(c).agent.policy_delay; }));
  k.push_back(real_key("agent.explore_noise", [S](CampaignConfig& c) -> double& { return S(c).agent.explore_noise; }));

  auto campaign = [&k](Key key) {
    key.campaign = true;
    k.push_back(std::move(key));
  };
  campaign({"campaign.allocators",
            [](const CampaignConfig& c) {
              std::string s;
              for (auto a : c.allocators) s += (s.empty() ? "" : ",") + std::string(to_string(a));
              return s;
            },
            [](CampaignConfig& c, const std::string& v) {
              c.allocators.clear();
              for (auto& item : split_list(v)) c.allocators.push_back(parse_allocator(item));
            }});
  campaign({"campaign.scenarios",
            [](const CampaignConfig& c) {
              std::string s;
              for (auto w : c.scenarios) s += (s.empty() ? "" : ",") + std::string(to_string(w));
              return s;
            },
            [](CampaignConfig& c, const std::string& v) {
              c.scenarios.clear();
              for (auto& item : split_list(v)) c.scenarios.push_back(parse_weather(item));
            }});
  campaign({"campaign.episodes_train", [](const CampaignConfig& c) { return std::to_string(c.episodes_train); },
            [](CampaignConfig& c, const std::string& v) { c.episodes_train = static_cast<int>(to_int(v)); }});
  campaign({"campaign.episodes_eval", [](const CampaignConfig& c) { return std::to_string(c.episodes_eval); },
            [](CampaignConfig& c, const std::string& v) { c.episodes_eval = static_cast<int>(to_int(v)); }});
  campaign({"campaign.seeds",
            [](const CampaignConfig& c) {
              std::string s;
              for (auto v : c.seeds) s += (s.empty() ? "" : ",") + std::to_string(v);
              return s;
            },
            [](CampaignConfig& c, const std::string& v) {
              c.seeds.clear();
              for (auto& item : split_list(v)) c.seeds.push_back(static_cast<std::uint64_t>(to_int(item)));
            }});
  campaign({"campaign.output_dir", [](const CampaignConfig& c) { return c.output_dir; },
            [](CampaignConfig& c, const std::string& v) { c.output_dir = v; }});
  campaign({"campaign.provider", [](const CampaignConfig& c) { return c.provider; },
            [](CampaignConfig& c, const std::string& v) { c.provider = v; }});
  campaign({"campaign.intent",
            [](const CampaignConfig& c) { return c.intent ? std::string(to_string(*c.intent)) : std::string("round_robin"); },
            [](CampaignConfig& c, const std::string& v) {
              if (v == "round_robin") c.intent.reset();
              else c.intent = parse_intent(v);
            }});
  campaign({"campaign.log_attention",
            [](const CampaignConfig& c) { return std::string(c.log_attention ? "true" : "false"); },
            [](CampaignConfig& c, const std::string& v) { c.log_attention = to_bool(v); }});
  return k;
}

}  // namespace config_detail

inline CampaignConfig campaign_for_profile(const std::string& profile) {
  CampaignConfig c;
  c.profile = profile;
  if (profile == "desk") c.scenario = desk_profile();
  else if (profile == "paper") c.scenario = paper_profile();
  else throw ConfigError("unknown profile '" + profile + "' (expected desk|paper)");
  return c;
}

/// Parses `key = value` lines ('#' starts a comment). An optional
/// `profile = desk|paper` line selects the base before other keys apply.
inline CampaignConfig parse_config(std::istream& in) {
  using namespace config_detail;
  std::vector<std::pair<std::size_t, std::pair<std::string, std::string>>> entries;
  std::string line;
  std::size_t line_no = 0;
  std::string profile = "desk";
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (key == "profile") {
      profile = value;
      continue;
    }
    entries.push_back({line_no, {key, value}});
  }
  CampaignConfig cfg = campaign_for_profile(profile);
  const auto keys = registry();
  for (const auto& [no, kv] : entries) {
    auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == kv.first; });
    if (it == keys.end()) throw ParseError("unknown key '" + kv.first + "'", no);
    try {
      it->set(cfg, kv.second);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), no);
    } catch (const std::exception&) {
      throw ParseError("invalid value '" + kv.second + "' for " + kv.first, no);
    }
  }
  cfg.validate();
  return cfg;
}

inline CampaignConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  return parse_config(in);
}

/// Full key-value dump that parse_config reads back to the same record.
inline std::string render_config(const CampaignConfig& cfg, bool include_campaign = true) {
  std::string out = "profile = " + cfg.profile + "\n";
  for (const auto& k : config_detail::registry()) {
    if (k.campaign && !include_campaign) continue;
    out += k.name + " = " + k.get(cfg) + "\n";
  }
  return out;
}

/// Hash of the physical and agent settings (campaign bookkeeping excluded).
inline std::uint64_t config_hash(const CampaignConfig& cfg) {
  return fnv1a64(render_config(cfg, false));
}

}  // namespace lamdrl
