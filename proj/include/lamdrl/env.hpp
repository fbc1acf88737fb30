#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lamdrl/allocators.hpp"
#include "lamdrl/channel.hpp"
#include "lamdrl/config.hpp"
#include "lamdrl/error.hpp"
#include "lamdrl/geometry.hpp"
#include "lamdrl/kpi.hpp"
#include "lamdrl/rng.hpp"
#include "lamdrl/strategy.hpp"

namespace lamdrl {

inline constexpr int kFeatureDim = 9;
inline constexpr int kGlobalDim = 3;

/// Feature columns of one user row.
enum Feature : int {
  kLatitude = 0,
  kLongitude = 1,
  kDistance = 2,
  kPathLoss = 3,
  kRegionEq = 4,
  kRegionNorth = 5,
  kRegionSouth = 6,
  kPrevRate = 7,
  kPrevSinr = 8,
};

/// Seven reporting categories (the region one-hot counts as one).
inline constexpr int kFeatureCategories = 7;
inline constexpr const char* kFeatureCategoryNames[kFeatureCategories] = {
    "latitude", "longitude", "slant_distance", "path_loss", "region", "prev_rate", "prev_sinr"};

inline int feature_category(int feature) {
  if (feature <= kPathLoss) return feature;
  if (feature <= kRegionSouth) return 4;
  return feature - 2;
}

/// Observation: one row of standardized features per user plus (sum rate,
/// Jain, outage) of the previous step.
struct StateVector {
  Eigen::MatrixXd features;  // N_u x d_f
  Eigen::Vector3d global = Eigen::Vector3d::Zero();

  int num_users() const { return static_cast<int>(features.rows()); }
  bool finite() const { return features.allFinite() && global.allFinite(); }
};

struct RewardBreakdown {
  double base = 0.0;
  double shaping = 0.0;
  double total = 0.0;
};

inline double base_reward(const KpiFrame& f, const RewardConfig& cfg, double r_ref) {
  return cfg.lambda_r * f.sum_rate / r_ref + cfg.lambda_j * f.jain - cfg.lambda_o * f.outage;
}

inline double shaping(const KpiFrame& f, StrategyLabel sigma, const RewardConfig& cfg) {
  switch (sigma) {
    case StrategyLabel::A: return cfg.eta_a * f.r_eq / (f.sum_rate + cfg.epsilon);
    case StrategyLabel::B: return -cfg.eta_b * f.rate_variance / (f.mean_rate * f.mean_rate + cfg.epsilon);
    case StrategyLabel::C: return cfg.eta_c * f.r_hl / (f.sum_rate + cfg.epsilon);
    case StrategyLabel::D: return 0.0;
  }
  return 0.0;
}

inline RewardBreakdown compose_reward(const KpiFrame& f, std::optional<StrategyLabel> sigma,
                                      const RewardConfig& cfg, double r_ref) {
  RewardBreakdown r;
  r.base = base_reward(f, cfg, r_ref);
  r.shaping = sigma ? shaping(f, *sigma, cfg) : 0.0;
  r.total = r.base + r.shaping;
  return r;
}

/// Links of every satellite to every user at geometry update `step`.
inline LinkGrid compute_links(const ScenarioConfig& cfg, const WeatherScenario& weather,
                              const std::vector<SatelliteState>& sats,
                              const std::vector<UserTerminal>& users, std::uint64_t episode_seed,
                              int step) {
  LinkGrid grid(sats.size(), users.size());
  for (std::size_t s = 0; s < sats.size(); ++s)
    for (std::size_t u = 0; u < users.size(); ++u) {
      const double d = slant_distance(sats[s], users[u]);
      const double el = elevation_deg(sats[s], users[u]);
      auto& link = grid.at(s, u);
      link = link_loss(d, el, weather, rain_quantile(episode_seed, step, sats[s].id, users[u].id),
                       cfg.channel);
      link.sat_id = sats[s].id;
      link.user_id = users[u].id;
      grid.visible[s * users.size() + u] = el >= cfg.constellation.min_elevation_deg ? 1 : 0;
    }
  return grid;
}

struct StrategyContext {
  std::optional<StrategyLabel> label;  // empty for unguided runs
  EpisodePrompt prompt;
  StrategyDecision decision;
};

struct StepResult {
  StateVector state;
  RewardBreakdown reward;
  KpiFrame frame;
  bool done = false;
};

/// One episode at a time on the 30 s geometry cadence. Actions are evaluated
/// on the geometry the agent observed; the next state is the following update.
class Environment {
 public:
  struct Options {
    /// Query the strategy provider at reset and add the shaping term.
    bool guided = true;
    std::optional<OperatorIntent> fixed_intent;
  };

  Environment(ScenarioConfig cfg, WeatherKind weather, StrategyProvider* provider, Options opts)
      : cfg_(std::move(cfg)), weather_(cfg_.weather(weather)), provider_(provider), opts_(opts) {
    cfg_.validate();
    if (opts_.guided && provider_ == nullptr)
      throw ConfigError("guided environment needs a strategy provider");
  }

  Environment(ScenarioConfig cfg, WeatherKind weather, StrategyProvider* provider)
      : Environment(std::move(cfg), weather, provider, Options{}) {}

  const StateVector& reset(std::uint64_t episode_seed, long episode_index) {
    episode_seed_ = episode_seed;
    episode_index_ = episode_index;
    step_ = 0;
    done_ = false;
    constellation_ = cfg_.constellation;
    if (cfg_.randomize_phase) {
      Rng phase(derive_seed(episode_seed, "phase"));
      constellation_.initial_phase_deg = phase.uniform(0.0, 360.0);
    }
    Rng user_rng(derive_seed(episode_seed, "users"));
    users_ = sample_users(cfg_.num_users, cfg_.zone_fractions, user_rng,
                          constellation_.earth_radius_km);
    regions_.clear();
    for (const auto& u : users_) regions_.push_back(u.region);
    prev_rate_.assign(users_.size(), 0.0);
    prev_sinr_.assign(users_.size(), 0.0);
    prev_global_.setZero();
    episode_sum_rate_ = episode_jain_ = episode_outage_ = 0.0;
    update_geometry();

    strategy_ = StrategyContext{};
    PromptAggregates agg;
    agg.weather = weather_.kind;
    agg.user_counts = zone_counts(cfg_.num_users, cfg_.zone_fractions);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t u = 0; u < users_.size(); ++u) mean += serving_link(u).total_loss_db;
    mean /= static_cast<double>(users_.size());
    for (std::size_t u = 0; u < users_.size(); ++u) {
      const double d = serving_link(u).total_loss_db - mean;
      m2 += d * d;
    }
    agg.pathloss_mean_db = mean;
    agg.pathloss_var_db2 = m2 / static_cast<double>(users_.size());
    agg.last_kpis = last_kpis_;
    const OperatorIntent intent = opts_.fixed_intent ? *opts_.fixed_intent
                                                     : intent_for_episode(episode_index);
    strategy_.prompt = build_prompt(agg, intent);
    if (opts_.guided) {
      strategy_.decision = provider_->query(strategy_.prompt);
      strategy_.label = strategy_.decision.label;
    }
    state_ = assemble_state();
    return state_;
  }

  StepResult step(std::span<const double> action) {
    if (done_) throw EpisodeStateError("step called on a finished episode; call reset first");
    if (action.size() != 2 * users_.size())
      throw DomainError("action length must be 2 * N_u");
    const Allocation alloc = Allocation::from_action(action, cfg_.p_max_dbm, cfg_.b_max_hz);
    StepResult out;
    out.frame = compute_frame(links_, serving_, alloc, regions_, cfg_.kpi);
    out.reward = compose_reward(out.frame, opts_.guided ? strategy_.label : std::nullopt,
                                cfg_.reward, cfg_.r_ref());
    prev_rate_ = out.frame.rate;
    prev_sinr_ = out.frame.sinr;
    prev_global_ = Eigen::Vector3d(out.frame.sum_rate / rate_scale(), out.frame.jain,
                                   out.frame.outage);
    episode_sum_rate_ += out.frame.sum_rate;
    episode_jain_ += out.frame.jain;
    episode_outage_ += out.frame.outage;
    ++step_;
    done_ = step_ >= cfg_.horizon;
    if (done_) {
      const double n = static_cast<double>(step_);
      last_kpis_ = KpiSummary{episode_sum_rate_ / n, episode_jain_ / n, episode_outage_ / n};
    }
    update_geometry();
    state_ = assemble_state();
    out.state = state_;
    out.done = done_;
    return out;
  }

  /// Noise-limited snapshot of the current serving links for the heuristics.
  ChannelSnapshot snapshot() const {
    return ChannelSnapshot::from_links(links_, serving_, cfg_.p_max_dbm, cfg_.b_max_hz,
                                       cfg_.kpi.noise_density_w_hz());
  }

  const ScenarioConfig& config() const { return cfg_; }
  const WeatherScenario& weather() const { return weather_; }
  const StateVector& state() const { return state_; }
  const StrategyContext& strategy() const { return strategy_; }
  const std::vector<UserTerminal>& users() const { return users_; }
  const std::vector<Region>& regions() const { return regions_; }
  const std::vector<SatelliteState>& satellites() const { return sats_; }
  const LinkGrid& links() const { return links_; }
  const std::vector<std::size_t>& serving() const { return serving_; }
  const LinkState& serving_link(std::size_t u) const { return links_.at(serving_[u], u); }
  double time_s() const { return step_ * cfg_.step_s; }
  int step_index() const { return step_; }
  bool done() const { return done_; }
  bool guided() const { return opts_.guided; }
  std::uint64_t episode_seed() const { return episode_seed_; }
  int num_users() const { return cfg_.num_users; }
  int action_dim() const { return 2 * cfg_.num_users; }

 private:
  double rate_scale() const { return cfg_.num_users * cfg_.b_max_hz * 10.0; }

  void update_geometry() {
    sats_ = propagate(constellation_, time_s());
    links_ = compute_links(cfg_, weather_, sats_, users_, episode_seed_, step_);
    serving_ = associate(sats_, users_, links_.loss_table());
  }

  StateVector assemble_state() const {
    StateVector s;
    s.features.resize(static_cast<Eigen::Index>(users_.size()), kFeatureDim);
    for (std::size_t u = 0; u < users_.size(); ++u) {
      const auto& link = serving_link(u);
      const auto row = static_cast<Eigen::Index>(u);
      s.features(row, kLatitude) = users_[u].latitude_deg / 90.0;
      s.features(row, kLongitude) = users_[u].longitude_deg / 180.0;
      s.features(row, kDistance) = link.distance_km / 3000.0;
      s.features(row, kPathLoss) = (link.total_loss_db - 180.0) / 20.0;
      s.features(row, kRegionEq) = users_[u].region == Region::Equatorial ? 1.0 : 0.0;
      s.features(row, kRegionNorth) = users_[u].region == Region::NorthHigh ? 1.0 : 0.0;
      s.features(row, kRegionSouth) = users_[u].region == Region::SouthHigh ? 1.0 : 0.0;
      s.features(row, kPrevRate) = prev_rate_[u] / (cfg_.b_max_hz * 10.0);
      s.features(row, kPrevSinr) = std::log10(1.0 + prev_sinr_[u]) / 5.0;
    }
    s.global = prev_global_;
    return s;
  }

  ScenarioConfig cfg_;
  WeatherScenario weather_;
  StrategyProvider* provider_;
  Options opts_;

  ConstellationConfig constellation_;
  std::uint64_t episode_seed_ = 0;
  long episode_index_ = 0;
  int step_ = 0;
  bool done_ = true;
  std::vector<UserTerminal> users_;
  std::vector<Region> regions_;
  std::vector<SatelliteState> sats_;
  LinkGrid links_;
  std::vector<std::size_t> serving_;
  std::vector<double> prev_rate_, prev_sinr_;
  Eigen::Vector3d prev_global_ = Eigen::Vector3d::Zero();
  double episode_sum_rate_ = 0.0, episode_jain_ = 0.0, episode_outage_ = 0.0;
  std::optional<KpiSummary> last_kpis_;
  StrategyContext strategy_;
  StateVector state_;
};

}  // namespace lamdrl
