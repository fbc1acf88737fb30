#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "lamdrl/agent.hpp"
#include "lamdrl/allocators.hpp"
#include "lamdrl/checkpoint.hpp"
#include "lamdrl/config.hpp"
#include "lamdrl/env.hpp"
#include "lamdrl/error.hpp"
#include "lamdrl/strategy.hpp"
#include "lamdrl/strategy_remote.hpp"

namespace lamdrl {

// ---------------------------------------------------------------------------
// CSV plumbing. Column order and float formatting are fixed so that repeated
// runs diff cleanly.

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter() = default;
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& comments,
            const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
    for (const auto& c : comments) out_ << "# " << c << "\n";
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("missing column '" + name + "'", 1);
    return static_cast<std::size_t>(it - header.begin());
  }
};

/// Comma-separated table with '#' comment lines; every row must match the header width.
inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(path.filename().string() + ": expected " + std::to_string(t.header.size()) +
                           " fields, found " + std::to_string(cells.size()),
                       no);
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(no);
  }
  if (t.header.empty()) throw ParseError(path.filename().string() + ": missing header", no);
  return t;
}

inline double parse_cell(const CsvTable& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("non-numeric value '" + s + "' in column '" + t.header[col] + "'",
                     t.line_numbers[row]);
  }
}

// ---------------------------------------------------------------------------
// Episode execution

inline std::uint64_t scenario_index(WeatherKind w) { return w == WeatherKind::Nominal ? 0 : 1; }

inline std::uint64_t eval_episode_seed(std::uint64_t campaign_seed, WeatherKind w, int episode) {
  return derive_seed(campaign_seed, "eval", {scenario_index(w), static_cast<std::uint64_t>(episode)});
}

inline std::uint64_t train_episode_seed(std::uint64_t campaign_seed, WeatherKind w, int episode) {
  return derive_seed(campaign_seed, "train", {scenario_index(w), static_cast<std::uint64_t>(episode)});
}

/// Action [alpha..., beta...] a heuristic picks for the current geometry.
inline std::vector<double> heuristic_action(AllocatorKind kind, const Environment& env) {
  const ChannelSnapshot snap = env.snapshot();
  const double budget = env.config().baseline_budget_w();
  Allocation alloc;
  switch (kind) {
    case AllocatorKind::Equal: alloc = equal_allocation(snap); break;
    case AllocatorKind::WaterFilling: alloc = water_filling(snap, budget).allocation; break;
    case AllocatorKind::MaxMin: alloc = max_min_fairness(snap, budget).allocation; break;
    case AllocatorKind::ProportionalCapacity: alloc = proportional_capacity(snap); break;
    default: throw ConfigError(std::string("allocator ") + to_string(kind) + " is not a heuristic");
  }
  std::vector<double> action(alloc.power_fraction);
  action.insert(action.end(), alloc.bandwidth_fraction.begin(), alloc.bandwidth_fraction.end());
  return action;
}

struct EpisodeSummary {
  double sum_rate = 0.0, jain = 0.0, outage = 0.0, r_eq = 0.0, r_hl = 0.0;
  double reward = 0.0;
  int steps = 0;

  void add(const StepResult& r) {
    sum_rate += r.frame.sum_rate;
    jain += r.frame.jain;
    outage += r.frame.outage;
    r_eq += r.frame.r_eq;
    r_hl += r.frame.r_hl;
    reward += r.reward.total;
    ++steps;
  }
  void finish() {
    const double n = std::max(steps, 1);
    sum_rate /= n;
    jain /= n;
    outage /= n;
    r_eq /= n;
    r_hl /= n;
    reward /= n;
  }
};

using ActionFn = std::function<std::vector<double>(const Environment&, const StateVector&)>;
using StepHook = std::function<void(const Environment&, const StateVector&, const std::vector<double>&,
                                    const StepResult&)>;

/// Runs one full episode from reset; `hook` sees (env before step, state, action, result).
inline EpisodeSummary run_episode(Environment& env, std::uint64_t episode_seed, long episode_index,
                                  const ActionFn& policy, const StepHook& hook = {}) {
  StateVector s = env.reset(episode_seed, episode_index);
  EpisodeSummary sum;
  while (!env.done()) {
    const auto action = policy(env, s);
    StateVector before = s;
    StepResult r = env.step(action);
    if (hook) hook(env, before, action, r);
    sum.add(r);
    s = r.state;
  }
  sum.finish();
  return sum;
}

/// Single-environment TD3 training on the step cadence: act with exploration
/// noise, store, update. The horizon is a time limit, so its last transition
/// still bootstraps.
struct Trainer {
  Td3Agent& agent;
  ReplayBuffer buffer;
  Rng explore;
  Rng replay;

  Trainer(Td3Agent& a, std::uint64_t seed, std::uint64_t scenario)
      : agent(a),
        buffer(static_cast<std::size_t>(a.config().buffer_capacity), a.num_users()),
        explore(derive_seed(seed, "explore", {scenario})),
        replay(derive_seed(seed, "replay", {scenario})) {}

  EpisodeSummary train_episode(Environment& env, std::uint64_t episode_seed, long episode_index) {
    const double noise = agent.config().explore_noise;
    return run_episode(
        env, episode_seed, episode_index,
        [&](const Environment& e, const StateVector& s) {
          return agent.act(s, e.strategy().label, noise, &explore);
        },
        [&](const Environment& e, const StateVector& s, const std::vector<double>& a,
            const StepResult& r) {
          buffer.push(s, a, r.reward.total, r.state, e.strategy().label, false);
          agent.train_step(buffer, replay);
        });
  }
};

// ---------------------------------------------------------------------------
// Reporting

struct MetricStats {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

inline MetricStats describe(const std::vector<double>& xs) {
  MetricStats m;
  m.n = xs.size();
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

/// Trailing moving average and standard deviation over `window` points.
inline std::vector<std::pair<double, double>> moving_average(const std::vector<double>& xs,
                                                             std::size_t window = 10) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
    std::vector<double> w(xs.begin() + static_cast<std::ptrdiff_t>(lo),
                          xs.begin() + static_cast<std::ptrdiff_t>(i + 1));
    double mean = 0.0;
    for (double x : w) mean += x;
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (double x : w) var += (x - mean) * (x - mean);
    out.emplace_back(mean, std::sqrt(var / static_cast<double>(w.size())));
  }
  return out;
}

struct CellStats {
  std::string allocator, scenario;
  MetricStats sum_rate, jain, outage;
};

struct StrategyUsage {
  std::string allocator, scenario, phase, label;
  std::size_t count = 0;
};

struct StrategyPoint {
  std::string allocator, scenario, seed, phase, episode, label;
  double sum_rate = 0.0, ma10 = 0.0, ma10_std = 0.0;
};

struct AttentionStat {
  std::string category;
  MetricStats stats;
  double ci_low = 0.0, ci_high = 0.0;
};

struct CampaignReport {
  std::vector<CellStats> cells;
  std::vector<StrategyUsage> strategy_usage;
  std::vector<StrategyPoint> strategy_points;
  std::vector<AttentionStat> attention;
  std::vector<std::string> notes;

  const CellStats* cell(const std::string& allocator, const std::string& scenario) const {
    for (const auto& c : cells)
      if (c.allocator == allocator && c.scenario == scenario) return &c;
    return nullptr;
  }
};

inline const std::vector<std::string> kEpisodeColumns = {
    "allocator", "scenario", "seed", "phase", "episode", "strategy",
    "sum_rate_bps", "jain", "outage", "r_eq_bps", "r_hl_bps", "reward"};
inline const std::vector<std::string> kStepColumns = {
    "allocator", "scenario", "seed", "episode", "step", "t", "sum_rate", "jain", "outage",
    "R_eq", "R_hl", "V_R", "reward_base", "reward_shaping", "reward_total"};
inline const std::vector<std::string> kStrategyColumns = {
    "allocator", "scenario", "seed", "phase", "episode", "intent", "prompt_hash", "label",
    "fallback", "attempts", "sum_rate_bps"};

inline std::vector<std::string> attention_columns() {
  std::vector<std::string> c{"allocator", "scenario", "seed", "episode", "step"};
  for (const char* n : kFeatureCategoryNames) c.emplace_back(n);
  return c;
}

/// Statistics derived from the raw CSVs in `dir`.
inline CampaignReport build_report(const std::filesystem::path& dir) {
  CampaignReport rep;
  const CsvTable ep = read_csv(dir / "episodes.csv");
  const auto c_alloc = ep.column("allocator"), c_scen = ep.column("scenario"),
             c_phase = ep.column("phase"), c_sr = ep.column("sum_rate_bps"),
             c_j = ep.column("jain"), c_o = ep.column("outage");
  std::map<std::pair<std::string, std::string>, std::array<std::vector<double>, 3>> cells;
  std::vector<std::pair<std::string, std::string>> order;
  for (std::size_t i = 0; i < ep.rows.size(); ++i) {
    if (ep.rows[i][c_phase] != "eval") continue;
    const double sr = parse_cell(ep, i, c_sr), j = parse_cell(ep, i, c_j), o = parse_cell(ep, i, c_o);
    const auto key = std::make_pair(ep.rows[i][c_alloc], ep.rows[i][c_scen]);
    if (!cells.count(key)) order.push_back(key);
    auto& v = cells[key];
    v[0].push_back(sr);
    v[1].push_back(j);
    v[2].push_back(o);
  }
  for (const auto& key : order) {
    const auto& v = cells[key];
    rep.cells.push_back({key.first, key.second, describe(v[0]), describe(v[1]), describe(v[2])});
  }

  if (std::filesystem::exists(dir / "strategies.csv")) {
    const CsvTable st = read_csv(dir / "strategies.csv");
    const auto a = st.column("allocator"), s = st.column("scenario"), sd = st.column("seed"),
               ph = st.column("phase"), e = st.column("episode"), l = st.column("label"),
               r = st.column("sum_rate_bps");
    std::map<std::tuple<std::string, std::string, std::string, std::string>, std::size_t> counts;
    std::vector<std::tuple<std::string, std::string, std::string, std::string>> count_order;
    std::map<std::tuple<std::string, std::string, std::string, std::string>, std::vector<std::size_t>> series;
    std::vector<std::tuple<std::string, std::string, std::string, std::string>> series_order;
    for (std::size_t i = 0; i < st.rows.size(); ++i) {
      const auto& row = st.rows[i];
      parse_cell(st, i, r);
      auto ck = std::make_tuple(row[a], row[s], row[ph], row[l]);
      if (!counts.count(ck)) count_order.push_back(ck);
      ++counts[ck];
      auto sk = std::make_tuple(row[a], row[s], row[sd], row[ph]);
      if (!series.count(sk)) series_order.push_back(sk);
      series[sk].push_back(i);
    }
    for (const auto& ck : count_order)
      rep.strategy_usage.push_back({std::get<0>(ck), std::get<1>(ck), std::get<2>(ck), std::get<3>(ck), counts[ck]});
    for (const auto& sk : series_order) {
      const auto& idx = series[sk];
      std::vector<double> xs;
      for (auto i : idx) xs.push_back(parse_cell(st, i, r));
      const auto ma = moving_average(xs, 10);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& row = st.rows[idx[k]];
        rep.strategy_points.push_back({row[a], row[s], row[sd], row[ph], row[e], row[l], xs[k],
                                       ma[k].first, ma[k].second});
      }
    }
  }
  if (rep.strategy_points.empty())
    rep.notes.push_back("strategy usage plot omitted: no strategy log (no guided allocator in campaign)");

  if (std::filesystem::exists(dir / "attention.csv")) {
    const CsvTable at = read_csv(dir / "attention.csv");
    const auto a = at.column("allocator"), s = at.column("scenario"), sd = at.column("seed"),
               e = at.column("episode");
    std::vector<std::size_t> cols;
    for (const char* n : kFeatureCategoryNames) cols.push_back(at.column(n));
    // Per-episode means, then statistics across episodes.
    std::map<std::tuple<std::string, std::string, std::string, std::string>,
             std::pair<std::vector<double>, int>>
        episodes;
    std::vector<std::tuple<std::string, std::string, std::string, std::string>> ep_order;
    for (std::size_t i = 0; i < at.rows.size(); ++i) {
      const auto& row = at.rows[i];
      auto key = std::make_tuple(row[a], row[s], row[sd], row[e]);
      auto& acc = episodes[key];
      if (acc.first.empty()) {
        acc.first.assign(cols.size(), 0.0);
        ep_order.push_back(key);
      }
      for (std::size_t k = 0; k < cols.size(); ++k) acc.first[k] += parse_cell(at, i, cols[k]);
      ++acc.second;
    }
    if (!ep_order.empty()) {
      for (std::size_t k = 0; k < cols.size(); ++k) {
        std::vector<double> xs;
        for (const auto& key : ep_order) {
          const auto& acc = episodes[key];
          xs.push_back(acc.first[k] / acc.second);
        }
        AttentionStat stat{kFeatureCategoryNames[k], describe(xs), 0.0, 0.0};
        const double half = 1.96 * stat.stats.std / std::sqrt(static_cast<double>(stat.stats.n));
        stat.ci_low = stat.stats.mean - half;
        stat.ci_high = stat.stats.mean + half;
        rep.attention.push_back(stat);
      }
    }
  }
  if (rep.attention.empty())
    rep.notes.push_back("attention plot omitted: no attention log (no learning allocator in campaign)");
  return rep;
}

/// Writes summary.csv and the per-figure plot tables.
inline void emit_report_files(const CampaignReport& rep, const std::filesystem::path& dir) {
  std::vector<std::string> notes = rep.notes;
  {
    CsvWriter w(dir / "summary.csv", notes, {"section", "allocator", "scenario", "key", "n", "mean", "std"});
    for (const auto& c : rep.cells) {
      for (const auto& [name, m] : {std::pair{"sum_rate_bps", c.sum_rate}, std::pair{"jain", c.jain},
                                    std::pair{"outage", c.outage}})
        w.row({"kpi", c.allocator, c.scenario, name, std::to_string(m.n), fmt_num(m.mean), fmt_num(m.std)});
    }
    for (const auto& u : rep.strategy_usage)
      w.row({"strategy", u.allocator, u.scenario, u.phase + ":" + u.label, std::to_string(u.count), "", ""});
    for (const auto& a : rep.attention)
      w.row({"attention", "", "", a.category, std::to_string(a.stats.n), fmt_num(a.stats.mean),
             fmt_num(a.stats.std)});
  }
  {
    CsvWriter w(dir / "plot_kpi.csv", {"grouped bars: mean and one standard deviation per allocator and scenario"},
                {"allocator", "scenario", "n", "sum_rate_mean", "sum_rate_std", "jain_mean", "jain_std",
                 "outage_mean", "outage_std"});
    for (const auto& c : rep.cells)
      w.row({c.allocator, c.scenario, std::to_string(c.sum_rate.n), fmt_num(c.sum_rate.mean),
             fmt_num(c.sum_rate.std), fmt_num(c.jain.mean), fmt_num(c.jain.std), fmt_num(c.outage.mean),
             fmt_num(c.outage.std)});
  }
  const auto strategy_path = dir / "plot_strategy.csv";
  if (!rep.strategy_points.empty()) {
    CsvWriter w(strategy_path, {"per-episode sum rate by strategy label with 10-episode moving average"},
                {"allocator", "scenario", "seed", "phase", "episode", "label", "sum_rate_bps", "ma10_bps",
                 "ma10_std_bps"});
    for (const auto& p : rep.strategy_points)
      w.row({p.allocator, p.scenario, p.seed, p.phase, p.episode, p.label, fmt_num(p.sum_rate),
             fmt_num(p.ma10), fmt_num(p.ma10_std)});
  } else {
    std::filesystem::remove(strategy_path);
  }
  const auto attention_path = dir / "plot_attention.csv";
  if (!rep.attention.empty()) {
    CsvWriter w(attention_path, {"mean attention share per feature category with 95% normal CI over episodes"},
                {"category", "n", "mean", "std", "ci_low", "ci_high"});
    for (const auto& a : rep.attention)
      w.row({a.category, std::to_string(a.stats.n), fmt_num(a.stats.mean), fmt_num(a.stats.std),
             fmt_num(a.ci_low), fmt_num(a.ci_high)});
  } else {
    std::filesystem::remove(attention_path);
  }
}

inline CampaignReport summarize(const std::filesystem::path& dir) {
  CampaignReport rep = build_report(dir);
  emit_report_files(rep, dir);
  return rep;
}

// ---------------------------------------------------------------------------
// Campaign

using ProviderFactory = std::function<std::unique_ptr<StrategyProvider>(const std::string&)>;

struct CampaignOptions {
  std::ostream* log = nullptr;
  /// Directory to write trained agents into, one file per (allocator, scenario, seed).
  std::optional<std::filesystem::path> checkpoint_dir;
  /// Directory to load trained agents from before training continues.
  std::optional<std::filesystem::path> resume_dir;
  ProviderFactory provider_factory;
};

/// Query counts per learning run, for protocol auditing.
struct RunAudit {
  std::string allocator, scenario;
  std::uint64_t seed = 0;
  long episodes = 0;
  long provider_queries = 0;
};

struct CampaignResult {
  CampaignReport report;
  std::vector<RunAudit> audits;
};

inline std::string checkpoint_name(AllocatorKind a, WeatherKind w, std::uint64_t seed) {
  return std::string(to_string(a)) + "-" + to_string(w) + "-seed" + std::to_string(seed) + ".ckpt";
}

inline CampaignResult run_campaign(const CampaignConfig& cfg, const CampaignOptions& opts = {}) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  {
    const auto probe = dir / ".write_probe";
    std::ofstream p(probe);
    if (ec || !p) throw IoError("output directory " + dir.string() + " is not writable");
    p.close();
    fs::remove(probe, ec);
  }
  if (opts.checkpoint_dir) fs::create_directories(*opts.checkpoint_dir);
  const ProviderFactory factory = opts.provider_factory ? opts.provider_factory : ProviderFactory(make_provider);
  const ScenarioConfig& sc = cfg.scenario;
  const std::uint64_t hash = config_hash(cfg);

  const std::vector<std::string> comments = {
      "config_hash=" + hex64(hash) + " profile=" + cfg.profile + " provider=" + cfg.provider,
      "baselines: equal and pc run every beam against its per-user cap; wf and mmf share a total budget of " +
          fmt_num(sc.baseline_budget_w()) + " W (" + fmt_num(sc.baseline_budget_fraction) +
          " x N_u x P_max) planned on noise-limited estimates",
      "learning agents: episodes_train=" + std::to_string(cfg.episodes_train) +
          " episodes_eval=" + std::to_string(cfg.episodes_eval) + " evaluation noise=0"};
  CsvWriter episodes(dir / "episodes.csv", comments, kEpisodeColumns);
  CsvWriter steps(dir / "steps.csv", comments, kStepColumns);
  CsvWriter strategies(dir / "strategies.csv", comments, kStrategyColumns);
  CsvWriter attention_log(dir / "attention.csv", comments, attention_columns());

  CampaignResult result;
  auto log = [&](const std::string& msg) {
    if (opts.log) *opts.log << msg << std::endl;
  };

  for (WeatherKind w : cfg.scenarios) {
    const std::uint64_t scen = scenario_index(w);
    for (std::uint64_t seed : cfg.seeds) {
      for (AllocatorKind kind : cfg.allocators) {
        const std::string alloc_name = to_string(kind), scen_name = to_string(w),
                          seed_name = std::to_string(seed);
        const bool learning = is_learning(kind);
        const bool guided = kind == AllocatorKind::LamDrl;
        std::unique_ptr<StrategyProvider> provider = guided ? factory(cfg.provider) : nullptr;
        Environment env(sc, w, provider.get(), Environment::Options{guided, cfg.intent});

        auto log_episode = [&](const char* phase, int e, const EpisodeSummary& s) {
          const auto& st = env.strategy();
          episodes.row({alloc_name, scen_name, seed_name, phase, std::to_string(e),
                        st.label ? std::string(1, to_char(*st.label)) : std::string("-"),
                        fmt_num(s.sum_rate), fmt_num(s.jain), fmt_num(s.outage), fmt_num(s.r_eq),
                        fmt_num(s.r_hl), fmt_num(s.reward)});
          if (guided)
            strategies.row({alloc_name, scen_name, seed_name, phase, std::to_string(e),
                            to_string(st.prompt.intent), hex64(st.prompt.hash()),
                            std::string(1, to_char(*st.label)), st.decision.fallback ? "1" : "0",
                            std::to_string(st.decision.attempts), fmt_num(s.sum_rate)});
        };

        std::unique_ptr<Td3Agent> agent;
        long episodes_run = 0;
        if (learning) {
          agent = std::make_unique<Td3Agent>(sc.num_users, sc.agent, guided,
                                             derive_seed(seed, "agent", {scen}), sc.reward.discount);
          const std::string ck = checkpoint_name(kind, w, seed);
          if (opts.resume_dir && fs::exists(*opts.resume_dir / ck)) {
            load_checkpoint(*agent, hash, (*opts.resume_dir / ck).string());
            log("resumed " + ck);
          }
          Trainer trainer(*agent, seed, scen);
          for (int e = 0; e < cfg.episodes_train; ++e) {
            const auto s = trainer.train_episode(env, train_episode_seed(seed, w, e), e);
            log_episode("train", e, s);
            ++episodes_run;
            if (opts.log && ((e + 1) % 50 == 0 || e + 1 == cfg.episodes_train))
              log("[" + alloc_name + " " + scen_name + " seed " + seed_name + "] train episode " +
                  std::to_string(e + 1) + "/" + std::to_string(cfg.episodes_train) +
                  " sum_rate=" + fmt_num(s.sum_rate / 1e6) + " Mbps");
          }
          if (opts.checkpoint_dir) save_checkpoint(*agent, hash, (*opts.checkpoint_dir / ck).string());
        }

        ActionFn policy = [&](const Environment& e, const StateVector& s) {
          if (agent) return agent->act(s, e.strategy().label);
          return heuristic_action(kind, e);
        };
        for (int e = 0; e < cfg.episodes_eval; ++e) {
          const auto hook = [&](const Environment& en, const StateVector& s, const std::vector<double>&,
                                const StepResult& r) {
            const int k = en.step_index() - 1;
            steps.row({alloc_name, scen_name, seed_name, std::to_string(e), std::to_string(k),
                       fmt_num(k * sc.step_s), fmt_num(r.frame.sum_rate), fmt_num(r.frame.jain),
                       fmt_num(r.frame.outage), fmt_num(r.frame.r_eq), fmt_num(r.frame.r_hl),
                       fmt_num(r.frame.rate_variance), fmt_num(r.reward.base), fmt_num(r.reward.shaping),
                       fmt_num(r.reward.total)});
            if (agent && cfg.log_attention) {
              const Vector share = agent->feature_attribution(s, en.strategy().label);
              std::array<double, kFeatureCategories> cat{};
              for (int f = 0; f < kFeatureDim; ++f) cat[static_cast<std::size_t>(feature_category(f))] += share(f);
              std::vector<std::string> row{alloc_name, scen_name, seed_name, std::to_string(e), std::to_string(k)};
              for (double v : cat) row.push_back(fmt_num(v));
              attention_log.row(row);
            }
          };
          const auto s = run_episode(env, eval_episode_seed(seed, w, e), e, policy, hook);
          log_episode("eval", e, s);
          ++episodes_run;
        }
        log("[" + alloc_name + " " + scen_name + " seed " + seed_name + "] evaluated " +
            std::to_string(cfg.episodes_eval) + " episodes");
        if (guided)
          result.audits.push_back({alloc_name, scen_name, seed, episodes_run, provider->queries()});
      }
    }
  }
  episodes.flush();
  steps.flush();
  strategies.flush();
  attention_log.flush();
  result.report = summarize(dir);
  return result;
}

}  // namespace lamdrl
