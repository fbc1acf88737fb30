#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "lamdrl/channel.hpp"
#include "lamdrl/error.hpp"
#include "lamdrl/nn.hpp"
#include "lamdrl/rng.hpp"

namespace lamdrl {

enum class StrategyLabel { A = 0, B = 1, C = 2, D = 3 };

inline constexpr int kNumStrategies = 4;

inline char to_char(StrategyLabel s) { return static_cast<char>('A' + static_cast<int>(s)); }

inline std::optional<StrategyLabel> label_from_char(char c) {
  if (c >= 'A' && c <= 'D') return static_cast<StrategyLabel>(c - 'A');
  return std::nullopt;
}

inline const char* describe(StrategyLabel s) {
  switch (s) {
    case StrategyLabel::A: return "equatorial priority";
    case StrategyLabel::B: return "fairness focused";
    case StrategyLabel::C: return "high-latitude priority";
    case StrategyLabel::D: return "opportunistic efficiency";
  }
  return "?";
}

enum class OperatorIntent { Fairness = 0, Efficiency = 1, ChallengingCoverage = 2 };

inline const char* to_string(OperatorIntent i) {
  switch (i) {
    case OperatorIntent::Fairness: return "fairness";
    case OperatorIntent::Efficiency: return "efficiency";
    case OperatorIntent::ChallengingCoverage: return "challenging_coverage";
  }
  return "?";
}

inline OperatorIntent parse_intent(const std::string& s) {
  for (auto i : {OperatorIntent::Fairness, OperatorIntent::Efficiency,
                 OperatorIntent::ChallengingCoverage})
    if (s == to_string(i)) return i;
  throw ConfigError("unknown operator intent '" + s + "'");
}

/// Round-robin intent schedule over episodes.
inline OperatorIntent intent_for_episode(long episode) {
  return static_cast<OperatorIntent>(episode % 3);
}

struct KpiSummary {
  double sum_rate_bps = 0.0;
  double jain = 0.0;
  double outage = 0.0;
};

/// Episode-level indicators the prompt is built from.
struct PromptAggregates {
  WeatherKind weather = WeatherKind::Nominal;
  std::array<int, 3> user_counts{};  // equatorial, north, south
  double pathloss_mean_db = 0.0;
  double pathloss_var_db2 = 0.0;
  std::optional<KpiSummary> last_kpis;
};

struct EpisodePrompt {
  PromptAggregates aggregates;
  OperatorIntent intent = OperatorIntent::Fairness;
  std::string rendered_text;

  int total_users() const {
    return aggregates.user_counts[0] + aggregates.user_counts[1] + aggregates.user_counts[2];
  }
  std::uint64_t hash() const { return fnv1a64(rendered_text); }
};

inline constexpr const char* kPromptTemplateVersion = "v1";
inline constexpr const char* kPromptInstruction = "Respond with exactly one letter: A, B, C, or D";

inline const char* objective_sentence(OperatorIntent i) {
  switch (i) {
    case OperatorIntent::Fairness:
      return "Objective: keep user rates as equal as possible across all latitude zones.";
    case OperatorIntent::Efficiency:
      return "Objective: maximize total downlink throughput of the constellation.";
    case OperatorIntent::ChallengingCoverage:
      return "Objective: protect service for users in challenging high-latitude coverage.";
  }
  return "";
}

namespace detail {
inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}
}  // namespace detail

inline EpisodePrompt build_prompt(const PromptAggregates& agg, OperatorIntent intent) {
  EpisodePrompt p{agg, intent, {}};
  std::string t;
  t += "LEO downlink resource allocation strategy request (template ";
  t += kPromptTemplateVersion;
  t += ")\n";
  t += "Weather scenario: ";
  t += to_string(agg.weather);
  t += "\nUsers: equatorial=" + std::to_string(agg.user_counts[0]) +
       " north_high=" + std::to_string(agg.user_counts[1]) +
       " south_high=" + std::to_string(agg.user_counts[2]) +
       " total=" + std::to_string(p.total_users()) + "\n";
  t += "Path loss: mean=" + detail::fmt("%.2f", agg.pathloss_mean_db) +
       " dB variance=" + detail::fmt("%.2f", agg.pathloss_var_db2) + " dB^2\n";
  if (agg.last_kpis) {
    t += "Last episode KPIs: sum_rate=" + detail::fmt("%.3f", agg.last_kpis->sum_rate_bps / 1e6) +
         " Mbps jain=" + detail::fmt("%.4f", agg.last_kpis->jain) +
         " outage=" + detail::fmt("%.4f", agg.last_kpis->outage) + "\n";
  } else {
    t += "Last episode KPIs: no history\n";
  }
  t += "Operator intent: ";
  t += to_string(intent);
  t += "\n";
  t += objective_sentence(intent);
  t += "\nStrategies:\n";
  t += "A: equatorial priority - favour throughput of equatorial users.\n";
  t += "B: fairness focused - reduce the spread of user rates.\n";
  t += "C: high-latitude priority - favour throughput of high-latitude users.\n";
  t += "D: opportunistic efficiency - no regional preference, maximize the base objective.\n";
  t += kPromptInstruction;
  t += "\n";
  p.rendered_text = std::move(t);
  return p;
}

/// Deterministic stand-in for the language model.
inline StrategyLabel mock_strategy(const EpisodePrompt& prompt) {
  switch (prompt.intent) {
    case OperatorIntent::Fairness: return StrategyLabel::B;
    case OperatorIntent::ChallengingCoverage: return StrategyLabel::C;
    case OperatorIntent::Efficiency:
      if (prompt.aggregates.weather == WeatherKind::Nominal) return StrategyLabel::D;
      {
        const int total = prompt.total_users();
        const bool equatorial_heavy = total > 0 && 10 * prompt.aggregates.user_counts[0] >= 6 * total;
        return equatorial_heavy ? StrategyLabel::A : StrategyLabel::C;
      }
  }
  return StrategyLabel::D;
}

/// First standalone character in {A,B,C,D}: not adjacent to another letter or digit.
inline std::optional<StrategyLabel> parse_strategy_reply(std::string_view reply) {
  auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  for (std::size_t i = 0; i < reply.size(); ++i) {
    const auto label = label_from_char(reply[i]);
    if (!label) continue;
    const bool left_ok = i == 0 || !alnum(reply[i - 1]);
    const bool right_ok = i + 1 == reply.size() || !alnum(reply[i + 1]);
    if (left_ok && right_ok) return label;
  }
  return std::nullopt;
}

struct StrategyDecision {
  StrategyLabel label = StrategyLabel::D;
  bool fallback = false;
  int attempts = 0;
  std::string raw_reply;
};

/// Text completion endpoint; nullopt signals a transport failure or timeout.
class TextClient {
 public:
  virtual ~TextClient() = default;
  virtual std::optional<std::string> complete(const std::string& prompt) = 0;
};

class StrategyProvider {
 public:
  virtual ~StrategyProvider() = default;
  virtual StrategyDecision query(const EpisodePrompt& prompt) = 0;
  virtual std::string name() const = 0;
  long queries() const { return queries_; }

 protected:
  long queries_ = 0;
};

class MockProvider final : public StrategyProvider {
 public:
  StrategyDecision query(const EpisodePrompt& prompt) override {
    ++queries_;
    return {mock_strategy(prompt), false, 1, {}};
  }
  std::string name() const override { return "mock"; }
};

/// Language-model provider: one retry on an unparseable reply or transport
/// failure, then the mock label with the fallback flag set.
class RemoteProvider final : public StrategyProvider {
 public:
  explicit RemoteProvider(std::unique_ptr<TextClient> client) : client_(std::move(client)) {}

  StrategyDecision query(const EpisodePrompt& prompt) override {
    ++queries_;
    StrategyDecision d;
    for (int attempt = 1; attempt <= 2; ++attempt) {
      d.attempts = attempt;
      auto reply = client_->complete(prompt.rendered_text);
      if (!reply) continue;
      d.raw_reply = *reply;
      if (auto label = parse_strategy_reply(*reply)) {
        d.label = *label;
        return d;
      }
    }
    d.label = mock_strategy(prompt);
    d.fallback = true;
    return d;
  }
  std::string name() const override { return "remote"; }

 private:
  std::unique_ptr<TextClient> client_;
};

/// Learnable 4 x d_str strategy embeddings; column k holds e_k.
struct StrategyEmbeddingTable {
  nn::Param table;

  StrategyEmbeddingTable() = default;
  explicit StrategyEmbeddingTable(int d_str) : table("embedding", d_str, kNumStrategies) {}

  void init(Rng& rng, double bound = 0.1) { table.init_uniform(rng, bound); }
  int dim() const { return static_cast<int>(table.value.rows()); }

  nn::Vector embed(StrategyLabel label) const { return table.value.col(static_cast<int>(label)); }
};

}  // namespace lamdrl
