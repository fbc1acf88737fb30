#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "lamdrl/agent.hpp"
#include "lamdrl/error.hpp"

namespace lamdrl {

inline constexpr int kCheckpointVersion = 1;

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Text (JSON) dump of every online and target parameter.
inline void save_checkpoint(Td3Agent& agent, std::uint64_t cfg_hash, const std::string& path) {
  nlohmann::json j;
  j["format"] = "lamdrl-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config_hash"] = hex64(cfg_hash);
  j["num_users"] = agent.num_users();
  j["guided"] = agent.guided();
  auto dump = [](const nn::ParamRefs& ps) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto* p : ps) {
      nlohmann::json e;
      e["name"] = p->name;
      e["rows"] = p->value.rows();
      e["cols"] = p->value.cols();
      e["data"] = std::vector<double>(p->value.data(), p->value.data() + p->value.size());
      arr.push_back(std::move(e));
    }
    return arr;
  };
  j["online"] = dump(agent.online_params());
  j["target"] = dump(agent.target_params());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << j.dump() << "\n";
  if (!out) throw IoError("failed writing checkpoint " + path);
}

inline void load_checkpoint(Td3Agent& agent, std::uint64_t cfg_hash, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "lamdrl-checkpoint" || j.value("version", 0) != kCheckpointVersion)
    throw ConfigError("unsupported checkpoint format in " + path);
  if (j.value("config_hash", "") != hex64(cfg_hash))
    throw ConfigError("checkpoint " + path + " was written for a different configuration");
  if (j.value("num_users", -1) != agent.num_users() || j.value("guided", !agent.guided()) != agent.guided())
    throw ConfigError("checkpoint " + path + " does not match the agent variant");
  auto restore = [&](const nn::ParamRefs& ps, const nlohmann::json& arr) {
    if (!arr.is_array() || arr.size() != ps.size())
      throw ConfigError("checkpoint parameter count mismatch in " + path);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto& e = arr[i];
      auto* p = ps[i];
      if (e.at("name") != p->name || e.at("rows") != p->value.rows() || e.at("cols") != p->value.cols())
        throw ConfigError("checkpoint tensor '" + p->name + "' has the wrong shape");
      const auto data = e.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != p->value.size())
        throw ConfigError("checkpoint tensor '" + p->name + "' is truncated");
      std::copy(data.begin(), data.end(), p->value.data());
    }
  };
  restore(agent.online_params(), j.at("online"));
  restore(agent.target_params(), j.at("target"));
}

}  // namespace lamdrl
