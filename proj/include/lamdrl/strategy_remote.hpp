#pragma once

#include <cstdlib>
#include <memory>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "lamdrl/error.hpp"
#include "lamdrl/strategy.hpp"

namespace lamdrl {

struct RemoteEndpoint {
  std::string url;  // e.g. http://127.0.0.1:8080/v1/strategy
  std::string model;
  double timeout_s = 10.0;

  /// Reads LAM_ENDPOINT, LAM_MODEL and LAM_TIMEOUT_S.
  static RemoteEndpoint from_env() {
    RemoteEndpoint e;
    if (const char* v = std::getenv("LAM_ENDPOINT")) e.url = v;
    if (const char* v = std::getenv("LAM_MODEL")) e.model = v;
    if (const char* v = std::getenv("LAM_TIMEOUT_S")) {
      try {
        e.timeout_s = std::stod(v);
      } catch (const std::exception&) {
        throw ConfigError(std::string("LAM_TIMEOUT_S is not a number: ") + v);
      }
    }
    if (e.url.empty()) throw ConfigError("remote provider requires LAM_ENDPOINT");
    if (!(e.timeout_s > 0.0)) throw ConfigError("LAM_TIMEOUT_S must be positive");
    return e;
  }
};

/// POSTs {"model", "prompt"} as JSON and returns the response body verbatim.
class HttpTextClient final : public TextClient {
 public:
  explicit HttpTextClient(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    const auto scheme = endpoint_.url.find("://");
    const auto path_start =
        endpoint_.url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
      base_ = endpoint_.url;
      path_ = "/";
    } else {
      base_ = endpoint_.url.substr(0, path_start);
      path_ = endpoint_.url.substr(path_start);
    }
  }

  std::optional<std::string> complete(const std::string& prompt) override {
    httplib::Client cli(base_);
    const auto secs = static_cast<time_t>(endpoint_.timeout_s);
    const auto usecs = static_cast<time_t>((endpoint_.timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    nlohmann::json body = {{"model", endpoint_.model}, {"prompt", prompt}};
    auto res = cli.Post(path_, body.dump(), "application/json");
    if (!res || res->status < 200 || res->status >= 300) return std::nullopt;
    return res->body;
  }

 private:
  RemoteEndpoint endpoint_;
  std::string base_;
  std::string path_;
};

inline std::unique_ptr<StrategyProvider> make_provider(const std::string& kind) {
  if (kind == "mock") return std::make_unique<MockProvider>();
  if (kind == "remote")
    return std::make_unique<RemoteProvider>(std::make_unique<HttpTextClient>(RemoteEndpoint::from_env()));
  throw ConfigError("unknown provider '" + kind + "' (expected mock|remote)");
}

}  // namespace lamdrl
