#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include <json.hpp>

#include "radlabel/reward.hpp"

namespace radlabel {

nlohmann::json reward_to_json(const RewardBreakdown& r);

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

/// Stateless request handlers behind the reward service. Bodies and responses
/// are JSON; every response carries `request_id`.
///
///   POST /v1/reward         {completion, gold_labels[], config?} -> breakdown
///   POST /v1/reward/batch   {items: [...]}                       -> {results: [...]}
///   POST /v1/advantages     {rewards: [...]}                     -> {advantages: [...]}
///   GET  /healthz                                                -> {status: "ok"}
///
/// Malformed bodies get 400 with the offending `field`; an off-vocabulary gold
/// label gets 422.
class RewardHandlers {
 public:
  explicit RewardHandlers(RewardConfig defaults = {});

  ServiceResponse reward(const std::string& body, const std::string& request_id) const;
  ServiceResponse batch(const std::string& body, const std::string& request_id) const;
  ServiceResponse advantages(const std::string& body, const std::string& request_id) const;
  ServiceResponse health(const std::string& request_id) const;

  const RewardConfig& defaults() const { return defaults_; }

 private:
  RewardConfig defaults_;
};

/// HTTP listener for RewardHandlers.
class RewardServer {
 public:
  explicit RewardServer(RewardConfig defaults = {});
  ~RewardServer();
  RewardServer(const RewardServer&) = delete;
  RewardServer& operator=(const RewardServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);

  /// Serves until stop(); blocks the calling thread.
  void serve();

  /// Serves on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace radlabel
