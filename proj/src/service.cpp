#include "radlabel/service.hpp"

#include <atomic>
#include <cstdio>
#include <optional>
#include <random>

#include <httplib.h>

namespace radlabel {
namespace {

using nlohmann::json;

struct FieldError {
  int status;
  std::string field;
  std::string message;
};

ServiceResponse error_response(const FieldError& e, const std::string& request_id) {
  return {e.status, {{"error", e.message}, {"field", e.field}, {"request_id", request_id}}};
}

struct RewardItem {
  std::string completion;
  LabelSet gold;
  RewardConfig config;
};

std::optional<FieldError> parse_item(const json& j, const std::string& prefix,
                                     const RewardConfig& defaults, RewardItem& out) {
  auto field = [&](const std::string& name) { return prefix + name; };
  if (!j.is_object()) return FieldError{400, prefix.empty() ? "body" : prefix, "expected an object"};

  auto completion = j.find("completion");
  if (completion == j.end() || !completion->is_string()) {
    return FieldError{400, field("completion"), "required string"};
  }
  out.completion = completion->get<std::string>();

  auto gold = j.find("gold_labels");
  if (gold == j.end() || !gold->is_array()) {
    return FieldError{400, field("gold_labels"), "required list of label names"};
  }
  out.gold = LabelSet{};
  for (std::size_t i = 0; i < gold->size(); ++i) {
    const json& label = (*gold)[i];
    const std::string where = field("gold_labels[" + std::to_string(i) + "]");
    if (!label.is_string()) return FieldError{400, where, "label must be a string"};
    auto d = canonicalize_label(label.get<std::string>());
    if (!d) {
      return FieldError{422, where, "'" + label.get<std::string>() + "' is not in the vocabulary"};
    }
    out.gold.insert(*d);
  }

  out.config = defaults;
  if (auto cfg = j.find("config"); cfg != j.end() && !cfg->is_null()) {
    if (!cfg->is_object()) return FieldError{400, field("config"), "expected an object"};
    for (const char* key : {"w_acc", "w_fmt"}) {
      if (auto it = cfg->find(key); it != cfg->end()) {
        if (!it->is_number()) return FieldError{400, field("config.") + key, "expected a number"};
        (std::string_view(key) == "w_acc" ? out.config.w_acc : out.config.w_fmt) = it->get<double>();
      }
    }
    if (auto it = cfg->find("count_unknown_in_precision"); it != cfg->end()) {
      if (!it->is_boolean()) {
        return FieldError{400, field("config.count_unknown_in_precision"), "expected a boolean"};
      }
      out.config.count_unknown_in_precision = it->get<bool>();
    }
    try {
      out.config.validate();
    } catch (const std::invalid_argument& e) {
      return FieldError{400, field("config"), e.what()};
    }
  }
  return std::nullopt;
}

std::optional<json> parse_body(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

std::string new_request_id() {
  static std::atomic<std::uint64_t> counter{0};
  static const std::uint64_t salt = std::random_device{}();
  char buf[48];
  std::snprintf(buf, sizeof buf, "req-%08llx-%06llu",
                static_cast<unsigned long long>(salt & 0xffffffffULL),
                static_cast<unsigned long long>(++counter));
  return buf;
}

}  // namespace

json reward_to_json(const RewardBreakdown& r) {
  return {{"precision", r.precision},
          {"recall", r.recall},
          {"accuracy_reward", r.accuracy_reward},
          {"formatting_reward", r.formatting_reward},
          {"total", r.total},
          {"well_formed", r.well_formed}};
}

RewardHandlers::RewardHandlers(RewardConfig defaults) : defaults_(defaults) { defaults_.validate(); }

ServiceResponse RewardHandlers::reward(const std::string& body, const std::string& request_id) const {
  auto j = parse_body(body);
  if (!j) return error_response({400, "body", "invalid JSON"}, request_id);
  RewardItem item;
  if (auto err = parse_item(*j, "", defaults_, item)) return error_response(*err, request_id);
  json out = reward_to_json(total_reward(item.completion, item.gold, item.config));
  out["request_id"] = request_id;
  return {200, out};
}

ServiceResponse RewardHandlers::batch(const std::string& body, const std::string& request_id) const {
  auto j = parse_body(body);
  if (!j) return error_response({400, "body", "invalid JSON"}, request_id);
  if (!j->is_object() || !j->contains("items") || !(*j)["items"].is_array()) {
    return error_response({400, "items", "required list of reward requests"}, request_id);
  }
  const json& items = (*j)["items"];
  std::vector<RewardItem> parsed(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (auto err = parse_item(items[i], "items[" + std::to_string(i) + "].", defaults_, parsed[i])) {
      return error_response(*err, request_id);
    }
  }
  json results = json::array();
  for (const RewardItem& item : parsed) {
    results.push_back(reward_to_json(total_reward(item.completion, item.gold, item.config)));
  }
  return {200, {{"results", results}, {"request_id", request_id}}};
}

ServiceResponse RewardHandlers::advantages(const std::string& body,
                                           const std::string& request_id) const {
  auto j = parse_body(body);
  if (!j) return error_response({400, "body", "invalid JSON"}, request_id);
  if (!j->is_object() || !j->contains("rewards") || !(*j)["rewards"].is_array()) {
    return error_response({400, "rewards", "required list of numbers"}, request_id);
  }
  std::vector<double> rewards;
  for (const json& r : (*j)["rewards"]) {
    if (!r.is_number()) return error_response({400, "rewards", "entries must be numbers"}, request_id);
    rewards.push_back(r.get<double>());
  }
  if (rewards.size() < 2) {
    return error_response({400, "rewards", "a group needs at least two rewards"}, request_id);
  }
  return {200, {{"advantages", group_advantages(rewards)}, {"request_id", request_id}}};
}

ServiceResponse RewardHandlers::health(const std::string& request_id) const {
  return {200, {{"status", "ok"}, {"request_id", request_id}}};
}

struct RewardServer::Impl {
  explicit Impl(RewardConfig defaults) : handlers(defaults) {
    auto wrap = [this](auto fn) {
      return [this, fn](const httplib::Request& req, httplib::Response& res) {
        std::string id = req.get_header_value("X-Request-Id");
        if (id.empty()) id = new_request_id();
        ServiceResponse out = fn(handlers, req.body, id);
        res.status = out.status;
        res.set_header("X-Request-Id", id);
        res.set_content(out.body.dump(), "application/json");
      };
    };
    server.Post("/v1/reward", wrap([](const RewardHandlers& h, const std::string& b,
                                      const std::string& id) { return h.reward(b, id); }));
    server.Post("/v1/reward/batch", wrap([](const RewardHandlers& h, const std::string& b,
                                            const std::string& id) { return h.batch(b, id); }));
    server.Post("/v1/advantages", wrap([](const RewardHandlers& h, const std::string& b,
                                          const std::string& id) { return h.advantages(b, id); }));
    server.Get("/healthz", wrap([](const RewardHandlers& h, const std::string&,
                                   const std::string& id) { return h.health(id); }));
  }

  RewardHandlers handlers;
  httplib::Server server;
};

RewardServer::RewardServer(RewardConfig defaults) : impl_(std::make_unique<Impl>(defaults)) {}

RewardServer::~RewardServer() { stop(); }

int RewardServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void RewardServer::serve() { impl_->server.listen_after_bind(); }

void RewardServer::start() {
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void RewardServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace radlabel
