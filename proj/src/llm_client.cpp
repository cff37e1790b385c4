#include "radlabel/llm_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <httplib.h>

#include "radlabel/errors.hpp"
#include "radlabel/json_schema.hpp"

namespace radlabel {
namespace {

using nlohmann::json;

constexpr std::string_view kChatPath = "/chat/completions";

struct LimiterGuard {
  explicit LimiterGuard(InFlightLimiter& l) : limiter(l) { limiter.acquire(); }
  ~LimiterGuard() { limiter.release(); }
  LimiterGuard(const LimiterGuard&) = delete;
  LimiterGuard& operator=(const LimiterGuard&) = delete;
  InFlightLimiter& limiter;
};

std::string format_instruction(const json& response_format) {
  json schema = response_format;
  if (response_format.contains("json_schema") && response_format["json_schema"].contains("schema")) {
    schema = response_format["json_schema"]["schema"];
  }
  return "Respond with only a JSON value (no prose, no code fences) that conforms to this "
         "JSON Schema:\n" +
         schema.dump(2);
}

const json& schema_of(const json& response_format) {
  if (response_format.contains("json_schema") && response_format["json_schema"].contains("schema")) {
    return response_format["json_schema"]["schema"];
  }
  return response_format;
}

// Returns the parsed value or the reason it is unacceptable.
std::pair<std::optional<json>, std::string> check_reply(const std::string& raw, const json& schema) {
  json value = json::parse(extract_json_payload(raw), nullptr, false);
  if (value.is_discarded()) return {std::nullopt, "reply is not valid JSON"};
  if (auto err = validate_json_schema(value, schema)) return {std::nullopt, *err};
  return {std::move(value), ""};
}

}  // namespace

void GenerationParams::validate() const {
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p must be in (0, 1]");
  if (max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
}

json GenerationParams::to_json() const {
  json j = {{"temperature", temperature}, {"top_p", top_p}, {"max_tokens", max_tokens},
            {"model", model_name}};
  if (seed) j["seed"] = *seed;
  return j;
}

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry) const {
  if (retry < 1) return std::chrono::milliseconds{0};
  const int shift = std::min(retry - 1, 30);
  const long long raw = backoff_base.count() * (1LL << shift);
  return std::chrono::milliseconds{std::min<long long>(raw, backoff_cap.count())};
}

bool is_retryable_status(int status) {
  return status == 408 || status == 409 || status == 425 || status == 429 ||
         (status >= 500 && status <= 599);
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return available_ > 0; });
  --available_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    ++available_;
  }
  cv_.notify_one();
}

std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (std::size_t pos = text.find(secret); pos != std::string::npos;
       pos = text.find(secret, pos + 3)) {
    text.replace(pos, secret.size(), "***");
  }
  return text;
}

json ChatClient::chat_structured(const GenerationParams& params,
                                 std::span<const ChatMessage> messages,
                                 const json& response_format) {
  const json& schema = schema_of(response_format);
  std::vector<ChatMessage> convo(messages.begin(), messages.end());
  const bool native = supports_schema_mode();
  if (!native) convo.push_back({"system", format_instruction(response_format)});

  auto ask = [&] {
    return native ? chat_with_format(params, convo, response_format) : chat(params, convo);
  };

  std::string raw = ask();
  auto [value, problem] = check_reply(raw, schema);
  if (value) return *value;

  convo.push_back({"assistant", raw});
  convo.push_back({"user", "The previous reply was rejected (" + problem +
                               "). Reply again with only the JSON value required by the schema."});
  raw = ask();
  auto [repaired, problem2] = check_reply(raw, schema);
  if (repaired) return *repaired;
  throw StructuredOutputError("structured output rejected after repair: " + problem2, raw);
}

std::string ChatClient::chat_with_format(const GenerationParams& params,
                                         std::span<const ChatMessage> messages, const json&) {
  return chat(params, messages);
}

HttpChatClient::HttpChatClient(ClientConfig cfg, Sleeper sleeper)
    : cfg_(std::move(cfg)), sleeper_(std::move(sleeper)), limiter_(cfg_.max_in_flight) {
  if (cfg_.retry.max_attempts < 1) throw std::invalid_argument("retry.max_attempts must be >= 1");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (!cfg_.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
  }

  std::string url = cfg_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  std::size_t scheme_end = url.find("://");
  std::size_t path_start =
      url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : url.substr(path_start);
  if (!path_.ends_with(kChatPath)) path_ += kChatPath;

  if (cfg_.transcript_path) {
    transcript_.open(*cfg_.transcript_path, std::ios::app);
    if (!transcript_) throw std::runtime_error("cannot open transcript file");
  }
}

json HttpChatClient::build_request(const GenerationParams& params,
                                   std::span<const ChatMessage> messages,
                                   const json* response_format) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  json body = {{"model", params.model_name},     {"messages", msgs},
               {"temperature", params.temperature}, {"top_p", params.top_p},
               {"max_tokens", params.max_tokens}};
  if (params.seed) body["seed"] = *params.seed;
  if (response_format) body["response_format"] = *response_format;
  return body;
}

std::string HttpChatClient::chat(const GenerationParams& params,
                                 std::span<const ChatMessage> messages) {
  if (messages.empty()) throw std::invalid_argument("chat needs at least one message");
  params.validate();
  return post(build_request(params, messages, nullptr));
}

std::string HttpChatClient::chat_with_format(const GenerationParams& params,
                                             std::span<const ChatMessage> messages,
                                             const json& response_format) {
  if (messages.empty()) throw std::invalid_argument("chat needs at least one message");
  params.validate();
  return post(build_request(params, messages, &response_format));
}

void HttpChatClient::log(const std::string& line) const {
  if (cfg_.log) cfg_.log(redact(line, api_key_));
}

void HttpChatClient::record_transcript(const json& request, int status,
                                       const std::string& response) {
  if (!transcript_.is_open()) return;
  json rec = {{"endpoint", scheme_host_port_ + path_},
              {"request", request},
              {"status", status},
              {"response", redact(response, api_key_)}};
  std::lock_guard lock(transcript_mu_);
  transcript_ << redact(rec.dump(), api_key_) << '\n';
  transcript_.flush();
}

std::string HttpChatClient::post(const json& body) {
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  int last_status = 0;
  bool last_timed_out = false;
  std::string last_error;
  for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      auto delay = cfg_.retry.delay_before_retry(attempt - 1);
      log("retry " + std::to_string(attempt) + "/" + std::to_string(cfg_.retry.max_attempts) +
          " after " + std::to_string(delay.count()) + " ms: " + last_error);
      sleeper_(delay);
    }

    httplib::Result res{nullptr, httplib::Error::Unknown};
    const auto started = std::chrono::steady_clock::now();
    {
      LimiterGuard guard(limiter_);
      httplib::Client cli(scheme_host_port_);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
      cli.set_connection_timeout(secs.count(), usecs.count());
      cli.set_read_timeout(secs.count(), usecs.count());
      cli.set_write_timeout(secs.count(), usecs.count());
      res = cli.Post(path_, headers, payload, "application/json");
    }
    const auto elapsed = std::chrono::steady_clock::now() - started;

    if (!res) {
      const auto err = res.error();
      last_status = 0;
      last_timed_out = err == httplib::Error::ConnectionTimeout ||
                       (err == httplib::Error::Read && elapsed >= cfg_.timeout);
      last_error = "transport failure: " + httplib::to_string(err);
      record_transcript(body, 0, last_error);
      continue;
    }

    last_status = res->status;
    last_timed_out = false;
    record_transcript(body, res->status, res->body);
    if (res->status >= 200 && res->status < 300) {
      json reply = json::parse(res->body, nullptr, false);
      if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
          reply["choices"].empty()) {
        throw TransportError("malformed chat-completions response", res->status);
      }
      const json& msg = reply["choices"][0]["message"];
      if (!msg.is_object() || !msg.contains("content")) {
        throw TransportError("chat-completions response without message content", res->status);
      }
      return msg["content"].is_string() ? msg["content"].get<std::string>() : std::string{};
    }

    last_error = "HTTP " + std::to_string(res->status);
    if (!is_retryable_status(res->status)) {
      log("permanent failure: " + last_error);
      throw TransportError(redact("chat endpoint returned " + last_error, api_key_), res->status);
    }
  }

  log("giving up after " + std::to_string(cfg_.retry.max_attempts) + " attempts: " + last_error);
  const std::string what = redact("chat endpoint failed after " +
                                      std::to_string(cfg_.retry.max_attempts) +
                                      " attempts: " + last_error,
                                  api_key_);
  if (last_timed_out) throw TimeoutError(what);
  throw TransportError(what, last_status);
}

}  // namespace radlabel
