#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace radlabel {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct GenerationParams {
  double temperature = 0.1;
  double top_p = 1.0;
  int max_tokens = 1024;
  std::string model_name;
  std::optional<std::uint64_t> seed;

  void validate() const;
  nlohmann::json to_json() const;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_cap{30'000};

  /// Delay before retry number `retry` (1-based): base * 2^(retry-1), capped.
  std::chrono::milliseconds delay_before_retry(int retry) const;
};

/// HTTP statuses worth retrying: 408, 409, 425, 429 and 5xx.
bool is_retryable_status(int status);

using LogSink = std::function<void(const std::string&)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct ClientConfig {
  /// e.g. "http://localhost:8000/v1"; "/chat/completions" is appended.
  std::string base_url = "http://localhost:8000/v1";
  /// Name of the environment variable holding the bearer token. Unset or
  /// empty variable means no Authorization header.
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{120'000};
  RetryPolicy retry;
  std::size_t max_in_flight = 4;
  /// Send `response_format` with the schema for structured calls. When false
  /// the schema is described in the prompt and validated locally only.
  bool schema_mode = true;
  std::optional<std::filesystem::path> transcript_path;
  LogSink log;
};

/// A chat-completions capable model endpoint.
class ChatClient {
 public:
  virtual ~ChatClient() = default;

  virtual std::string chat(const GenerationParams& params,
                           std::span<const ChatMessage> messages) = 0;

  /// Returns a JSON value satisfying `response_format.json_schema.schema`.
  /// A reply that fails validation gets one repair round trip; a second failure
  /// throws StructuredOutputError with the last payload.
  nlohmann::json chat_structured(const GenerationParams& params,
                                 std::span<const ChatMessage> messages,
                                 const nlohmann::json& response_format);

 protected:
  virtual bool supports_schema_mode() const { return false; }

  /// Sends a request carrying `response_format` verbatim. Only called when
  /// supports_schema_mode() is true.
  virtual std::string chat_with_format(const GenerationParams& params,
                                       std::span<const ChatMessage> messages,
                                       const nlohmann::json& response_format);
};

/// Bounded counting semaphore for the in-flight request limit.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t limit) : available_(limit == 0 ? 1 : limit) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t available_;
};

/// Replaces every occurrence of `secret` in `text`.
std::string redact(std::string text, const std::string& secret);

/// Talks the OpenAI-compatible chat-completions HTTP dialect.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(ClientConfig cfg, Sleeper sleeper = {});

  std::string chat(const GenerationParams& params,
                   std::span<const ChatMessage> messages) override;

  const ClientConfig& config() const { return cfg_; }

  /// Request body as sent on the wire (exposed for inspection in tests).
  static nlohmann::json build_request(const GenerationParams& params,
                                      std::span<const ChatMessage> messages,
                                      const nlohmann::json* response_format);

 protected:
  bool supports_schema_mode() const override { return cfg_.schema_mode; }
  std::string chat_with_format(const GenerationParams& params,
                               std::span<const ChatMessage> messages,
                               const nlohmann::json& response_format) override;

 private:
  std::string post(const nlohmann::json& body);
  void log(const std::string& line) const;
  void record_transcript(const nlohmann::json& request, int status, const std::string& response);

  ClientConfig cfg_;
  Sleeper sleeper_;
  std::string api_key_;
  std::string scheme_host_port_;
  std::string path_;
  InFlightLimiter limiter_;
  std::mutex transcript_mu_;
  std::ofstream transcript_;
};

}  // namespace radlabel
