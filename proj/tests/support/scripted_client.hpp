#pragma once

#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "radlabel/errors.hpp"
#include "radlabel/llm_client.hpp"

namespace radlabel::testing {

/// Deterministic ChatClient: replies are produced by a function of the call
/// index (0-based) and the prompt. Records every prompt it sees.
class ScriptedClient : public ChatClient {
 public:
  using Responder = std::function<std::string(std::size_t call, const std::string& prompt)>;

  explicit ScriptedClient(Responder responder) : responder_(std::move(responder)) {}

  /// Cycles through a fixed list of replies.
  static ScriptedClient cycling(std::vector<std::string> replies) {
    return ScriptedClient([replies = std::move(replies)](std::size_t call, const std::string&) {
      return replies[call % replies.size()];
    });
  }

  std::string chat(const GenerationParams& params, std::span<const ChatMessage> messages) override {
    std::string prompt;
    std::size_t call;
    {
      std::lock_guard lock(mu_);
      call = prompts_.size();
      for (const auto& m : messages) prompt += m.content;
      prompts_.push_back(prompt);
      params_.push_back(params);
    }
    return responder_(call, prompt);
  }

  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return prompts_.size();
  }
  std::vector<std::string> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }
  std::vector<GenerationParams> params() const {
    std::lock_guard lock(mu_);
    return params_;
  }

 private:
  Responder responder_;
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
  std::vector<GenerationParams> params_;
};

}  // namespace radlabel::testing
