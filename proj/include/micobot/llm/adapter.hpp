#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "micobot/alloc/allocator.hpp"
#include "micobot/dialog/dialog.hpp"
#include "micobot/meta/planner.hpp"

namespace micobot::llm {

enum class Capability { Classify, Sentiment, Realize, Strategy, Allocate };
std::string_view to_string(Capability c);
std::optional<Capability> parse_capability(std::string_view name);

struct AdapterConfig {
  bool enabled = false;
  /// Full URL of the chat-completions endpoint.
  std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "gpt-4o";
  /// Name of the environment variable holding the bearer credential.
  std::string credential_env = "MICOBOT_LLM_API_KEY";
  double timeout_seconds = 10.0;
  std::set<Capability> capabilities = {Capability::Classify, Capability::Sentiment, Capability::Realize,
                                       Capability::Strategy, Capability::Allocate};
  /// Keep prompt and response text in the audit log, not just hashes.
  bool log_raw = false;

  /// Throws ConfigError.
  void validate() const;
  /// Missing keys keep their defaults. Throws ConfigError.
  static AdapterConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Returned instead of a value whenever the adapter cannot be trusted; the
/// caller then uses its deterministic core.
struct FallbackSignal {
  std::string reason;
};

template <class T>
using Result = std::variant<T, FallbackSignal>;

template <class T>
bool ok(const Result<T>& r) {
  return std::holds_alternative<T>(r);
}

struct TransportReply {
  bool ok = false;
  int status = 0;
  std::string body;
  std::string error;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual TransportReply post(const std::string& body, const std::string& bearer, double timeout_seconds) = 0;
};

/// POSTs JSON to the configured endpoint.
class HttpChatTransport final : public ChatTransport {
 public:
  /// Throws ConfigError for an unparseable URL.
  explicit HttpChatTransport(const std::string& endpoint);
  TransportReply post(const std::string& body, const std::string& bearer, double timeout_seconds) override;

 private:
  std::string origin_;
  std::string path_;
};

struct AuditEntry {
  Capability capability = Capability::Classify;
  std::string prompt_hash;
  std::string response_hash;
  bool ok = false;
  std::string reason;
  std::string prompt;
  std::string response;
};

class LlmAdapter {
 public:
  explicit LlmAdapter(AdapterConfig config, std::shared_ptr<ChatTransport> transport = nullptr);

  const AdapterConfig& config() const { return config_; }
  bool enabled(Capability c) const { return config_.enabled && config_.capabilities.count(c) > 0; }

  /// Sends the capability preamble plus `structured_prompt` and returns the
  /// assistant message content.
  Result<std::string> call(Capability capability, const nlohmann::json& structured_prompt);

  Result<dialog::DialogEvent> classify(const std::string& text, const dialog::ClassifyContext& ctx);
  /// Scalar in [-1, 1].
  Result<double> sentiment(const std::string& text);
  Result<std::string> realize(dialog::Act act, const std::string& draft);
  Result<meta::StrategyProgram> strategy(const std::vector<dialog::DialogEvent>& events,
                                         const meta::PlannerState& state, const task::PlanSpec& plan);
  /// Raw program text, validated by the caller.
  Result<std::string> strategy_text(const std::vector<dialog::DialogEvent>& events,
                                    const meta::PlannerState& state, const task::PlanSpec& plan);
  Result<alloc::Assignment> allocate(const nlohmann::json& context, int first_step, int count);

  std::vector<AuditEntry> audit() const;

 private:
  void record(AuditEntry e);
  AdapterConfig config_;
  std::shared_ptr<ChatTransport> transport_;
  mutable std::mutex audit_m_;
  std::vector<AuditEntry> audit_;
};

/// Instruction preamble (with worked examples) sent for a capability.
const std::string& preamble(Capability c);

/// Structured context shared by strategy and allocation prompts.
nlohmann::json planner_context(const std::vector<dialog::DialogEvent>& events, const meta::PlannerState& state,
                               const task::PlanSpec& plan);

nlohmann::json event_to_json(const dialog::DialogEvent& e);
/// Throws ValidationError / nlohmann exceptions on schema violations.
dialog::DialogEvent event_from_json(const nlohmann::json& j);

/// Program source backed by the adapter's strategy capability.
class AdapterProgramSource final : public meta::ProgramSource {
 public:
  explicit AdapterProgramSource(LlmAdapter& adapter) : adapter_(adapter) {}
  std::optional<std::string> derive(const std::vector<dialog::DialogEvent>& events, const meta::PlannerState& state,
                                    const task::PlanSpec& plan) override;

 private:
  LlmAdapter& adapter_;
};

/// Routes the engine's classify/sentiment/realize through the adapter.
void install_dialog_hooks(dialog::DialogEngine& engine, LlmAdapter& adapter);

}  // namespace micobot::llm
