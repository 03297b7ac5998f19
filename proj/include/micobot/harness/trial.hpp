#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "micobot/alloc/allocator.hpp"
#include "micobot/human/human.hpp"
#include "micobot/llm/adapter.hpp"
#include "micobot/meta/planner.hpp"
#include "micobot/q/q_model.hpp"
#include "micobot/task/scenario.hpp"

namespace micobot::harness {

enum class MethodKind { Micobot, Random, Recb, LlmProxy, HInit, RInit, NoPhelp, NoHierarchy };

struct Method {
  MethodKind kind = MethodKind::Micobot;
  /// recb: probability of allocating a step to the human.
  double p_c = 0.0;
  /// recb: take p_c from another method's results in the same suite cell.
  std::optional<std::string> p_c_from;

  /// "micobot", "recb:0.3", "recb:from:micobot", ...
  std::string to_string() const;
  /// Throws ConfigError.
  static Method parse(const std::string& text);
  /// Variants of the full pipeline (everything but the baselines).
  bool micobot_family() const;
  bool operator==(const Method&) const = default;
};

struct HumanSpec {
  enum class Kind { Simulated, Script, Interactive };
  Kind kind = Kind::Simulated;
  human::SimulatedHumanParams params;
  std::vector<human::Directive> script;
  int turn_timeout_ms = 120000;

  nlohmann::json to_json() const;
  static HumanSpec from_json(const nlohmann::json& j);
  bool operator==(const HumanSpec&) const = default;
};

inline constexpr int kDefaultQSamples = 1000;

struct TrialConfig {
  /// Builtin name or scenario file path.
  std::string scenario = "task-1";
  Method method;
  HumanSpec human;
  double alpha = 10.0;
  std::uint64_t seed = 0;
  int max_step_multiplier = 4;
  /// Rollouts per plan step when building the robot Q table.
  int q_samples = kDefaultQSamples;
  std::uint64_t q_seed = 0;
  llm::AdapterConfig llm;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  /// Keys absent from `j` keep the values already in `base`. Throws ConfigError.
  static TrialConfig from_json(const nlohmann::json& j, const TrialConfig& base);
  static TrialConfig from_json(const nlohmann::json& j);
  static TrialConfig load(const std::string& path, const TrialConfig& base);
  static TrialConfig load(const std::string& path);
};

class MalformedLog : public Error {
 public:
  using Error::Error;
};

enum class RecordKind { Physical, Verbal, Allocation, PHelp, Termination };
std::string_view to_string(RecordKind k);
std::optional<RecordKind> parse_record_kind(std::string_view name);

struct LogRecord {
  int env_step = 0;
  /// "R", "H" or "system".
  std::string actor;
  RecordKind kind = RecordKind::Verbal;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  /// Throws MalformedLog.
  static LogRecord from_json(const nlohmann::json& j);
  bool operator==(const LogRecord&) const = default;
};

enum class TerminationReason {
  IrrecoverableFailure,  // (a)
  StepLimit,             // (b)
  InfeasibleToRobot,     // (c)
  HumanRefusedTwice,     // (d)
  PlanComplete,          // (e)
  Aborted,               // live session closed
};
std::string_view to_string(TerminationReason r);
std::optional<TerminationReason> parse_termination(std::string_view name);

/// Append-only event stream of one trial. Serialized as JSON lines: a header
/// line {"trial_log": 1, "config": ..., "plan_size": T} followed by one line
/// per record. Keys are sorted, so equal logs serialize to equal bytes.
struct TrialLog {
  nlohmann::json config = nlohmann::json::object();
  int plan_size = 0;
  std::vector<LogRecord> records;

  std::string serialize() const;
  /// Throws MalformedLog.
  static TrialLog parse(const std::string& text);
  static TrialLog load(const std::string& path);
  void save(const std::string& path) const;
  /// env_step non-decreasing, exactly one termination record and it is last.
  /// Throws MalformedLog.
  void validate() const;
  bool operator==(const TrialLog&) const = default;
};

struct Metrics {
  bool full_success = false;
  TerminationReason termination = TerminationReason::StepLimit;
  int env_steps = 0;
  double steps_completed_fraction = 0.0;
  double human_steps_fraction = 0.0;
  double human_effort_seconds = 0.0;
  int help_requests = 0;
  /// nullopt when no request received a response.
  std::optional<double> initial_acceptance;
  std::optional<double> post_negotiation_acceptance;
  int robot_initiated = 0;
  int human_initiated = 0;
  int initiative_shifts = 0;
  int dialog_events = 0;

  nlohmann::json to_json() const;
};

/// Throws MalformedLog.
Metrics compute_metrics(const TrialLog& log);

struct TrialResult {
  Metrics metrics;
  TrialLog log;
};

/// What a custom decision policy sees each environment step.
struct PolicyContext {
  const task::TaskScenario& scenario;
  const meta::PlannerState& planner;
  const alloc::Assignment& allocation;
  int env_step;
};
using PolicyOverride = std::function<meta::RobotDecision(const PolicyContext&)>;

/// Optional replacements for the parts a config normally builds itself.
struct TrialHooks {
  std::shared_ptr<human::HumanAgent> human;
  std::shared_ptr<q::StepCostModel> costs;
  /// Transport for the adapter when the config enables it.
  std::shared_ptr<llm::ChatTransport> transport;
  PolicyOverride policy;
  /// Called for every record as it is appended (from the trial thread).
  std::function<void(const LogRecord&)> on_record;
  /// Called after each strategy derivation (micobot family only).
  std::function<void(const meta::RecoveryReport&)> on_recovery;
};

/// Runs one trial to termination. Throws ConfigError, SessionClosed is turned
/// into an "aborted" termination record.
TrialResult run_trial(const TrialConfig& config, const TrialHooks& hooks = {});

/// Recorded human turns of a log, keyed by environment step.
std::map<int, human::HumanTurn> recorded_human_turns(const TrialLog& log);

struct ReplayResult {
  bool identical = false;
  /// 1-based line number of the first difference, 0 when identical.
  int first_difference = 0;
  std::string regenerated;
};

/// Re-executes the logged config (interactive logs with their recorded human
/// turns) and compares the regenerated log byte for byte.
ReplayResult replay(const std::string& log_text);

}  // namespace micobot::harness
