#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "micobot/alloc/allocator.hpp"
#include "micobot/dialog/dialog.hpp"
#include "micobot/task/scenario.hpp"

namespace micobot::meta {

enum class Policy { Proceed, NegotiateFirst, Wait };
std::string_view to_string(Policy p);

/// A verbal act the robot intends to say.
struct VerbalIntent {
  dialog::Act act = dialog::Act::AskHelp;
  StepRange range;
  std::optional<StepRange> robot_part;
  std::optional<StepRange> human_part;

  /// Steps the human would take on.
  StepRange human_range() const { return human_part ? *human_part : range; }
  /// "ask_help 2-4", "propose_split 2-4 2-3 3-4".
  std::string to_string() const;
  bool operator==(const VerbalIntent&) const = default;
};

struct ConstraintDelta {
  enum class Op { Add, Remove };
  Op op = Op::Add;
  alloc::Constraint constraint;
  bool operator==(const ConstraintDelta&) const = default;
};

class InvalidProgram : public Error {
 public:
  using Error::Error;
};

/// Bounded strategy: constraint edits plus one action policy.
///
/// Canonical text is a ';'-separated clause list, e.g.
/// "policy negotiate_first propose_split 2-4 2-3 3-4; add split 2-4 3; remove assign 3-4 H".
/// Negotiation acts after the policy name are joined with " + ".
struct StrategyProgram {
  std::vector<ConstraintDelta> deltas;
  Policy policy = Policy::Proceed;
  std::vector<VerbalIntent> negotiation;

  std::string to_string() const;
  /// Throws InvalidProgram.
  static StrategyProgram parse(const std::string& text);
  /// Structural check against the plan; throws InvalidProgram.
  void validate(const task::PlanSpec& plan) const;
  bool operator==(const StrategyProgram&) const = default;
};

struct PlannerState {
  int current_step = 0;
  std::vector<alloc::Constraint> constraints;
  dialog::PHelpEstimate p_help;
  std::optional<dialog::PendingRequest> pending;
  /// Queued by a negotiate_first program.
  std::vector<VerbalIntent> negotiation;
  bool wait_requested = false;

  int current_episode = 0;
  bool episode_negotiated = false;
  int episode_rejections = 0;
  int next_request_id = 1;
  int next_episode = 1;
  int next_turn_id = 1;

  /// Consecutive environment steps with a robot-infeasible current step
  /// allocated to the robot.
  int consecutive_infeasible_robot = 0;
  /// Refusals per robot-infeasible step.
  std::map<int, int> infeasible_refusals;

  std::vector<dialog::DialogEvent> history;

  bool completed(int step) const { return step < current_step; }
  /// Throws ValidationError.
  void validate(const task::PlanSpec& plan) const;
};

/// Deterministic rule table from the latest human events to a program.
StrategyProgram derive_program(const std::vector<dialog::DialogEvent>& latest_events, const PlannerState& state,
                               const task::PlanSpec& plan);

/// Applies constraint edits and the policy to the state, then normalizes the
/// constraint list (a later assign/forbid on the same range and agent wins).
void apply_program(PlannerState& state, const StrategyProgram& program, const std::string& origin);

/// Alternative program producer (e.g. an external model). nullopt, a parse
/// failure or a structurally invalid program counts as a failed attempt.
class ProgramSource {
 public:
  virtual ~ProgramSource() = default;
  virtual std::optional<std::string> derive(const std::vector<dialog::DialogEvent>& events,
                                            const PlannerState& state, const task::PlanSpec& plan) = 0;
};

struct RecoveryReport {
  int attempts = 0;
  int dropped_dialog_attempts = 0;
  bool fallback = false;
  bool operator==(const RecoveryReport&) const = default;
};

inline constexpr int kFullDialogAttempts = 3;
inline constexpr int kDroppedDialogAttempts = 2;

/// Asks the source up to 3 times, then up to 2 more times without the most
/// recent human event, then falls back to the rule table. Without a source the
/// rule table is used directly.
StrategyProgram derive_with_recovery(ProgramSource* source, const std::vector<dialog::DialogEvent>& events,
                                     const PlannerState& state, const task::PlanSpec& plan,
                                     RecoveryReport* report = nullptr);

/// Folds a classified human event into the state: p_help (unless pinned),
/// pending request status, episode counters, history. Returns true when the
/// event refuses a request containing a robot-infeasible step.
bool absorb_human_event(PlannerState& state, const dialog::DialogEvent& event, const task::PlanSpec& plan,
                        bool pin_p_help = false);

class PlanExhausted : public Error {
 public:
  using Error::Error;
};

struct RobotDecision {
  enum class Kind { Physical, Verbal, Wait };
  Kind kind = Kind::Wait;
  int step = -1;
  std::vector<VerbalIntent> utterances;
  /// The queued negotiation was spoken (or dropped as stale).
  bool consumed_negotiation = false;
};

std::string_view to_string(RobotDecision::Kind k);

struct SelectOptions {
  bool use_hierarchy = true;
};

/// Next robot action for the current allocation. Throws PlanExhausted.
RobotDecision select_next_action(const PlannerState& state, const alloc::Assignment& allocation,
                                 const task::PlanSpec& plan, const SelectOptions& options = {});

/// Largest robot-feasible prefix of `bundle`, clipped to steps not yet done.
StepRange feasible_prefix(const task::PlanSpec& plan, StepRange bundle);

}  // namespace micobot::meta
