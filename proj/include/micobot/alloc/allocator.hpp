#pragma once

#include <optional>
#include <string>
#include <vector>

#include "micobot/common.hpp"

namespace micobot::alloc {

inline constexpr double kPHelpEpsilon = 0.01;
inline constexpr int kMaxEnumeratedSteps = 16;

/// Restriction on the allocation, derived from dialog.
///
/// Split: within `range`, the robot takes [range.begin, boundary) and the
/// human takes [boundary, range.end).
struct Constraint {
  enum class Kind { Assign, Forbid, Split };
  Kind kind = Kind::Assign;
  StepRange range;
  Agent agent = Agent::Robot;
  int boundary = 0;
  std::string origin;

  static Constraint assign(StepRange r, Agent a, std::string origin = {});
  static Constraint forbid(StepRange r, Agent a, std::string origin = {});
  static Constraint split(StepRange r, int boundary, std::string origin = {});

  /// Agent this constraint requires at `step`, or the agent it rules out
  /// (for Forbid); nullopt when the step is outside the range.
  std::optional<Agent> required_at(int step) const;
  bool allows(int step, Agent a) const;

  /// "assign 3-4 H", "forbid 0-2 R", "split 2-4 3". Origin is not part of it.
  std::string to_string() const;
  static std::optional<Constraint> parse(const std::string& text);

  bool operator==(const Constraint&) const = default;
};

std::string_view to_string(Constraint::Kind kind);

/// Remaining steps [first_step, first_step + size()) and their costs.
struct AllocationProblem {
  int first_step = 0;
  std::vector<double> q_robot;
  std::vector<double> q_human;
  /// One value per step, or a single value shared by all steps.
  std::vector<double> p_help = {1.0};
  double alpha = 10.0;
  /// Oldest first.
  std::vector<Constraint> constraints;
  /// Forbids R on steps marked robot_infeasible. Never relaxed.
  bool strict = false;
  std::vector<bool> robot_infeasible;

  int size() const { return static_cast<int>(q_robot.size()); }
  int end_step() const { return first_step + size(); }
  /// p_help for the step at offset i, clamped to [epsilon, 1].
  double p_at(int i) const;
  /// Weighted objective term for offset i under agent a.
  double term(int i, Agent a) const;
  bool hard_forbidden(int i, Agent a) const;

  /// Throws ValidationError.
  void validate() const;
};

/// Agents for steps first_step, first_step + 1, ...
struct Assignment {
  int first_step = 0;
  std::vector<Agent> agents;

  int size() const { return static_cast<int>(agents.size()); }
  Agent at(int step) const { return agents.at(static_cast<std::size_t>(step - first_step)); }
  /// "RRHHR".
  std::string to_string() const;
  static std::optional<Assignment> parse(int first_step, const std::string& text);
  bool operator==(const Assignment&) const = default;
};

struct AllocationResult {
  Assignment assignment;
  double objective = 0.0;
  std::vector<Constraint> relaxed;
};

class TooManySteps : public Error {
 public:
  using Error::Error;
};
class Infeasible : public Error {
 public:
  using Error::Error;
};
class IncompleteAssignment : public Error {
 public:
  using Error::Error;
};

/// Sum over steps of [H ? alpha / p : 1] * Q. Throws IncompleteAssignment.
double score(const AllocationProblem& problem, const Assignment& assignment);

/// True if the assignment honors every listed constraint and the strict rule.
bool satisfies(const AllocationProblem& problem, const Assignment& assignment);

/// Best constraint-satisfying assignment by exhaustive enumeration; ties go to
/// R on the earliest differing step. Relaxes constraints when none is
/// feasible. Throws TooManySteps, ValidationError.
AllocationResult solve(const AllocationProblem& problem);

/// Drops constraints newest first until a feasible assignment exists.
AllocationResult relax_and_solve(const AllocationProblem& problem);

/// Restricts constraints to the steps still in the problem; those with no
/// remaining step are removed.
std::vector<Constraint> clip_constraints(const std::vector<Constraint>& constraints, int first_step,
                                         int end_step);

}  // namespace micobot::alloc
