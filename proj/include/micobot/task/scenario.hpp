#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "micobot/common.hpp"
#include "micobot/world/primitive.hpp"
#include "micobot/world/rollout.hpp"
#include "micobot/world/world_state.hpp"

namespace micobot::task {

using world::PhysicalPrimitive;
using world::PrimitiveKind;

/// A labelled group of adjacent low-level steps.
struct AbstractStep {
  std::string label;
  StepRange range;
  /// How the step is said in a sentence ("open the package"); defaults to
  /// the lowercased label.
  std::string phrase;

  std::string spoken() const;
  bool operator==(const AbstractStep&) const = default;
};

/// Fixed task plan plus its two-level hierarchy. Humans are assumed capable
/// of every step; robot_capability holds the robot's success probability.
struct PlanSpec {
  std::vector<PhysicalPrimitive> steps;
  std::vector<AbstractStep> abstract_steps;
  std::vector<double> robot_capability;

  int size() const { return static_cast<int>(steps.size()); }
  /// Index into abstract_steps containing `step`.
  int abstract_index_of(int step) const;
  const AbstractStep& abstract_of(int step) const { return abstract_steps.at(abstract_index_of(step)); }
  bool robot_infeasible(int step) const { return robot_capability.at(step) <= 0.0; }

  /// Throws ValidationError naming the offending field.
  void validate() const;
  bool operator==(const PlanSpec&) const = default;
};

/// Default human stationary costs (seconds, item within reach).
double default_human_stationary_seconds(PrimitiveKind kind);

struct TaskScenario {
  std::string name;
  std::string description;
  world::GridWorld world;
  world::SymbolicState initial;
  PlanSpec plan;
  world::AgentProfile robot;
  /// Stationary human seconds per kind; kinds absent here use the defaults.
  std::map<PrimitiveKind, double> human_stationary;
  /// Skill kinds the robot advertises (what a planner without affordance
  /// estimates would believe it can do).
  std::vector<PrimitiveKind> robot_skills;
  std::string human_agent = "human";
  std::string robot_agent = "robot";

  /// Initial state advanced by steps [0, step).
  world::SymbolicState state_before(int step) const;

  /// Checks every invariant; throws ValidationError.
  void validate() const;
  bool operator==(const TaskScenario&) const = default;
};

/// Parses the scenario text format (docs/scenario-format.md). Throws
/// ParseError or ValidationError.
TaskScenario load_scenario(const std::string& document);
TaskScenario load_scenario_file(const std::string& path);
std::string serialize_scenario(const TaskScenario& scenario);

/// Built-in tasks: task-1 (pour package into bowl), task-2 (assemble toy car),
/// task-3 (pack gift box).
const std::vector<TaskScenario>& builtin_scenarios();
/// Builtin by name ("task-1".."task-3") or a scenario file path. Throws ConfigError.
TaskScenario resolve_scenario(const std::string& name_or_path);
/// Scenario document for a builtin, as shipped in scenarios/.
std::string builtin_document(const std::string& name);

/// Capability assigned to robot steps the task description calls low-success.
inline constexpr double kLowSuccessCapability = 0.5;

}  // namespace micobot::task
