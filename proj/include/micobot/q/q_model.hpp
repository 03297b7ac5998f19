#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "micobot/common.hpp"
#include "micobot/rng.hpp"
#include "micobot/task/scenario.hpp"
#include "micobot/world/rollout.hpp"

namespace micobot::q {

using world::PhysicalPrimitive;
using world::SymbolicState;

/// One robot skill execution: state digest, primitive, timesteps until
/// completion (the timeout on failure).
struct SampleRecord {
  std::string state_key;
  PhysicalPrimitive primitive;
  int elapsed = 0;
};

/// How success draws are generated across a batch of rollouts.
enum class Sampling {
  Independent,  // one fresh uniform per rollout
  Stratified,   // one uniform per 1/n stratum, shuffled; each draw is still U[0,1)
};

/// n seeded rollouts of `primitive` from `state` with the scenario's robot
/// profile.
std::vector<SampleRecord> collect_samples(const task::TaskScenario& scenario,
                                          const SymbolicState& state,
                                          const PhysicalPrimitive& primitive, int n, Rng& rng,
                                          Sampling sampling = Sampling::Stratified,
                                          int timeout = world::kTimeoutSteps);

/// Same, for an explicit agent profile.
std::vector<SampleRecord> collect_samples(const world::AgentProfile& profile,
                                          const SymbolicState& state,
                                          const PhysicalPrimitive& primitive, int n, Rng& rng,
                                          Sampling sampling = Sampling::Stratified,
                                          int timeout = world::kTimeoutSteps);

class MissingEntry : public Error {
 public:
  using Error::Error;
};

/// Tabular robot Q: mean of -elapsed per (state digest, primitive).
class RobotQTable {
 public:
  explicit RobotQTable(int timeout = world::kTimeoutSteps, int min_count = 1)
      : timeout_(timeout), min_count_(min_count) {}

  /// Throws ValidationError for elapsed outside [1, L].
  void add(const SampleRecord& record);
  void add(const std::vector<SampleRecord>& records);

  /// Throws MissingEntry when the entry is absent or under-sampled.
  double query(const std::string& state_key, const PhysicalPrimitive& primitive) const;
  bool contains(const std::string& state_key, const PhysicalPrimitive& primitive) const;
  int count(const std::string& state_key, const PhysicalPrimitive& primitive) const;
  std::size_t size() const { return entries_.size(); }
  int timeout() const { return timeout_; }
  int min_count() const { return min_count_; }

  /// Versioned text form: header lines, then one
  /// "state_key<TAB>primitive<TAB>mean<TAB>count" line per entry.
  std::string serialize() const;
  static RobotQTable parse(const std::string& document);
  void save(const std::string& path) const;
  static RobotQTable load(const std::string& path);

  bool operator==(const RobotQTable&) const = default;

 private:
  struct Entry {
    double sum = 0.0;  // sum of -elapsed
    int count = 0;
    bool operator==(const Entry&) const = default;
  };
  int timeout_;
  int min_count_;
  std::map<std::pair<std::string, std::string>, Entry> entries_;
};

/// Stored mean of -elapsed for (state, primitive). Throws MissingEntry.
double robot_q(const RobotQTable& table, const SymbolicState& state, const PhysicalPrimitive& primitive);
/// robot_q, with missing entries mapped to -L.
double robot_q_or_timeout(const RobotQTable& table, const SymbolicState& state,
                          const PhysicalPrimitive& primitive);

/// Builds a table by sampling every plan step from its forward-simulated
/// state.
RobotQTable build_robot_table(const task::TaskScenario& scenario, int samples_per_step,
                              std::uint64_t seed, Sampling sampling = Sampling::Stratified);

inline constexpr double kHumanWalkingSpeed = 1.4;  // m/s

/// Human step cost: stationary time plus walking time, no failure term.
struct HumanCostModel {
  std::map<world::PrimitiveKind, double> stationary_seconds;
  /// Per exact primitive text; overrides the per-kind value.
  std::map<std::string, double> stationary_overrides;
  double seconds_per_timestep = 1.0;

  static HumanCostModel for_scenario(const task::TaskScenario& scenario);
  double stationary(const PhysicalPrimitive& prim) const;
  double walking_speed() const { return kHumanWalkingSpeed; }
};

/// Seconds the human needs for the primitive from their current pose.
double human_seconds(const HumanCostModel& model, const world::GridWorld& world,
                     const SymbolicState& state, const PhysicalPrimitive& primitive,
                     const std::string& human_agent);

/// -(stationary + distance / 1.4) expressed in timesteps. Throws UnknownEntity.
double human_q(const HumanCostModel& model, const world::GridWorld& world, const SymbolicState& state,
               const PhysicalPrimitive& primitive, const std::string& human_agent);

/// Per-step costs the planner optimizes over.
class StepCostModel {
 public:
  virtual ~StepCostModel() = default;
  virtual double robot_cost(const SymbolicState& state, int step) const = 0;
  virtual double human_cost(const SymbolicState& state, int step) const = 0;
};

/// Robot Q from a sample table, human Q from the cost model and geometry.
class ScenarioCostModel final : public StepCostModel {
 public:
  ScenarioCostModel(const task::TaskScenario& scenario, std::shared_ptr<const RobotQTable> table);
  double robot_cost(const SymbolicState& state, int step) const override;
  double human_cost(const SymbolicState& state, int step) const override;
  const RobotQTable& table() const { return *table_; }
  const HumanCostModel& human_model() const { return human_; }

 private:
  const task::TaskScenario& scenario_;
  std::shared_ptr<const RobotQTable> table_;
  HumanCostModel human_;
};

/// Fixed per-step costs, independent of state.
class FixedCostModel final : public StepCostModel {
 public:
  FixedCostModel(std::vector<double> robot, std::vector<double> human)
      : robot_(std::move(robot)), human_(std::move(human)) {}
  double robot_cost(const SymbolicState&, int step) const override { return robot_.at(step); }
  double human_cost(const SymbolicState&, int step) const override { return human_.at(step); }

 private:
  std::vector<double> robot_;
  std::vector<double> human_;
};

}  // namespace micobot::q
