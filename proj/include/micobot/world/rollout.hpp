#pragma once

#include <map>
#include <string>

#include "micobot/rng.hpp"
#include "micobot/world/primitive.hpp"
#include "micobot/world/world_state.hpp"

namespace micobot::world {

/// Timesteps charged to a failed skill execution.
inline constexpr int kTimeoutSteps = 60;

/// Duration of a successful execution, truncated to [1, L].
struct DurationDist {
  enum class Shape { Constant, Uniform, Normal };
  Shape shape = Shape::Constant;
  double a = 1.0;  // constant value | uniform low | normal mean
  double b = 0.0;  // unused          | uniform high | normal sd

  static DurationDist constant(double d) { return {Shape::Constant, d, 0.0}; }
  static DurationDist uniform(double lo, double hi) { return {Shape::Uniform, lo, hi}; }
  static DurationDist normal(double mean, double sd) { return {Shape::Normal, mean, sd}; }

  int sample(Rng& rng, int timeout = kTimeoutSteps) const;
  /// Text form: "7", "uniform(5,9)", "normal(10,2)".
  std::string to_string() const;
  static DurationDist parse(const std::string& text);

  bool operator==(const DurationDist&) const = default;
};

struct SkillProfile {
  double p_success = 1.0;
  DurationDist duration = DurationDist::constant(1.0);
  /// Probability that a failure cannot be recovered from.
  double p_irrecoverable = 0.0;

  bool operator==(const SkillProfile&) const = default;
};

/// Per-agent success/duration table. Lookup order: exact primitive text,
/// then primitive kind, then the fallback.
struct AgentProfile {
  std::string agent;
  std::map<std::string, SkillProfile> by_primitive;
  std::map<PrimitiveKind, SkillProfile> by_kind;
  SkillProfile fallback;

  const SkillProfile& lookup(const PhysicalPrimitive& prim) const;
  bool operator==(const AgentProfile&) const = default;
};

struct PrimitiveOutcome {
  bool succeeded = false;
  int duration = 1;
  bool terminal_failure = false;
};

/// Executes a primitive stochastically. Preconditions are checked as in
/// apply_effect (and throw the same errors); the state itself is not changed.
PrimitiveOutcome rollout_primitive(const SymbolicState& state, const PhysicalPrimitive& prim,
                                   const AgentProfile& profile, Rng& rng,
                                   int timeout = kTimeoutSteps);

/// Same as rollout_primitive, with the success draw supplied by the caller
/// (a uniform in [0,1); success iff draw < p_success).
PrimitiveOutcome rollout_with_draw(const SymbolicState& state, const PhysicalPrimitive& prim,
                                   const AgentProfile& profile, double success_draw, Rng& rng,
                                   int timeout = kTimeoutSteps);

}  // namespace micobot::world
