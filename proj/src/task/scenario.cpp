#include "micobot/task/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "micobot/text.hpp"

namespace micobot::task {

std::string AbstractStep::spoken() const { return phrase.empty() ? text::lower(label) : phrase; }

int PlanSpec::abstract_index_of(int step) const {
  for (std::size_t i = 0; i < abstract_steps.size(); ++i) {
    if (abstract_steps[i].range.contains(step)) return static_cast<int>(i);
  }
  throw ValidationError("plan.step." + std::to_string(step), "not covered by the hierarchy");
}

void PlanSpec::validate() const {
  if (steps.empty()) throw ValidationError("plan", "plan must contain at least one step");
  const int t = size();
  int cursor = 0;
  for (std::size_t i = 0; i < abstract_steps.size(); ++i) {
    const auto& a = abstract_steps[i];
    const std::string locus = "hierarchy[" + std::to_string(i) + "]";
    if (a.label.empty()) throw ValidationError(locus, "empty label");
    if (a.range.begin != cursor) {
      throw ValidationError(locus, a.range.begin > cursor
                                       ? "step index " + std::to_string(cursor) + " unassigned"
                                       : "range overlaps previous abstract step");
    }
    if (a.range.end <= a.range.begin) throw ValidationError(locus, "empty step range");
    if (a.range.end > t) throw ValidationError(locus, "range exceeds plan length");
    cursor = a.range.end;
  }
  if (cursor != t) {
    throw ValidationError("hierarchy", "step index " + std::to_string(cursor) + " unassigned");
  }
  if (static_cast<int>(robot_capability.size()) != t) {
    throw ValidationError("capabilities", "capability map must cover all " + std::to_string(t) +
                                              " step indices");
  }
  for (int i = 0; i < t; ++i) {
    const double p = robot_capability[static_cast<std::size_t>(i)];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("capabilities." + std::to_string(i), "probability outside [0,1]");
    }
  }
}

double default_human_stationary_seconds(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::PickPlace: return 8.0;
    case PrimitiveKind::PickOpenPlace: return 15.0;
    case PrimitiveKind::PickPourPlace: return 10.0;
    case PrimitiveKind::PutOn: return 20.0;
    case PrimitiveKind::Switch: return 12.0;
    case PrimitiveKind::Fold: return 5.0;
    case PrimitiveKind::Cover: return 6.0;
    case PrimitiveKind::Wrap: return 25.0;
    case PrimitiveKind::CutPut: return 15.0;
  }
  return 10.0;
}

world::SymbolicState TaskScenario::state_before(int step) const {
  world::SymbolicState s = initial;
  for (int i = 0; i < step && i < plan.size(); ++i) {
    s = world::apply_effect(s, plan.steps[static_cast<std::size_t>(i)]);
  }
  return s;
}

void TaskScenario::validate() const {
  if (name.empty()) throw ValidationError("scenario", "missing name");
  plan.validate();
  initial.check_invariants();
  for (const auto& agent : {human_agent, robot_agent}) {
    if (!initial.is_agent(agent)) throw ValidationError("world.agent." + agent, "agent pose missing");
    if (!world.walkable(initial.agent_pose(agent))) {
      throw ValidationError("world.agent." + agent, "agent stands on a non-walkable cell");
    }
  }
  for (const auto& f : world.furniture()) {
    if (!initial.is_furniture(f.name)) throw ValidationError("world.furniture." + f.name, "not in state");
  }
  // Every parameter must resolve, and the plan must run start to finish.
  world::SymbolicState s = initial;
  for (int i = 0; i < plan.size(); ++i) {
    const auto& prim = plan.steps[static_cast<std::size_t>(i)];
    const std::string locus = "plan.step." + std::to_string(i);
    for (const auto& p : prim.params) {
      if (!initial.is_object(p) && !initial.is_furniture(p)) {
        throw ValidationError(locus, "parameter '" + p + "' does not resolve");
      }
    }
    try {
      s = world::apply_effect(s, prim);
    } catch (const Error& e) {
      throw ValidationError(locus, e.what());
    }
  }
  std::map<std::string, double> seen;
  for (int i = 0; i < plan.size(); ++i) {
    const auto text = plan.steps[static_cast<std::size_t>(i)].to_string();
    const double cap = plan.robot_capability[static_cast<std::size_t>(i)];
    auto [it, inserted] = seen.emplace(text, cap);
    if (!inserted && it->second != cap) {
      throw ValidationError("capabilities." + std::to_string(i),
                            "repeated primitive with a different capability");
    }
  }
  for (const auto& [kind, secs] : human_stationary) {
    if (!(secs > 0.0)) {
      throw ValidationError("durations.human." + std::string(world::to_string(kind)),
                            "stationary cost must be positive");
    }
  }
}

TaskScenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

TaskScenario resolve_scenario(const std::string& name_or_path) {
  for (const auto& s : builtin_scenarios()) {
    if (s.name == name_or_path) return s;
  }
  std::ifstream probe(name_or_path);
  if (!probe) throw ConfigError("unknown scenario '" + name_or_path + "'");
  return load_scenario_file(name_or_path);
}

}  // namespace micobot::task
