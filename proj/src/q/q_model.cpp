#include "micobot/q/q_model.hpp"

#include <fstream>
#include <sstream>

#include "micobot/text.hpp"

namespace micobot::q {

namespace {

constexpr const char* kTableHeader = "# micobot robot-q table";
constexpr int kTableVersion = 1;

std::vector<double> success_draws(int n, Rng& rng, Sampling sampling) {
  std::vector<double> draws(static_cast<std::size_t>(n));
  if (sampling == Sampling::Independent) {
    for (auto& d : draws) d = rng.uniform();
    return draws;
  }
  for (int i = 0; i < n; ++i) {
    draws[static_cast<std::size_t>(i)] = (i + rng.uniform()) / n;
  }
  for (int i = n - 1; i > 0; --i) {
    const int j = rng.uniform_int(0, i);
    std::swap(draws[static_cast<std::size_t>(i)], draws[static_cast<std::size_t>(j)]);
  }
  return draws;
}

}  // namespace

std::vector<SampleRecord> collect_samples(const world::AgentProfile& profile,
                                          const SymbolicState& state,
                                          const PhysicalPrimitive& primitive, int n, Rng& rng,
                                          Sampling sampling, int timeout) {
  std::vector<SampleRecord> out;
  if (n <= 0) return out;
  out.reserve(static_cast<std::size_t>(n));
  const auto key = state.key();
  const auto draws = success_draws(n, rng, sampling);
  for (double draw : draws) {
    const auto outcome = world::rollout_with_draw(state, primitive, profile, draw, rng, timeout);
    out.push_back(SampleRecord{key, primitive, outcome.succeeded ? outcome.duration : timeout});
  }
  return out;
}

std::vector<SampleRecord> collect_samples(const task::TaskScenario& scenario,
                                          const SymbolicState& state,
                                          const PhysicalPrimitive& primitive, int n, Rng& rng,
                                          Sampling sampling, int timeout) {
  return collect_samples(scenario.robot, state, primitive, n, rng, sampling, timeout);
}

void RobotQTable::add(const SampleRecord& record) {
  if (record.elapsed < 1 || record.elapsed > timeout_) {
    throw ValidationError("sample." + record.primitive.to_string(),
                          "elapsed " + std::to_string(record.elapsed) + " outside [1, L]");
  }
  auto& e = entries_[{record.state_key, record.primitive.to_string()}];
  e.sum -= record.elapsed;
  e.count += 1;
}

void RobotQTable::add(const std::vector<SampleRecord>& records) {
  for (const auto& r : records) add(r);
}

bool RobotQTable::contains(const std::string& state_key, const PhysicalPrimitive& primitive) const {
  auto it = entries_.find({state_key, primitive.to_string()});
  return it != entries_.end() && it->second.count >= min_count_;
}

int RobotQTable::count(const std::string& state_key, const PhysicalPrimitive& primitive) const {
  auto it = entries_.find({state_key, primitive.to_string()});
  return it == entries_.end() ? 0 : it->second.count;
}

double RobotQTable::query(const std::string& state_key, const PhysicalPrimitive& primitive) const {
  auto it = entries_.find({state_key, primitive.to_string()});
  if (it == entries_.end() || it->second.count < min_count_) {
    throw MissingEntry("no robot Q entry for " + primitive.to_string() + " at " + state_key);
  }
  return it->second.sum / it->second.count;
}

std::string RobotQTable::serialize() const {
  std::ostringstream os;
  os.precision(17);
  os << kTableHeader << "\n";
  os << "version " << kTableVersion << "\n";
  os << "timeout " << timeout_ << "\n";
  os << "min_count " << min_count_ << "\n";
  for (const auto& [key, e] : entries_) {
    os << key.first << '\t' << key.second << '\t' << (e.sum / e.count) << '\t' << e.count << "\n";
  }
  return os.str();
}

RobotQTable RobotQTable::parse(const std::string& document) {
  std::istringstream in(document);
  std::string line;
  int n = 0;
  int version = -1, timeout = -1, min_count = 1;
  RobotQTable table;
  bool header_done = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    if (!header_done) {
      auto parts = text::split(line, ' ');
      if (parts.size() == 2 && parts[0] == "version") {
        version = static_cast<int>(text::parse_int(parts[1], n));
        continue;
      }
      if (parts.size() == 2 && parts[0] == "timeout") {
        timeout = static_cast<int>(text::parse_int(parts[1], n));
        continue;
      }
      if (parts.size() == 2 && parts[0] == "min_count") {
        min_count = static_cast<int>(text::parse_int(parts[1], n));
        continue;
      }
      if (version != kTableVersion) throw ParseError("unsupported q-table version", n);
      if (timeout < 1) throw ParseError("missing timeout", n);
      table = RobotQTable(timeout, min_count);
      header_done = true;
    }
    const auto cols = text::split(line, '\t');
    if (cols.size() != 4) throw ParseError("expected 4 tab-separated columns", n);
    const auto prim = world::PhysicalPrimitive::parse(cols[1]);
    const double mean = text::parse_double(cols[2], n);
    const int count = static_cast<int>(text::parse_int(cols[3], n));
    if (count < 1) throw ParseError("count must be positive", n);
    if (mean > -1.0 || mean < -table.timeout_) throw ParseError("mean outside [-L, -1]", n);
    auto& e = table.entries_[{cols[0], prim.to_string()}];
    e.sum = mean * count;
    e.count = count;
  }
  if (!header_done) {
    if (version != kTableVersion) throw ParseError("unsupported q-table version", n);
    if (timeout < 1) throw ParseError("missing timeout", n);
    table = RobotQTable(timeout, min_count);
  }
  return table;
}

void RobotQTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write q-table '" + path + "'");
  out << serialize();
}

RobotQTable RobotQTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read q-table '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

double robot_q(const RobotQTable& table, const SymbolicState& state, const PhysicalPrimitive& primitive) {
  return table.query(state.key(), primitive);
}

double robot_q_or_timeout(const RobotQTable& table, const SymbolicState& state,
                          const PhysicalPrimitive& primitive) {
  const auto key = state.key();
  if (!table.contains(key, primitive)) return -static_cast<double>(table.timeout());
  return table.query(key, primitive);
}

RobotQTable build_robot_table(const task::TaskScenario& scenario, int samples_per_step,
                              std::uint64_t seed, Sampling sampling) {
  RobotQTable table;
  auto state = scenario.initial;
  for (int i = 0; i < scenario.plan.size(); ++i) {
    const auto& prim = scenario.plan.steps[static_cast<std::size_t>(i)];
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(i));
    table.add(collect_samples(scenario, state, prim, samples_per_step, rng, sampling));
    state = world::apply_effect(state, prim);
  }
  return table;
}

HumanCostModel HumanCostModel::for_scenario(const task::TaskScenario& scenario) {
  HumanCostModel m;
  for (auto kind : world::kAllPrimitiveKinds) {
    m.stationary_seconds[kind] = task::default_human_stationary_seconds(kind);
  }
  for (const auto& [kind, secs] : scenario.human_stationary) m.stationary_seconds[kind] = secs;
  return m;
}

double HumanCostModel::stationary(const PhysicalPrimitive& prim) const {
  if (auto it = stationary_overrides.find(prim.to_string()); it != stationary_overrides.end()) {
    return it->second;
  }
  if (auto it = stationary_seconds.find(prim.kind); it != stationary_seconds.end()) return it->second;
  return task::default_human_stationary_seconds(prim.kind);
}

double human_seconds(const HumanCostModel& model, const world::GridWorld& world,
                     const SymbolicState& state, const PhysicalPrimitive& primitive,
                     const std::string& human_agent) {
  const auto& obj = primitive.primary_object();
  if (!state.is_object(obj)) throw UnknownEntity("unknown object '" + obj + "'");
  (void)state.agent_pose(human_agent);
  double distance = 0.0;
  if (const auto site = state.furniture_of(obj)) {
    distance = world::travel_distance(world, state, human_agent, *site);
  }
  return model.stationary(primitive) + distance / model.walking_speed();
}

double human_q(const HumanCostModel& model, const world::GridWorld& world, const SymbolicState& state,
               const PhysicalPrimitive& primitive, const std::string& human_agent) {
  return -human_seconds(model, world, state, primitive, human_agent) / model.seconds_per_timestep;
}

ScenarioCostModel::ScenarioCostModel(const task::TaskScenario& scenario,
                                     std::shared_ptr<const RobotQTable> table)
    : scenario_(scenario), table_(std::move(table)), human_(HumanCostModel::for_scenario(scenario)) {}

double ScenarioCostModel::robot_cost(const SymbolicState& state, int step) const {
  return robot_q_or_timeout(*table_, state, scenario_.plan.steps.at(static_cast<std::size_t>(step)));
}

double ScenarioCostModel::human_cost(const SymbolicState& state, int step) const {
  return human_q(human_, scenario_.world, state, scenario_.plan.steps.at(static_cast<std::size_t>(step)),
                 scenario_.human_agent);
}

}  // namespace micobot::q
