#include "micobot/world/world_state.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "micobot/common.hpp"

namespace micobot::world {

GridWorld::GridWorld(int width, int height, std::vector<Furniture> furniture,
                     double meters_per_cell, std::uint64_t seed)
    : width_(width),
      height_(height),
      furniture_(std::move(furniture)),
      meters_per_cell_(meters_per_cell),
      seed_(seed) {
  if (width_ <= 0 || height_ <= 0) throw ValidationError("world", "grid size must be positive");
  if (!(meters_per_cell_ > 0.0)) throw ValidationError("world", "meters_per_cell must be positive");
  walkable_.assign(static_cast<std::size_t>(width_ * height_), true);
  std::set<std::string> names;
  for (const auto& f : furniture_) {
    if (!names.insert(f.name).second) {
      throw ValidationError("world.furniture." + f.name, "duplicate furniture name");
    }
    if (f.cells.empty()) throw ValidationError("world.furniture." + f.name, "empty footprint");
    for (const auto& c : f.cells) {
      if (!in_bounds(c)) {
        throw ValidationError("world.furniture." + f.name, "cell " + std::to_string(c.x) + "," +
                                                               std::to_string(c.y) +
                                                               " out of bounds");
      }
      auto idx = static_cast<std::size_t>(c.y * width_ + c.x);
      if (!walkable_[idx]) {
        throw ValidationError("world.furniture." + f.name, "footprint overlaps other furniture");
      }
      walkable_[idx] = false;
    }
  }
}

bool GridWorld::walkable(Cell c) const {
  return in_bounds(c) && walkable_[static_cast<std::size_t>(c.y * width_ + c.x)];
}

bool GridWorld::has_furniture(const std::string& name) const {
  for (const auto& f : furniture_) {
    if (f.name == name) return true;
  }
  return false;
}

const Furniture& GridWorld::find_furniture(const std::string& name) const {
  for (const auto& f : furniture_) {
    if (f.name == name) return f;
  }
  throw UnknownEntity("unknown furniture '" + name + "'");
}

SymbolicState::SymbolicState(const GridWorld& world) {
  for (const auto& f : world.furniture()) furniture_.insert(f.name);
}

void SymbolicState::add_object(const std::string& name, const std::string& location,
                               std::set<std::string> flags) {
  if (is_furniture(name) || is_agent(name) || is_object(name)) {
    throw ValidationError("objects." + name, "name already in use");
  }
  locations_[name] = location;
  flags_[name] = std::move(flags);
}

void SymbolicState::set_agent_pose(const std::string& agent, Cell pose) {
  if (is_furniture(agent) || is_object(agent)) {
    throw ValidationError("agents." + agent, "name already in use");
  }
  poses_[agent] = pose;
}

const std::string& SymbolicState::location(const std::string& object) const {
  auto it = locations_.find(object);
  if (it == locations_.end()) throw UnknownEntity("unknown object '" + object + "'");
  return it->second;
}

const std::set<std::string>& SymbolicState::flags(const std::string& object) const {
  auto it = flags_.find(object);
  if (it == flags_.end()) throw UnknownEntity("unknown object '" + object + "'");
  return it->second;
}

bool SymbolicState::has_flag(const std::string& object, const std::string& flag) const {
  return flags(object).count(flag) > 0;
}

Cell SymbolicState::agent_pose(const std::string& agent) const {
  auto it = poses_.find(agent);
  if (it == poses_.end()) throw UnknownEntity("unknown agent '" + agent + "'");
  return it->second;
}

std::optional<std::string> SymbolicState::furniture_of(const std::string& object) const {
  if (is_furniture(object)) return object;
  std::string cur = object;
  for (std::size_t guard = 0; guard <= locations_.size(); ++guard) {
    const auto& loc = location(cur);
    if (is_furniture(loc)) return loc;
    if (is_agent(loc)) return std::nullopt;
    cur = loc;
  }
  throw ValidationError("objects." + object, "containment cycle");
}

std::optional<std::string> SymbolicState::holder_of(const std::string& object) const {
  std::string cur = object;
  for (std::size_t guard = 0; guard <= locations_.size(); ++guard) {
    if (!is_object(cur)) return std::nullopt;
    const auto& loc = location(cur);
    if (is_agent(loc)) return loc;
    if (is_furniture(loc)) return std::nullopt;
    cur = loc;
  }
  return std::nullopt;
}

bool SymbolicState::is_within(const std::string& inner, const std::string& outer) const {
  std::string cur = inner;
  for (std::size_t guard = 0; guard <= locations_.size(); ++guard) {
    if (!is_object(cur)) return false;
    const auto& loc = location(cur);
    if (loc == outer) return true;
    cur = loc;
  }
  return false;
}

void SymbolicState::set_location(const std::string& object, const std::string& location) {
  if (!is_object(object)) throw UnknownEntity("unknown object '" + object + "'");
  locations_[object] = location;
}

void SymbolicState::add_flag(const std::string& object, const std::string& flag) {
  if (!is_object(object)) throw UnknownEntity("unknown object '" + object + "'");
  auto& f = flags_[object];
  if (flag == "open") f.erase("closed");
  if (flag == "closed") f.erase("open");
  f.insert(flag);
}

void SymbolicState::remove_flag(const std::string& object, const std::string& flag) {
  if (!is_object(object)) throw UnknownEntity("unknown object '" + object + "'");
  flags_[object].erase(flag);
}

void SymbolicState::clear_flag_family(const std::string& object, const std::string& family) {
  if (!is_object(object)) throw UnknownEntity("unknown object '" + object + "'");
  auto& f = flags_[object];
  const std::string prefix = family + ":";
  for (auto it = f.begin(); it != f.end();) {
    it = it->rfind(prefix, 0) == 0 ? f.erase(it) : std::next(it);
  }
}

std::string SymbolicState::canonical() const {
  std::ostringstream os;
  for (const auto& [obj, loc] : locations_) {
    os << obj << '@' << loc;
    const auto& f = flags_.at(obj);
    if (!f.empty()) {
      os << '[';
      bool first = true;
      for (const auto& flag : f) {
        if (!first) os << ',';
        os << flag;
        first = false;
      }
      os << ']';
    }
    os << ';';
  }
  return os.str();
}

std::string SymbolicState::key() const { return hex64(fnv1a64(canonical())); }

void SymbolicState::check_invariants() const {
  for (const auto& [obj, loc] : locations_) {
    if (!knows(loc)) throw ValidationError("objects." + obj, "location '" + loc + "' is unknown");
    if (loc == obj) throw ValidationError("objects." + obj, "object located in itself");
    const auto& f = flags_.at(obj);
    if (f.count("open") && f.count("closed")) {
      throw ValidationError("objects." + obj, "flags open and closed both set");
    }
    (void)furniture_of(obj);  // throws on cycles
  }
}

double travel_distance(const GridWorld& world, const SymbolicState& state, const std::string& agent,
                       const std::string& furniture) {
  const Cell pose = state.agent_pose(agent);
  const auto& f = world.find_furniture(furniture);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : f.cells) {
    const double dx = c.x - pose.x;
    const double dy = c.y - pose.y;
    best = std::min(best, std::hypot(dx, dy));
  }
  return best * world.meters_per_cell();
}

}  // namespace micobot::world
