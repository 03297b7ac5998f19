#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "micobot/world/primitive.hpp"

namespace micobot::world {

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

struct Furniture {
  std::string name;
  std::vector<Cell> cells;
  bool operator==(const Furniture&) const = default;
};

/// Static apartment layout on a grid. Furniture occupies cells; every other
/// cell is walkable.
class GridWorld {
 public:
  GridWorld() = default;
  /// Throws ValidationError on overlapping or out-of-bounds footprints and
  /// duplicate names.
  GridWorld(int width, int height, std::vector<Furniture> furniture, double meters_per_cell = 1.0,
            std::uint64_t seed = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  double meters_per_cell() const { return meters_per_cell_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Furniture>& furniture() const { return furniture_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool walkable(Cell c) const;
  bool has_furniture(const std::string& name) const;
  /// Throws UnknownEntity.
  const Furniture& find_furniture(const std::string& name) const;

  bool operator==(const GridWorld&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Furniture> furniture_;
  std::vector<bool> walkable_;
  double meters_per_cell_ = 1.0;
  std::uint64_t seed_ = 0;
};

/// Symbolic world state: where each object is, its flags, and agent poses.
///
/// An object's location is a furniture name, another object (inside / on top
/// of it) or an agent name (held). Flags are plain strings; `open`/`closed`
/// are mutually exclusive, parameterized flags use the `family:value` form
/// (e.g. `assembled-on:car`, `bit:hex_drill_bit`).
class SymbolicState {
 public:
  SymbolicState() = default;
  explicit SymbolicState(const GridWorld& world);

  void add_furniture(const std::string& name) { furniture_.insert(name); }
  /// Throws ValidationError if `name` clashes with furniture or an agent.
  void add_object(const std::string& name, const std::string& location,
                  std::set<std::string> flags = {});
  void set_agent_pose(const std::string& agent, Cell pose);

  bool is_furniture(const std::string& name) const { return furniture_.count(name) > 0; }
  bool is_object(const std::string& name) const { return locations_.count(name) > 0; }
  bool is_agent(const std::string& name) const { return poses_.count(name) > 0; }
  bool knows(const std::string& name) const {
    return is_furniture(name) || is_object(name) || is_agent(name);
  }

  /// Throws UnknownEntity.
  const std::string& location(const std::string& object) const;
  const std::set<std::string>& flags(const std::string& object) const;
  bool has_flag(const std::string& object, const std::string& flag) const;
  Cell agent_pose(const std::string& agent) const;

  /// Furniture the object ultimately rests on, following containment.
  /// nullopt when the chain ends at an agent (held).
  std::optional<std::string> furniture_of(const std::string& object) const;
  /// Agent currently holding the object (directly or via containment).
  std::optional<std::string> holder_of(const std::string& object) const;
  /// True if `inner` is (transitively) located in/on `outer`.
  bool is_within(const std::string& inner, const std::string& outer) const;

  void set_location(const std::string& object, const std::string& location);
  void add_flag(const std::string& object, const std::string& flag);
  void remove_flag(const std::string& object, const std::string& flag);
  /// Removes every flag "family:*".
  void clear_flag_family(const std::string& object, const std::string& family);

  const std::map<std::string, std::string>& locations() const { return locations_; }
  const std::map<std::string, std::set<std::string>>& all_flags() const { return flags_; }
  const std::map<std::string, Cell>& agent_poses() const { return poses_; }
  const std::set<std::string>& furniture_names() const { return furniture_; }

  /// Canonical text of object locations and flags (agent poses excluded).
  std::string canonical() const;
  /// 16-hex-digit digest of canonical(); the key robot Q entries are stored under.
  std::string key() const;

  /// Throws ValidationError if an invariant is broken.
  void check_invariants() const;

  bool operator==(const SymbolicState&) const = default;

 private:
  std::set<std::string> furniture_;
  std::map<std::string, std::string> locations_;
  std::map<std::string, std::set<std::string>> flags_;
  std::map<std::string, Cell> poses_;
};

/// Successor state under the primitive's declared effect. Throws
/// UnknownEntity or PreconditionViolated; `state` is not modified.
SymbolicState apply_effect(const SymbolicState& state, const PhysicalPrimitive& prim);

/// Error message when a precondition fails, nullopt otherwise. Throws
/// UnknownEntity for unresolvable params.
std::optional<std::string> violated_precondition(const SymbolicState& state,
                                                 const PhysicalPrimitive& prim);

/// Distance in meters from the agent to the nearest footprint cell of the
/// furniture. Throws UnknownEntity.
double travel_distance(const GridWorld& world, const SymbolicState& state, const std::string& agent,
                       const std::string& furniture);

}  // namespace micobot::world
