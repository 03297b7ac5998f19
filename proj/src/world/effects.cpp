// Symbolic forward model: one precondition list and one effect per kind.

#include <functional>

#include "micobot/common.hpp"
#include "micobot/world/world_state.hpp"

namespace micobot::world {

namespace {

using Params = std::vector<std::string>;

struct Gate {
  const char* description;
  std::function<bool(const SymbolicState&, const Params&)> holds;
};

struct EffectRule {
  PrimitiveKind kind;
  // Param roles: 'o' object, 'p' place (furniture or object).
  const char* roles;
  std::vector<Gate> gates;
  std::function<void(SymbolicState&, const Params&)> apply;
};

std::optional<std::string> place_furniture(const SymbolicState& s, const std::string& place) {
  return s.furniture_of(place);
}

bool colocated(const SymbolicState& s, const std::string& a, const std::string& b) {
  const auto fa = s.furniture_of(a);
  const auto fb = s.furniture_of(b);
  return fa && fb && *fa == *fb;
}

bool not_held(const SymbolicState& s, const std::string& obj) { return !s.holder_of(obj); }

const std::vector<EffectRule>& rules() {
  static const std::vector<EffectRule> kRules = {
      {PrimitiveKind::PickPlace,
       "op",
       {
           {"object is not held by an agent", [](auto& s, auto& p) { return not_held(s, p[0]); }},
           {"destination is not the object itself or inside it",
            [](auto& s, auto& p) { return p[0] != p[1] && !s.is_within(p[1], p[0]); }},
       },
       [](SymbolicState& s, const Params& p) { s.set_location(p[0], p[1]); }},

      {PrimitiveKind::PickOpenPlace,
       "oop",
       {
           {"object is not held by an agent", [](auto& s, auto& p) { return not_held(s, p[1]); }},
           {"object is not already open", [](auto& s, auto& p) { return !s.has_flag(p[1], "open"); }},
           {"tool is at the destination",
            [](auto& s, auto& p) {
              const auto dest = place_furniture(s, p[2]);
              const auto tool = s.furniture_of(p[0]);
              return dest && tool && *dest == *tool;
            }},
           {"destination is not the object itself or inside it",
            [](auto& s, auto& p) { return p[1] != p[2] && !s.is_within(p[2], p[1]); }},
       },
       [](SymbolicState& s, const Params& p) {
         s.add_flag(p[1], "open");
         s.set_location(p[1], p[2]);
       }},

      {PrimitiveKind::PickPourPlace,
       "oop",
       {
           {"source is open", [](auto& s, auto& p) { return s.has_flag(p[0], "open"); }},
           {"source has not been poured already",
            [](auto& s, auto& p) {
              for (const auto& f : s.flags(p[0])) {
                if (f.rfind("poured-into:", 0) == 0) return false;
              }
              return true;
            }},
           {"container is at the destination",
            [](auto& s, auto& p) {
              const auto dest = place_furniture(s, p[2]);
              const auto cont = s.furniture_of(p[1]);
              return dest && cont && *dest == *cont;
            }},
           {"source is not held by an agent", [](auto& s, auto& p) { return not_held(s, p[0]); }},
       },
       [](SymbolicState& s, const Params& p) {
         s.add_flag(p[0], "poured-into:" + p[1]);
         s.set_location(p[0], p[2]);
       }},

      {PrimitiveKind::PutOn,
       "ooo",
       {
           {"part is next to the target", [](auto& s, auto& p) { return colocated(s, p[0], p[1]); }},
           {"tool is next to the target", [](auto& s, auto& p) { return colocated(s, p[2], p[1]); }},
           {"part is not already assembled on the target",
            [](auto& s, auto& p) { return !s.has_flag(p[0], "assembled-on:" + p[1]); }},
       },
       [](SymbolicState& s, const Params& p) {
         s.clear_flag_family(p[0], "assembled-on");
         s.add_flag(p[0], "assembled-on:" + p[1]);
         s.set_location(p[0], p[1]);
       }},

      {PrimitiveKind::Switch,
       "oo",
       {
           {"bit is next to the tool", [](auto& s, auto& p) { return colocated(s, p[0], p[1]); }},
           {"tool does not already carry the bit",
            [](auto& s, auto& p) { return !s.has_flag(p[1], "bit:" + p[0]); }},
       },
       [](SymbolicState& s, const Params& p) {
         s.clear_flag_family(p[1], "bit");
         s.add_flag(p[1], "bit:" + p[0]);
         s.set_location(p[0], p[1]);
       }},

      {PrimitiveKind::Fold,
       "o",
       {
           {"object is not already folded", [](auto& s, auto& p) { return !s.has_flag(p[0], "folded"); }},
       },
       [](SymbolicState& s, const Params& p) { s.add_flag(p[0], "folded"); }},

      {PrimitiveKind::Cover,
       "oo",
       {
           {"lid is next to the container", [](auto& s, auto& p) { return colocated(s, p[0], p[1]); }},
           {"container is not already covered",
            [](auto& s, auto& p) { return !s.has_flag(p[1], "covered"); }},
           {"lid is not the container", [](auto&, auto& p) { return p[0] != p[1]; }},
       },
       [](SymbolicState& s, const Params& p) {
         s.set_location(p[0], p[1]);
         s.add_flag(p[1], "covered");
       }},

      {PrimitiveKind::Wrap,
       "oo",
       {
           {"wrapping is next to the object", [](auto& s, auto& p) { return colocated(s, p[0], p[1]); }},
           {"object is not already wrapped",
            [](auto& s, auto& p) { return !s.has_flag(p[1], "wrapped"); }},
       },
       [](SymbolicState& s, const Params& p) {
         s.set_location(p[0], p[1]);
         s.add_flag(p[1], "wrapped");
       }},

      {PrimitiveKind::CutPut,
       "ooo",
       {
           {"material is next to the target", [](auto& s, auto& p) { return colocated(s, p[0], p[2]); }},
           {"tool is next to the target", [](auto& s, auto& p) { return colocated(s, p[1], p[2]); }},
           {"material is not already attached to the target",
            [](auto& s, auto& p) { return !s.has_flag(p[0], "assembled-on:" + p[2]); }},
       },
       [](SymbolicState& s, const Params& p) {
         s.clear_flag_family(p[0], "assembled-on");
         s.add_flag(p[0], "assembled-on:" + p[2]);
         s.set_location(p[0], p[2]);
       }},
  };
  return kRules;
}

const EffectRule& rule_for(PrimitiveKind kind) {
  for (const auto& r : rules()) {
    if (r.kind == kind) return r;
  }
  throw Error("no effect rule for kind");
}

void resolve_params(const SymbolicState& state, const PhysicalPrimitive& prim,
                    const EffectRule& rule) {
  const std::string roles = rule.roles;
  if (prim.params.size() != roles.size()) {
    throw PreconditionViolated(prim.to_string() + ": wrong number of parameters");
  }
  for (std::size_t i = 0; i < roles.size(); ++i) {
    const auto& name = prim.params[i];
    const bool ok = roles[i] == 'o' ? state.is_object(name)
                                    : (state.is_object(name) || state.is_furniture(name));
    if (!ok) {
      throw UnknownEntity(prim.to_string() + ": '" + name + "' is not a known " +
                          (roles[i] == 'o' ? "object" : "object or furniture"));
    }
  }
}

}  // namespace

std::optional<std::string> violated_precondition(const SymbolicState& state,
                                                 const PhysicalPrimitive& prim) {
  const auto& rule = rule_for(prim.kind);
  resolve_params(state, prim, rule);
  for (const auto& gate : rule.gates) {
    if (!gate.holds(state, prim.params)) return std::string(gate.description);
  }
  return std::nullopt;
}

SymbolicState apply_effect(const SymbolicState& state, const PhysicalPrimitive& prim) {
  if (auto why = violated_precondition(state, prim)) {
    throw PreconditionViolated(prim.to_string() + ": requires " + *why);
  }
  SymbolicState next = state;
  rule_for(prim.kind).apply(next, prim.params);
  return next;
}

}  // namespace micobot::world
