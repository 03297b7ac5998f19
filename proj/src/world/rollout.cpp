#include "micobot/world/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "micobot/common.hpp"
#include "micobot/text.hpp"

namespace micobot::world {

int DurationDist::sample(Rng& rng, int timeout) const {
  double v = a;
  switch (shape) {
    case Shape::Constant:
      break;
    case Shape::Uniform:
      v = rng.uniform_int(static_cast<int>(std::lround(a)), static_cast<int>(std::lround(b)));
      break;
    case Shape::Normal:
      v = a + b * rng.normal();
      break;
  }
  const long r = std::lround(v);
  return static_cast<int>(std::clamp<long>(r, 1, timeout));
}

std::string DurationDist::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (shape) {
    case Shape::Constant:
      os << a;
      break;
    case Shape::Uniform:
      os << "uniform(" << a << "," << b << ")";
      break;
    case Shape::Normal:
      os << "normal(" << a << "," << b << ")";
      break;
  }
  return os.str();
}

DurationDist DurationDist::parse(const std::string& raw) {
  const auto s = std::string(text::trim(raw));
  auto two_args = [&](std::string_view prefix) {
    const auto inner = std::string_view(s).substr(prefix.size(), s.size() - prefix.size() - 1);
    const auto parts = text::split(inner, ',');
    if (parts.size() != 2 || s.back() != ')') throw ParseError("malformed duration '" + s + "'");
    return std::pair{text::parse_double(parts[0]), text::parse_double(parts[1])};
  };
  if (text::starts_with(s, "uniform(")) {
    auto [lo, hi] = two_args("uniform(");
    if (hi < lo) throw ParseError("uniform duration with high < low");
    return uniform(lo, hi);
  }
  if (text::starts_with(s, "normal(")) {
    auto [m, sd] = two_args("normal(");
    if (sd < 0) throw ParseError("normal duration with negative sd");
    return normal(m, sd);
  }
  return constant(text::parse_double(s));
}

const SkillProfile& AgentProfile::lookup(const PhysicalPrimitive& prim) const {
  if (auto it = by_primitive.find(prim.to_string()); it != by_primitive.end()) return it->second;
  if (auto it = by_kind.find(prim.kind); it != by_kind.end()) return it->second;
  return fallback;
}

PrimitiveOutcome rollout_with_draw(const SymbolicState& state, const PhysicalPrimitive& prim,
                                   const AgentProfile& profile, double success_draw, Rng& rng,
                                   int timeout) {
  if (auto why = violated_precondition(state, prim)) {
    throw PreconditionViolated(prim.to_string() + ": requires " + *why);
  }
  const auto& skill = profile.lookup(prim);
  PrimitiveOutcome out;
  out.succeeded = success_draw < skill.p_success;
  if (out.succeeded) {
    out.duration = skill.duration.sample(rng, timeout);
  } else {
    out.duration = timeout;
    out.terminal_failure = skill.p_irrecoverable > 0.0 && rng.bernoulli(skill.p_irrecoverable);
  }
  return out;
}

PrimitiveOutcome rollout_primitive(const SymbolicState& state, const PhysicalPrimitive& prim,
                                   const AgentProfile& profile, Rng& rng, int timeout) {
  const double draw = rng.uniform();
  return rollout_with_draw(state, prim, profile, draw, rng, timeout);
}

}  // namespace micobot::world
