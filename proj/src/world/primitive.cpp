#include "micobot/world/primitive.hpp"

#include "micobot/common.hpp"
#include "micobot/text.hpp"

namespace micobot::world {

namespace {

struct KindInfo {
  PrimitiveKind kind;
  std::string_view name;
  int arity;
  int primary;  // index of the manipulated object in params
};

constexpr KindInfo kKinds[] = {
    {PrimitiveKind::PickPlace, "pickplace", 2, 0},
    {PrimitiveKind::PickOpenPlace, "pick_open_place", 3, 1},
    {PrimitiveKind::PickPourPlace, "pick_pour_place", 3, 0},
    {PrimitiveKind::PutOn, "put_on", 3, 0},
    {PrimitiveKind::Switch, "switch", 2, 0},
    {PrimitiveKind::Fold, "fold", 1, 0},
    {PrimitiveKind::Cover, "cover", 2, 0},
    {PrimitiveKind::Wrap, "wrap", 2, 0},
    {PrimitiveKind::CutPut, "cut_put", 3, 0},
};

const KindInfo& info(PrimitiveKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw Error("unknown primitive kind");
}

bool valid_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(PrimitiveKind kind) { return info(kind).name; }

std::optional<PrimitiveKind> parse_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

int arity(PrimitiveKind kind) { return info(kind).arity; }

std::string PhysicalPrimitive::to_string() const {
  std::string out(world::to_string(kind));
  out += '(';
  out += text::join(params, ", ");
  out += ')';
  return out;
}

PhysicalPrimitive PhysicalPrimitive::parse(std::string_view raw) {
  const auto s = text::trim(raw);
  const auto open = s.find('(');
  if (open == std::string_view::npos || s.back() != ')') {
    throw ParseError("malformed primitive '" + std::string(s) + "'");
  }
  const auto name = text::trim(s.substr(0, open));
  const auto kind = parse_kind(name);
  if (!kind) throw ParseError("unknown primitive kind '" + std::string(name) + "'");
  const auto inner = s.substr(open + 1, s.size() - open - 2);
  std::vector<std::string> params;
  if (!text::trim(inner).empty()) {
    for (const auto& p : text::split(inner, ',')) {
      const auto t = text::trim(p);
      if (!valid_identifier(t)) {
        throw ParseError("bad parameter '" + std::string(t) + "' in '" + std::string(s) + "'");
      }
      params.emplace_back(t);
    }
  }
  if (static_cast<int>(params.size()) != arity(*kind)) {
    throw ParseError(std::string(name) + " takes " + std::to_string(arity(*kind)) +
                     " parameters, got " + std::to_string(params.size()));
  }
  return PhysicalPrimitive{*kind, std::move(params)};
}

const std::string& PhysicalPrimitive::primary_object() const {
  return params.at(static_cast<std::size_t>(info(kind).primary));
}

PhysicalPrimitive make_primitive(PrimitiveKind kind, std::vector<std::string> params) {
  if (static_cast<int>(params.size()) != arity(kind)) {
    throw ValidationError(std::string(to_string(kind)),
                          "expected " + std::to_string(arity(kind)) + " parameters");
  }
  for (const auto& p : params) {
    if (!valid_identifier(p)) throw ValidationError(std::string(to_string(kind)), "bad parameter '" + p + "'");
  }
  return PhysicalPrimitive{kind, std::move(params)};
}

}  // namespace micobot::world
