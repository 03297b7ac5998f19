#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace micobot::world {

/// Physical skill types available to both agents.
enum class PrimitiveKind {
  PickPlace,      // pickplace(object, destination)
  PickOpenPlace,  // pick_open_place(tool, object, destination)
  PickPourPlace,  // pick_pour_place(source, container, destination)
  PutOn,          // put_on(part, target, tool)
  Switch,         // switch(bit, tool)
  Fold,           // fold(object)
  Cover,          // cover(lid, container)
  Wrap,           // wrap(wrapping, object)
  CutPut,         // cut_put(material, tool, target)
};

inline constexpr std::array<PrimitiveKind, 9> kAllPrimitiveKinds = {
    PrimitiveKind::PickPlace, PrimitiveKind::PickOpenPlace, PrimitiveKind::PickPourPlace,
    PrimitiveKind::PutOn,     PrimitiveKind::Switch,        PrimitiveKind::Fold,
    PrimitiveKind::Cover,     PrimitiveKind::Wrap,          PrimitiveKind::CutPut,
};

std::string_view to_string(PrimitiveKind kind);
std::optional<PrimitiveKind> parse_kind(std::string_view name);
int arity(PrimitiveKind kind);

/// A skill-parameter pair such as pickplace(bowl, coffee_table).
struct PhysicalPrimitive {
  PrimitiveKind kind = PrimitiveKind::PickPlace;
  std::vector<std::string> params;

  /// Canonical form "kind(a, b, c)".
  std::string to_string() const;

  /// Accepts the canonical form with arbitrary whitespace. Throws ParseError.
  static PhysicalPrimitive parse(std::string_view text);

  /// The object whose location determines where the work happens.
  const std::string& primary_object() const;

  bool operator==(const PhysicalPrimitive&) const = default;
};

/// Builds a primitive and checks arity. Throws ValidationError.
PhysicalPrimitive make_primitive(PrimitiveKind kind, std::vector<std::string> params);

}  // namespace micobot::world
