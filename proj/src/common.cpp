#include "micobot/common.hpp"

#include <charconv>
#include <cmath>

#include "micobot/rng.hpp"

namespace micobot {

std::optional<StepRange> StepRange::parse(std::string_view s) {
  const auto dash = s.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  StepRange r;
  auto lhs = s.substr(0, dash);
  auto rhs = s.substr(dash + 1);
  auto [p1, e1] = std::from_chars(lhs.data(), lhs.data() + lhs.size(), r.begin);
  auto [p2, e2] = std::from_chars(rhs.data(), rhs.data() + rhs.size(), r.end);
  if (e1 != std::errc{} || e2 != std::errc{} || p1 != lhs.data() + lhs.size() ||
      p2 != rhs.data() + rhs.size() || r.begin < 0 || r.end < r.begin) {
    return std::nullopt;
  }
  return r;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace micobot
