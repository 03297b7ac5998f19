#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace micobot {

/// Which collaborator a step or an utterance belongs to.
enum class Agent : char { Human = 'H', Robot = 'R' };

inline char to_char(Agent a) { return static_cast<char>(a); }
inline std::optional<Agent> agent_from_char(char c) {
  if (c == 'H' || c == 'h') return Agent::Human;
  if (c == 'R' || c == 'r') return Agent::Robot;
  return std::nullopt;
}
inline Agent other(Agent a) { return a == Agent::Human ? Agent::Robot : Agent::Human; }

/// Half-open range of low-level plan step indices.
struct StepRange {
  int begin = 0;
  int end = 0;

  int size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return size() == 0; }
  bool contains(int i) const { return i >= begin && i < end; }
  bool overlaps(const StepRange& o) const { return begin < o.end && o.begin < end; }
  StepRange intersect(const StepRange& o) const {
    StepRange r{std::max(begin, o.begin), std::min(end, o.end)};
    if (r.end < r.begin) r.end = r.begin;
    return r;
  }
  auto operator<=>(const StepRange&) const = default;

  /// "b-e" with e exclusive.
  std::string to_string() const { return std::to_string(begin) + "-" + std::to_string(end); }
  static std::optional<StepRange> parse(std::string_view s);
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownEntity : public Error {
 public:
  using Error::Error;
};

class PreconditionViolated : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string locus, const std::string& what)
      : Error(locus + ": " + what), locus_(std::move(locus)) {}
  const std::string& locus() const { return locus_; }

 private:
  std::string locus_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// 64-bit FNV-1a; stable across platforms, used for state digests and audit hashes.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v);

}  // namespace micobot
