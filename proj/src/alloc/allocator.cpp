#include "micobot/alloc/allocator.hpp"

#include <cmath>
#include <cstdint>

#include "micobot/text.hpp"

namespace micobot::alloc {

Constraint Constraint::assign(StepRange r, Agent a, std::string origin) {
  return Constraint{Kind::Assign, r, a, 0, std::move(origin)};
}

Constraint Constraint::forbid(StepRange r, Agent a, std::string origin) {
  return Constraint{Kind::Forbid, r, a, 0, std::move(origin)};
}

Constraint Constraint::split(StepRange r, int boundary, std::string origin) {
  return Constraint{Kind::Split, r, Agent::Robot, boundary, std::move(origin)};
}

std::optional<Agent> Constraint::required_at(int step) const {
  if (!range.contains(step)) return std::nullopt;
  if (kind == Kind::Split) return step < boundary ? Agent::Robot : Agent::Human;
  return agent;
}

bool Constraint::allows(int step, Agent a) const {
  const auto req = required_at(step);
  if (!req) return true;
  return kind == Kind::Forbid ? *req != a : *req == a;
}

std::string_view to_string(Constraint::Kind kind) {
  switch (kind) {
    case Constraint::Kind::Assign: return "assign";
    case Constraint::Kind::Forbid: return "forbid";
    case Constraint::Kind::Split: return "split";
  }
  return "?";
}

std::string Constraint::to_string() const {
  std::string s = std::string(alloc::to_string(kind)) + " " + range.to_string() + " ";
  if (kind == Kind::Split) return s + std::to_string(boundary);
  return s + to_char(agent);
}

std::optional<Constraint> Constraint::parse(const std::string& text) {
  std::vector<std::string> parts;
  for (auto& p : text::split(text::trim(text), ' ')) {
    if (!p.empty()) parts.push_back(p);
  }
  if (parts.size() != 3) return std::nullopt;
  const auto range = StepRange::parse(parts[1]);
  if (!range || range->empty()) return std::nullopt;
  if (parts[0] == "split") {
    try {
      const auto k = static_cast<int>(text::parse_int(parts[2]));
      if (k < range->begin || k > range->end) return std::nullopt;
      return split(*range, k);
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  if (parts[2].size() != 1) return std::nullopt;
  const auto agent = agent_from_char(parts[2][0]);
  if (!agent || parts[2][0] != to_char(*agent)) return std::nullopt;
  if (parts[0] == "assign") return assign(*range, *agent);
  if (parts[0] == "forbid") return forbid(*range, *agent);
  return std::nullopt;
}

double AllocationProblem::p_at(int i) const {
  double p = p_help.size() == 1 ? p_help[0] : p_help.at(static_cast<std::size_t>(i));
  if (!(p >= kPHelpEpsilon)) p = kPHelpEpsilon;  // also maps NaN to epsilon
  return std::min(p, 1.0);
}

double AllocationProblem::term(int i, Agent a) const {
  const auto k = static_cast<std::size_t>(i);
  if (a == Agent::Robot) return q_robot[k];
  return (alpha / p_at(i)) * q_human[k];
}

bool AllocationProblem::hard_forbidden(int i, Agent a) const {
  return strict && a == Agent::Robot && !robot_infeasible.empty() &&
         robot_infeasible.at(static_cast<std::size_t>(i));
}

void AllocationProblem::validate() const {
  const auto n = q_robot.size();
  if (q_human.size() != n) throw ValidationError("q_human", "length differs from q_robot");
  if (p_help.empty() || (p_help.size() != 1 && p_help.size() != n)) {
    throw ValidationError("p_help", "needs one value or one per step");
  }
  if (!robot_infeasible.empty() && robot_infeasible.size() != n) {
    throw ValidationError("robot_infeasible", "length differs from q_robot");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha", "must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(q_robot[i] <= 0.0) || !std::isfinite(q_robot[i])) {
      throw ValidationError("q_robot[" + std::to_string(i) + "]", "cost must be finite and <= 0");
    }
    if (!(q_human[i] <= 0.0) || !std::isfinite(q_human[i])) {
      throw ValidationError("q_human[" + std::to_string(i) + "]", "cost must be finite and <= 0");
    }
  }
  for (std::size_t c = 0; c < constraints.size(); ++c) {
    const auto& con = constraints[c];
    const std::string locus = "constraints[" + std::to_string(c) + "]";
    if (con.range.empty()) throw ValidationError(locus, "empty range");
    if (con.range.begin < first_step || con.range.end > end_step()) {
      throw ValidationError(locus, "range " + con.range.to_string() + " outside remaining steps");
    }
    if (con.kind == Constraint::Kind::Split &&
        (con.boundary < con.range.begin || con.boundary > con.range.end)) {
      throw ValidationError(locus, "split boundary outside its range");
    }
  }
}

std::string Assignment::to_string() const {
  std::string s;
  for (auto a : agents) s.push_back(to_char(a));
  return s;
}

std::optional<Assignment> Assignment::parse(int first_step, const std::string& text) {
  Assignment a{first_step, {}};
  for (char c : text) {
    if (c != 'H' && c != 'R') return std::nullopt;
    a.agents.push_back(*agent_from_char(c));
  }
  return a;
}

double score(const AllocationProblem& problem, const Assignment& assignment) {
  if (assignment.size() != problem.size() || assignment.first_step != problem.first_step) {
    throw IncompleteAssignment("assignment covers " + std::to_string(assignment.size()) + " of " +
                               std::to_string(problem.size()) + " remaining steps");
  }
  double total = 0.0;
  for (int i = 0; i < problem.size(); ++i) {
    total += problem.term(i, assignment.agents[static_cast<std::size_t>(i)]);
  }
  return total;
}

bool satisfies(const AllocationProblem& problem, const Assignment& assignment) {
  for (int i = 0; i < problem.size(); ++i) {
    const Agent a = assignment.agents[static_cast<std::size_t>(i)];
    if (problem.hard_forbidden(i, a)) return false;
    const int step = problem.first_step + i;
    for (const auto& c : problem.constraints) {
      if (!c.allows(step, a)) return false;
    }
  }
  return true;
}

namespace {

// Per-step admissible agents under a constraint set: bit 0 = R allowed,
// bit 1 = H allowed. Every constraint is per-step, so feasibility factors.
std::vector<unsigned> admissible(const AllocationProblem& p, std::size_t n_constraints) {
  std::vector<unsigned> allowed(static_cast<std::size_t>(p.size()), 3u);
  for (int i = 0; i < p.size(); ++i) {
    auto& m = allowed[static_cast<std::size_t>(i)];
    if (p.hard_forbidden(i, Agent::Robot)) m &= ~1u;
    const int step = p.first_step + i;
    for (std::size_t c = 0; c < n_constraints; ++c) {
      const auto& con = p.constraints[c];
      if (!con.allows(step, Agent::Robot)) m &= ~1u;
      if (!con.allows(step, Agent::Human)) m &= ~2u;
    }
  }
  return allowed;
}

std::optional<AllocationResult> enumerate(const AllocationProblem& p, const std::vector<unsigned>& allowed) {
  const int n = p.size();
  for (auto m : allowed) {
    if (m == 0) return std::nullopt;
  }
  // Bit (n-1-i) of the mask set means step i goes to H; ascending masks then
  // meet R on the earliest differing step first, and strict > keeps it.
  const std::uint32_t count = 1u << n;
  bool found = false;
  std::uint32_t best_mask = 0;
  double best = 0.0;
  std::vector<double> robot(static_cast<std::size_t>(n)), human(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    robot[static_cast<std::size_t>(i)] = p.term(i, Agent::Robot);
    human[static_cast<std::size_t>(i)] = p.term(i, Agent::Human);
  }
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    double total = 0.0;
    bool ok = true;
    for (int i = 0; i < n; ++i) {
      const bool h = (mask >> (n - 1 - i)) & 1u;
      const unsigned need = h ? 2u : 1u;
      if (!(allowed[static_cast<std::size_t>(i)] & need)) {
        ok = false;
        break;
      }
      total += h ? human[static_cast<std::size_t>(i)] : robot[static_cast<std::size_t>(i)];
    }
    if (!ok) continue;
    if (!found || total > best) {
      found = true;
      best = total;
      best_mask = mask;
    }
  }
  if (!found) return std::nullopt;
  AllocationResult r;
  r.assignment.first_step = p.first_step;
  for (int i = 0; i < n; ++i) {
    r.assignment.agents.push_back(((best_mask >> (n - 1 - i)) & 1u) ? Agent::Human : Agent::Robot);
  }
  r.objective = score(p, r.assignment);
  return r;
}

void check_size(const AllocationProblem& p) {
  if (p.size() > kMaxEnumeratedSteps) {
    throw TooManySteps(std::to_string(p.size()) + " remaining steps exceed the enumeration bound of " +
                       std::to_string(kMaxEnumeratedSteps));
  }
}

}  // namespace

AllocationResult relax_and_solve(const AllocationProblem& problem) {
  problem.validate();
  check_size(problem);
  std::vector<Constraint> dropped;
  for (std::size_t keep = problem.constraints.size() + 1; keep-- > 0;) {
    if (keep < problem.constraints.size()) dropped.push_back(problem.constraints[keep]);
    if (auto r = enumerate(problem, admissible(problem, keep))) {
      r->relaxed = dropped;
      return *r;
    }
  }
  throw Infeasible("no assignment satisfies the non-relaxable rules");
}

AllocationResult solve(const AllocationProblem& problem) { return relax_and_solve(problem); }

std::vector<Constraint> clip_constraints(const std::vector<Constraint>& constraints, int first_step,
                                         int end_step) {
  std::vector<Constraint> out;
  const StepRange remaining{first_step, end_step};
  for (const auto& c : constraints) {
    Constraint clipped = c;
    clipped.range = c.range.intersect(remaining);
    if (clipped.range.empty()) continue;
    if (clipped.kind == Constraint::Kind::Split) {
      clipped.boundary = std::clamp(c.boundary, clipped.range.begin, clipped.range.end);
    }
    out.push_back(clipped);
  }
  return out;
}

}  // namespace micobot::alloc
