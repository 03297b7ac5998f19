#include <functional>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "micobot/alloc/allocator.hpp"

using namespace micobot;
using namespace micobot::alloc;

namespace {

AllocationProblem problem(std::vector<double> qr, std::vector<double> qh, double p, double alpha) {
  AllocationProblem pr;
  pr.q_robot = std::move(qr);
  pr.q_human = std::move(qh);
  pr.p_help = {p};
  pr.alpha = alpha;
  return pr;
}

// Reference solver: depth-first over R-then-H, so the first maximum found in
// lexicographic order (R < H) is the tie-break winner. Checks constraints
// step by step on its own.
std::optional<std::string> oracle(const AllocationProblem& p, const std::vector<Constraint>& cons) {
  const int n = p.size();
  std::string cur(static_cast<std::size_t>(n), '?');
  std::optional<std::string> best;
  double best_v = 0;
  std::function<void(int, double)> go = [&](int i, double acc) {
    if (i == n) {
      if (!best || acc > best_v) {
        best = cur;
        best_v = acc;
      }
      return;
    }
    for (char g : {'R', 'H'}) {
      const int step = p.first_step + i;
      if (g == 'R' && p.strict && !p.robot_infeasible.empty() && p.robot_infeasible[i]) continue;
      bool ok = true;
      for (const auto& c : cons) {
        if (!c.range.contains(step)) continue;
        char need = 0;
        switch (c.kind) {
          case Constraint::Kind::Assign: need = to_char(c.agent); break;
          case Constraint::Kind::Forbid: need = to_char(other(c.agent)); break;
          case Constraint::Kind::Split: need = step < c.boundary ? 'R' : 'H'; break;
        }
        if (need != g) ok = false;
      }
      if (!ok) continue;
      const double pp = std::clamp(p.p_help.size() == 1 ? p.p_help[0] : p.p_help[i], 0.01, 1.0);
      const double v = g == 'R' ? p.q_robot[i] : p.alpha / pp * p.q_human[i];
      cur[static_cast<std::size_t>(i)] = g;
      go(i + 1, acc + v);
    }
  };
  go(0, 0.0);
  return best;
}

Constraint random_constraint(Rng& rng, int first, int end) {
  const int b = rng.uniform_int(first, end - 1);
  const int e = rng.uniform_int(b + 1, end);
  switch (rng.uniform_int(0, 2)) {
    case 0: return Constraint::assign({b, e}, rng.bernoulli(0.5) ? Agent::Human : Agent::Robot);
    case 1: return Constraint::forbid({b, e}, rng.bernoulli(0.5) ? Agent::Human : Agent::Robot);
    default: return Constraint::split({b, e}, rng.uniform_int(b, e));
  }
}

}  // namespace

TEST(Objective, SingleStepSubstitution) {
  auto p = problem({-20}, {-5}, 0.5, 10);
  EXPECT_DOUBLE_EQ(score(p, *Assignment::parse(0, "R")), -20);
  EXPECT_DOUBLE_EQ(score(p, *Assignment::parse(0, "H")), -100);
  EXPECT_THROW(score(p, *Assignment::parse(0, "RH")), IncompleteAssignment);
  EXPECT_THROW(score(p, *Assignment::parse(1, "R")), IncompleteAssignment);
}

TEST(Objective, PIsClampedToEpsilon) {
  auto p = problem({-1}, {-1}, 0.0, 1);
  EXPECT_DOUBLE_EQ(p.p_at(0), kPHelpEpsilon);
  EXPECT_DOUBLE_EQ(p.term(0, Agent::Human), -100.0);
  p.p_help = {std::nan("")};
  EXPECT_DOUBLE_EQ(p.p_at(0), kPHelpEpsilon);
  p.p_help = {3.0};
  EXPECT_DOUBLE_EQ(p.p_at(0), 1.0);
}

TEST(Solve, InfeasibleStepPrefersHumanWhenHelpIsLikely) {
  EXPECT_EQ(solve(problem({-60}, {-5}, 1.0, 10)).assignment.to_string(), "H");
  EXPECT_EQ(solve(problem({-60}, {-5}, 0.05, 10)).assignment.to_string(), "R");
}

TEST(Solve, ToyFixtureAllHumanWhenHelpIsFree) {
  const std::vector<double> qh = {-9.6, -7.2, -13.2, -2.4, -2.4};
  auto p = problem({-10, -6, -20, -60, -2}, qh, 1.0, 0.3);
  const auto r = solve(p);
  EXPECT_EQ(r.assignment.to_string(), "HHHHH");
  // Every robot cost is at least as negative as 0.3 times the human cost, so
  // any assignment with an R scores lower.
  for (unsigned mask = 0; mask < 31; ++mask) {
    std::string s;
    for (int i = 0; i < 5; ++i) s.push_back((mask >> i) & 1 ? 'H' : 'R');
    EXPECT_LT(score(p, *Assignment::parse(0, s)), r.objective) << s;
  }
}

TEST(Solve, ToyFixtureAfterRejection) {
  auto p = problem({-10, -6, -20, -60, -2}, {-9.6, -7.2, -13.2, -2.4, -2.4}, 0.25, 0.3);
  EXPECT_EQ(solve(p).assignment.to_string(), "RRHHR");
}

TEST(Solve, TiesGoToRobotOnEarliestStep) {
  // Every step ties; the all-R assignment wins.
  EXPECT_EQ(solve(problem({-10, -10, -10}, {-1, -1, -1}, 1.0, 10)).assignment.to_string(), "RRR");
  // Step 0 ties, step 1 strictly H.
  EXPECT_EQ(solve(problem({-10, -30}, {-1, -1}, 1.0, 10)).assignment.to_string(), "RH");
}

TEST(Solve, ObjectiveEqualsScoreOfAssignment) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const int n = rng.uniform_int(1, 8);
    AllocationProblem p;
    p.first_step = rng.uniform_int(0, 3);
    for (int i = 0; i < n; ++i) {
      p.q_robot.push_back(-gen::uniform_in(rng, 1, 60));
      p.q_human.push_back(-gen::uniform_in(rng, 1, 60));
    }
    p.p_help = {gen::uniform_in(rng, 0.01, 1)};
    p.alpha = gen::pick(rng, std::vector<double>{0.3, 1, 10});
    const auto r = solve(p);
    EXPECT_DOUBLE_EQ(r.objective, score(p, r.assignment));
    EXPECT_TRUE(satisfies(p, r.assignment));
  }
}

// Constrained random problems against the reference solver.
TEST(Solve, MatchesReferenceUnderRandomConstraints) {
  Rng rng(2);
  int relaxed_cases = 0;
  for (int t = 0; t < 1500; ++t) {
    const int n = rng.uniform_int(1, 9);
    AllocationProblem p;
    p.first_step = rng.uniform_int(0, 4);
    for (int i = 0; i < n; ++i) {
      // Integer costs make ties common.
      p.q_robot.push_back(-static_cast<double>(rng.uniform_int(1, 12)));
      p.q_human.push_back(-static_cast<double>(rng.uniform_int(1, 12)));
    }
    if (rng.bernoulli(0.5)) {
      p.p_help.clear();
      for (int i = 0; i < n; ++i) p.p_help.push_back(gen::pick(rng, std::vector<double>{0.25, 0.5, 1.0}));
    } else {
      p.p_help = {gen::pick(rng, std::vector<double>{0.0, 0.25, 0.5, 1.0})};
    }
    p.alpha = gen::pick(rng, std::vector<double>{0.5, 1, 2});
    p.strict = rng.bernoulli(0.3);
    for (int i = 0; i < n; ++i) p.robot_infeasible.push_back(rng.bernoulli(0.2));
    const int k = rng.uniform_int(0, 4);
    for (int c = 0; c < k; ++c) p.constraints.push_back(random_constraint(rng, p.first_step, p.end_step()));

    const auto r = solve(p);
    // Newest-first relaxation: the reference keeps the longest feasible prefix.
    std::size_t keep = p.constraints.size() + 1;
    std::optional<std::string> expected;
    while (keep-- > 0) {
      expected = oracle(p, {p.constraints.begin(), p.constraints.begin() + static_cast<long>(keep)});
      if (expected) break;
    }
    ASSERT_TRUE(expected.has_value());
    EXPECT_EQ(r.assignment.to_string(), *expected) << "trial " << t;
    EXPECT_EQ(r.relaxed.size(), p.constraints.size() - keep);
    for (std::size_t i = 0; i < r.relaxed.size(); ++i) {
      EXPECT_EQ(r.relaxed[i], p.constraints[p.constraints.size() - 1 - i]);
    }
    relaxed_cases += r.relaxed.empty() ? 0 : 1;
  }
  EXPECT_GT(relaxed_cases, 50);
}

TEST(Constraints, Semantics) {
  const auto split = Constraint::split({2, 5}, 3);
  EXPECT_EQ(split.required_at(2), Agent::Robot);
  EXPECT_EQ(split.required_at(3), Agent::Human);
  EXPECT_FALSE(split.required_at(5).has_value());
  const auto forbid = Constraint::forbid({0, 2}, Agent::Robot);
  EXPECT_FALSE(forbid.allows(1, Agent::Robot));
  EXPECT_TRUE(forbid.allows(1, Agent::Human));
  EXPECT_TRUE(forbid.allows(2, Agent::Robot));
}

TEST(Constraints, TextRoundTrip) {
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const auto c = random_constraint(rng, 0, 12);
    const auto back = Constraint::parse(c.to_string());
    ASSERT_TRUE(back.has_value()) << c.to_string();
    EXPECT_EQ(*back, c);
  }
  EXPECT_EQ(Constraint::assign({3, 4}, Agent::Human).to_string(), "assign 3-4 H");
  for (const char* bad : {"", "assign 3-4", "assign 4-3 H", "assign 3-3 H", "assign 3-4 h", "split 2-4 9",
                          "reassign 3-4 H", "forbid 0-2 X"}) {
    EXPECT_FALSE(Constraint::parse(bad).has_value()) << bad;
  }
}

TEST(Constraints, AssignHonored) {
  auto p = problem({-1, -1, -1}, {-50, -50, -50}, 1.0, 10);
  p.constraints = {Constraint::assign({1, 2}, Agent::Human)};
  const auto r = solve(p);
  EXPECT_EQ(r.assignment.to_string(), "RHR");
  EXPECT_TRUE(r.relaxed.empty());
}

TEST(Relaxation, EmptyConstraintsEqualsUnconstrained) {
  auto p = problem({-3, -60}, {-5, -1}, 0.5, 1);
  const auto r = relax_and_solve(p);
  EXPECT_TRUE(r.relaxed.empty());
  EXPECT_EQ(r.assignment, solve(p).assignment);
}

TEST(Relaxation, StrictModeDropsRobotAssignmentOnInfeasibleStep) {
  auto p = problem({-10, -6, -20, -60, -2}, {-9.6, -7.2, -13.2, -2.4, -2.4}, 0.5, 10);
  p.strict = true;
  p.robot_infeasible = {false, false, false, true, false};
  const auto c = Constraint::assign({3, 4}, Agent::Robot, "human: you do it");
  p.constraints = {c};
  const auto r = relax_and_solve(p);
  EXPECT_EQ(r.assignment.at(3), Agent::Human);
  ASSERT_EQ(r.relaxed.size(), 1u);
  EXPECT_EQ(r.relaxed[0], c);
}

TEST(Relaxation, NewestConflictingConstraintIsDropped) {
  auto p = problem({-1}, {-1}, 1.0, 1);
  p.constraints = {Constraint::assign({0, 1}, Agent::Human), Constraint::forbid({0, 1}, Agent::Human)};
  const auto r = relax_and_solve(p);
  EXPECT_EQ(r.assignment.to_string(), "H");
  ASSERT_EQ(r.relaxed.size(), 1u);
  EXPECT_EQ(r.relaxed[0].kind, Constraint::Kind::Forbid);
  // Reversed order: the assign is newest and goes.
  std::swap(p.constraints[0], p.constraints[1]);
  const auto r2 = relax_and_solve(p);
  EXPECT_EQ(r2.assignment.to_string(), "R");
  EXPECT_EQ(r2.relaxed[0].kind, Constraint::Kind::Assign);
}

TEST(Validation, RejectsMalformedProblems) {
  auto ok = problem({-1, -2}, {-1, -2}, 0.5, 1);
  EXPECT_NO_THROW(ok.validate());
  auto bad = ok;
  bad.q_human.pop_back();
  EXPECT_THROW(solve(bad), ValidationError);
  bad = ok;
  bad.q_robot[0] = 1;
  EXPECT_THROW(solve(bad), ValidationError);
  bad = ok;
  bad.alpha = 0;
  EXPECT_THROW(solve(bad), ValidationError);
  bad = ok;
  bad.p_help = {0.5, 0.5, 0.5};
  EXPECT_THROW(solve(bad), ValidationError);
  bad = ok;
  bad.constraints = {Constraint::assign({1, 3}, Agent::Human)};
  EXPECT_THROW(solve(bad), ValidationError);
}

TEST(Validation, TooManySteps) {
  std::vector<double> q(kMaxEnumeratedSteps + 1, -1.0);
  EXPECT_THROW(solve(problem(q, q, 1, 1)), TooManySteps);
  q.pop_back();
  EXPECT_NO_THROW(solve(problem(q, q, 1, 1)));
}

TEST(Clip, RestrictsToRemainingSteps) {
  const std::vector<Constraint> cs = {Constraint::assign({0, 2}, Agent::Human), Constraint::split({1, 5}, 2),
                                      Constraint::forbid({3, 4}, Agent::Robot)};
  const auto out = clip_constraints(cs, 2, 5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].range, (StepRange{2, 5}));
  EXPECT_EQ(out[0].boundary, 2);
  EXPECT_EQ(out[1], cs[2]);
}

TEST(Assignment, TextRoundTrip) {
  const auto a = Assignment::parse(2, "RRHHR");
  ASSERT_TRUE(a.has_value());
  EXPECT_EQ(a->at(4), Agent::Human);
  EXPECT_EQ(a->to_string(), "RRHHR");
  EXPECT_FALSE(Assignment::parse(0, "RX").has_value());
}
