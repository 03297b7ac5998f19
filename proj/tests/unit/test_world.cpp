#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "micobot/common.hpp"
#include "micobot/task/scenario.hpp"
#include "micobot/world/rollout.hpp"
#include "micobot/world/world_state.hpp"

using namespace micobot;
using namespace micobot::world;

namespace {

GridWorld small_world() {
  return GridWorld(10, 8, {{"kitchen", {{0, 0}, {1, 0}}}, {"coffee_table", {{5, 5}}}, {"shelf", {{9, 7}}}});
}

SymbolicState kitchen_state() {
  SymbolicState s(small_world());
  s.add_object("bowl", "kitchen");
  s.add_object("package", "kitchen", {"closed"});
  s.add_object("scissors", "kitchen");
  s.set_agent_pose("robot", {4, 5});
  s.set_agent_pose("human", {0, 1});
  return s;
}

PhysicalPrimitive P(const std::string& text) { return PhysicalPrimitive::parse(text); }

}  // namespace

TEST(Primitive, ParseAndPrintRoundTrip) {
  const auto p = P("  pick_open_place( scissors ,package,coffee_table ) ");
  EXPECT_EQ(p.kind, PrimitiveKind::PickOpenPlace);
  EXPECT_EQ(p.to_string(), "pick_open_place(scissors, package, coffee_table)");
  EXPECT_EQ(P(p.to_string()), p);
  EXPECT_EQ(p.primary_object(), "package");
}

TEST(Primitive, RejectsBadText) {
  EXPECT_THROW(P("juggle(ball)"), ParseError);
  EXPECT_THROW(P("pickplace(bowl"), ParseError);
  EXPECT_THROW(make_primitive(PrimitiveKind::PickPlace, {"bowl"}), ValidationError);
}

TEST(Primitive, EveryKindNameRoundTrips) {
  for (auto k : kAllPrimitiveKinds) {
    const auto parsed = parse_kind(to_string(k));
    ASSERT_TRUE(parsed.has_value());
    EXPECT_EQ(*parsed, k);
  }
}

TEST(Effects, PickplaceMovesOnlyTheObject) {
  const auto s = kitchen_state();
  const auto next = apply_effect(s, P("pickplace(bowl, coffee_table)"));
  EXPECT_EQ(next.location("bowl"), "coffee_table");
  auto expected = s;
  expected.set_location("bowl", "coffee_table");
  EXPECT_EQ(next, expected);
  EXPECT_EQ(s.location("bowl"), "kitchen");
}

TEST(Effects, RelocationTwiceIsAFixedPoint) {
  const auto s = kitchen_state();
  for (const char* text : {"pickplace(bowl, coffee_table)", "pickplace(scissors, shelf)"}) {
    const auto once = apply_effect(s, P(text));
    EXPECT_EQ(apply_effect(once, P(text)), once) << text;
  }
}

TEST(Effects, PourFromClosedPackageIsRejected) {
  auto s = kitchen_state();
  s.set_location("bowl", "coffee_table");
  s.set_location("package", "coffee_table");
  EXPECT_THROW(apply_effect(s, P("pick_pour_place(package, bowl, coffee_table)")), PreconditionViolated);
  s.remove_flag("package", "closed");
  s.add_flag("package", "open");
  const auto poured = apply_effect(s, P("pick_pour_place(package, bowl, coffee_table)"));
  EXPECT_TRUE(poured.has_flag("package", "poured-into:bowl"));
}

TEST(Effects, OpenSetsOpenAndClearsClosed) {
  auto s = kitchen_state();
  s.set_location("scissors", "coffee_table");
  const auto opened = apply_effect(s, P("pick_open_place(scissors, package, coffee_table)"));
  EXPECT_TRUE(opened.has_flag("package", "open"));
  EXPECT_FALSE(opened.has_flag("package", "closed"));
  EXPECT_EQ(opened.location("package"), "coffee_table");
  opened.check_invariants();
}

TEST(Effects, UnknownEntitiesThrow) {
  const auto s = kitchen_state();
  EXPECT_THROW(apply_effect(s, P("pickplace(teapot, coffee_table)")), UnknownEntity);
  EXPECT_THROW(apply_effect(s, P("pickplace(bowl, garage)")), UnknownEntity);
}

// Each gate of each kind: build a state where all gates hold, then break one
// at a time and check that the primitive is refused.
TEST(Effects, EveryPreconditionGateRejects) {
  struct Case {
    std::string prim;
    std::function<void(SymbolicState&)> prepare;
    std::vector<std::function<void(SymbolicState&)>> breakers;
  };
  auto base = [] {
    SymbolicState s(small_world());
    s.add_object("a", "coffee_table");
    s.add_object("b", "coffee_table");
    s.add_object("c", "coffee_table");
    s.add_object("far", "shelf");
    s.set_agent_pose("robot", {4, 5});
    return s;
  };
  const std::vector<Case> cases = {
      {"pickplace(a, b)",
       [](auto&) {},
       {[](auto& s) { s.set_location("a", "robot"); }, [](auto& s) { s.set_location("b", "a"); }}},
      {"pick_open_place(b, a, coffee_table)",
       [](auto&) {},
       {[](auto& s) { s.set_location("a", "robot"); }, [](auto& s) { s.add_flag("a", "open"); },
        [](auto& s) { s.set_location("b", "shelf"); }}},
      {"pick_pour_place(a, b, coffee_table)",
       [](auto& s) { s.add_flag("a", "open"); },
       {[](auto& s) { s.remove_flag("a", "open"); }, [](auto& s) { s.add_flag("a", "poured-into:c"); },
        [](auto& s) { s.set_location("b", "shelf"); }, [](auto& s) { s.set_location("a", "robot"); }}},
      {"put_on(a, b, c)",
       [](auto&) {},
       {[](auto& s) { s.set_location("a", "shelf"); }, [](auto& s) { s.set_location("c", "shelf"); },
        [](auto& s) { s.add_flag("a", "assembled-on:b"); }}},
      {"switch(a, b)",
       [](auto&) {},
       {[](auto& s) { s.set_location("a", "shelf"); }, [](auto& s) { s.add_flag("b", "bit:a"); }}},
      {"fold(a)", [](auto&) {}, {[](auto& s) { s.add_flag("a", "folded"); }}},
      {"cover(a, b)",
       [](auto&) {},
       {[](auto& s) { s.set_location("a", "shelf"); }, [](auto& s) { s.add_flag("b", "covered"); }}},
      {"wrap(a, b)",
       [](auto&) {},
       {[](auto& s) { s.set_location("a", "shelf"); }, [](auto& s) { s.add_flag("b", "wrapped"); }}},
      {"cut_put(a, b, c)",
       [](auto&) {},
       {[](auto& s) { s.set_location("a", "shelf"); }, [](auto& s) { s.set_location("b", "shelf"); },
        [](auto& s) { s.add_flag("a", "assembled-on:c"); }}},
  };
  for (const auto& c : cases) {
    auto ok = base();
    c.prepare(ok);
    ASSERT_FALSE(violated_precondition(ok, P(c.prim)).has_value()) << c.prim;
    EXPECT_NO_THROW(apply_effect(ok, P(c.prim)).check_invariants()) << c.prim;
    for (std::size_t i = 0; i < c.breakers.size(); ++i) {
      auto broken = ok;
      c.breakers[i](broken);
      EXPECT_TRUE(violated_precondition(broken, P(c.prim)).has_value()) << c.prim << " gate " << i;
      EXPECT_THROW(apply_effect(broken, P(c.prim)), PreconditionViolated) << c.prim << " gate " << i;
    }
  }
}

TEST(Effects, BuiltinPlansApplyInOrderAndKeepInvariants) {
  for (const auto& sc : task::builtin_scenarios()) {
    auto s = sc.initial;
    for (const auto& step : sc.plan.steps) {
      ASSERT_FALSE(violated_precondition(s, step).has_value()) << sc.name << " " << step.to_string();
      s = apply_effect(s, step);
      s.check_invariants();
    }
  }
}

TEST(WorldState, ContainmentQueries) {
  auto s = kitchen_state();
  s.set_location("scissors", "bowl");
  EXPECT_EQ(s.furniture_of("scissors"), "kitchen");
  EXPECT_TRUE(s.is_within("scissors", "bowl"));
  s.set_location("bowl", "robot");
  EXPECT_FALSE(s.furniture_of("scissors").has_value());
  EXPECT_EQ(s.holder_of("scissors"), "robot");
}

TEST(WorldState, KeyIgnoresPosesButNotFlags) {
  auto a = kitchen_state();
  auto b = a;
  b.set_agent_pose("robot", {2, 2});
  EXPECT_EQ(a.key(), b.key());
  b.add_flag("bowl", "folded");
  EXPECT_NE(a.key(), b.key());
  EXPECT_EQ(a.key().size(), 16u);
}

TEST(WorldState, InvariantViolationsAreReported) {
  auto s = kitchen_state();
  s.add_flag("package", "open");
  EXPECT_FALSE(s.has_flag("package", "closed"));
  s.add_object("box", "kitchen", {"open", "closed"});
  EXPECT_THROW(s.check_invariants(), ValidationError);
  auto t = kitchen_state();
  t.add_object("crate", "garage");
  EXPECT_THROW(t.check_invariants(), ValidationError);
  EXPECT_THROW(s.add_object("kitchen", "kitchen"), ValidationError);
}

TEST(GridWorld, RejectsBadFootprints) {
  EXPECT_THROW(GridWorld(4, 4, {{"a", {{0, 0}}}, {"b", {{0, 0}}}}), ValidationError);
  EXPECT_THROW(GridWorld(4, 4, {{"a", {{4, 0}}}}), ValidationError);
  EXPECT_THROW(GridWorld(4, 4, {{"a", {{1, 1}}}, {"a", {{2, 2}}}}), ValidationError);
  const GridWorld w(4, 4, {{"a", {{1, 1}}}});
  EXPECT_FALSE(w.walkable({1, 1}));
  EXPECT_TRUE(w.walkable({0, 1}));
  EXPECT_THROW(w.find_furniture("b"), UnknownEntity);
}

TEST(Distance, AdjacentCellIsOneMeter) {
  const GridWorld w(6, 6, {{"table", {{3, 3}}}});
  SymbolicState s(w);
  s.set_agent_pose("human", {3, 2});
  EXPECT_DOUBLE_EQ(travel_distance(w, s, "human", "table"), 1.0);
}

TEST(Distance, ThreeFourFive) {
  const GridWorld w(6, 6, {{"table", {{3, 4}}}});
  SymbolicState s(w);
  s.set_agent_pose("human", {0, 0});
  EXPECT_DOUBLE_EQ(travel_distance(w, s, "human", "table"), 5.0);
}

TEST(Distance, RandomLayoutsMatchBruteForce) {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const int w = rng.uniform_int(3, 20);
    const int h = rng.uniform_int(3, 20);
    const double scale = gen::uniform_in(rng, 0.1, 2.0);
    // Random rectangle of furniture.
    const int x0 = rng.uniform_int(0, w - 1), y0 = rng.uniform_int(0, h - 1);
    const int x1 = rng.uniform_int(x0, w - 1), y1 = rng.uniform_int(y0, h - 1);
    std::vector<Cell> cells;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) cells.push_back({x, y});
    const GridWorld world(w, h, {{"f", cells}}, scale);
    SymbolicState s(world);
    const Cell pose{rng.uniform_int(0, w - 1), rng.uniform_int(0, h - 1)};
    s.set_agent_pose("a", pose);
    // Oracle: scan the whole grid, keep cells that are not walkable.
    double best = std::numeric_limits<double>::infinity();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (world.walkable({x, y})) continue;
        const double d2 = double(x - pose.x) * (x - pose.x) + double(y - pose.y) * (y - pose.y);
        best = std::min(best, std::sqrt(d2));
      }
    }
    EXPECT_NEAR(travel_distance(world, s, "a", "f"), best * scale, 1e-12);
  }
}

TEST(Duration, TextRoundTrip) {
  for (const auto& d : {DurationDist::constant(7), DurationDist::uniform(5, 9), DurationDist::normal(10, 2.5)}) {
    EXPECT_EQ(DurationDist::parse(d.to_string()), d);
  }
  EXPECT_THROW(DurationDist::parse("uniform(9,5)"), ParseError);
  EXPECT_THROW(DurationDist::parse("soon"), ParseError);
}

TEST(Duration, SamplesAreTruncatedToTimeout) {
  Rng rng(3);
  const auto d = DurationDist::normal(55, 30);
  for (int i = 0; i < 2000; ++i) {
    const int v = d.sample(rng);
    ASSERT_GE(v, 1);
    ASSERT_LE(v, kTimeoutSteps);
  }
}

TEST(Rollout, ZeroCapabilityAlwaysTimesOut) {
  auto s = kitchen_state();
  s.set_location("scissors", "coffee_table");
  AgentProfile robot;
  robot.by_kind[PrimitiveKind::PickOpenPlace] = {0.0, DurationDist::constant(20), 0.0};
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto o = rollout_primitive(s, P("pick_open_place(scissors, package, coffee_table)"), robot, rng);
    ASSERT_FALSE(o.succeeded);
    ASSERT_EQ(o.duration, kTimeoutSteps);
  }
}

TEST(Rollout, CertainSkillIsConstant) {
  const auto s = kitchen_state();
  AgentProfile robot;
  robot.fallback = {1.0, DurationDist::constant(7), 0.0};
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto o = rollout_primitive(s, P("pickplace(bowl, coffee_table)"), robot, rng);
    ASSERT_TRUE(o.succeeded);
    ASSERT_EQ(o.duration, 7);
  }
}

TEST(Rollout, EmpiricalMeanMatchesExpectation) {
  const auto s = kitchen_state();
  AgentProfile robot;
  robot.fallback = {0.8, DurationDist::constant(10), 0.0};
  Rng rng(2024);
  const int n = 10000;
  double sum = 0;
  int failures = 0;
  for (int i = 0; i < n; ++i) {
    const auto o = rollout_primitive(s, P("pickplace(bowl, coffee_table)"), robot, rng);
    sum += o.duration;
    failures += o.succeeded ? 0 : 1;
  }
  EXPECT_NEAR(sum / n, 0.8 * 10 + 0.2 * 60, 0.5);
  // Failure count within 3 sigma of the binomial.
  const double sigma = std::sqrt(n * 0.2 * 0.8);
  EXPECT_LE(std::abs(failures - 0.2 * n), 3 * sigma);
}

TEST(Rollout, SameSeedSameOutcomes) {
  const auto s = kitchen_state();
  AgentProfile robot;
  robot.fallback = {0.5, DurationDist::uniform(3, 30), 0.3};
  Rng a(77), b(77);
  for (int i = 0; i < 200; ++i) {
    const auto x = rollout_primitive(s, P("pickplace(bowl, coffee_table)"), robot, a);
    const auto y = rollout_primitive(s, P("pickplace(bowl, coffee_table)"), robot, b);
    ASSERT_EQ(x.succeeded, y.succeeded);
    ASSERT_EQ(x.duration, y.duration);
    ASSERT_EQ(x.terminal_failure, y.terminal_failure);
  }
}

TEST(Rollout, PreconditionsAreChecked) {
  const auto s = kitchen_state();
  AgentProfile robot;
  Rng rng(0);
  EXPECT_THROW(rollout_primitive(s, P("pick_pour_place(package, bowl, kitchen)"), robot, rng), PreconditionViolated);
}

TEST(Rollout, ProfileLookupOrder) {
  AgentProfile p;
  p.fallback.p_success = 0.1;
  p.by_kind[PrimitiveKind::PickPlace].p_success = 0.2;
  p.by_primitive["pickplace(bowl, shelf)"].p_success = 0.3;
  EXPECT_DOUBLE_EQ(p.lookup(P("pickplace(bowl, shelf)")).p_success, 0.3);
  EXPECT_DOUBLE_EQ(p.lookup(P("pickplace(cup, shelf)")).p_success, 0.2);
  EXPECT_DOUBLE_EQ(p.lookup(P("fold(towel)")).p_success, 0.1);
}
