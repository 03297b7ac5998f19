#include <atomic>
#include <future>
#include <thread>

#include <gtest/gtest.h>

#include "micobot/human/human.hpp"

using namespace micobot;
using namespace micobot::human;
using dialog::Act;

namespace {

const task::TaskScenario& task1() { return task::builtin_scenarios().at(0); }

struct ObsBuilder {
  world::SymbolicState state = task1().initial;
  Observation obs() {
    Observation o;
    o.scenario = &task1();
    o.state = &state;
    return o;
  }
};

dialog::PendingRequest request(int id, StepRange r) { return {id, id, Act::AskHelp, r, std::nullopt, std::nullopt, false}; }

Act classify(const std::string& text, const std::optional<dialog::PendingRequest>& pending) {
  return dialog::classify_incoming(text, {&task1().plan, 0, pending}).act;
}

void wait_for(const std::function<bool()>& cond) {
  for (int i = 0; i < 2000 && !cond(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  ASSERT_TRUE(cond());
}

}  // namespace

TEST(Simulated, CertainHelperAcceptsAndPerforms) {
  SimulatedHuman h({1.0, Mood::Positive, 0.0, 5});
  ObsBuilder b;
  auto o = b.obs();
  o.current_step = 2;
  o.pending = request(1, {2, 4});
  const auto t = h.turn(o);
  EXPECT_EQ(classify(t.utterance, o.pending), Act::Accept);
  EXPECT_EQ(t.perform, (std::vector<int>{2, 3}));
}

TEST(Simulated, NeverHelperOnlyRejectsOrChats) {
  SimulatedHuman h({0.0, Mood::Negative, 0.5, 9});
  ObsBuilder b;
  for (int id = 1; id <= 300; ++id) {
    auto o = b.obs();
    o.pending = request(id, {0, 2});
    const auto t = h.turn(o);
    EXPECT_EQ(classify(t.utterance, o.pending), Act::Reject) << t.utterance;
    EXPECT_TRUE(t.perform.empty());
    auto idle = b.obs();
    const auto chat = h.turn(idle);
    EXPECT_TRUE(chat.perform.empty());
    if (!chat.utterance.empty()) EXPECT_EQ(classify(chat.utterance, std::nullopt), Act::Smalltalk) << chat.utterance;
  }
}

TEST(Simulated, AcceptanceFrequencyMatchesPTilde) {
  SimulatedHuman h({0.3, Mood::Positive, 0.0, 2024});
  ObsBuilder b;
  int accepted = 0;
  const int n = 10000;
  for (int id = 1; id <= n; ++id) {
    auto o = b.obs();
    o.pending = request(id, {0, 1});
    const auto t = h.turn(o);
    accepted += t.perform.empty() ? 0 : 1;
  }
  EXPECT_NEAR(accepted / double(n), 0.3, 0.015);
}

TEST(Simulated, AnswersEachRequestOnce) {
  SimulatedHuman h({1.0, Mood::Positive, 0.0, 1});
  ObsBuilder b;
  auto o = b.obs();
  o.pending = request(4, {4, 5});
  o.current_step = 0;
  EXPECT_FALSE(h.turn(o).utterance.empty());
  EXPECT_TRUE(h.turn(o).utterance.empty());
}

TEST(Simulated, ProactiveRateAndClaimShare) {
  SimulatedHuman h({1.0, Mood::Positive, std::nullopt, 8});
  ObsBuilder b;
  int spoke = 0, claims = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    auto o = b.obs();
    o.current_step = 4;
    const auto t = h.turn(o);
    if (t.utterance.empty()) continue;
    ++spoke;
    if (classify(t.utterance, std::nullopt) == Act::ClaimStep) ++claims;
  }
  const double sigma = std::sqrt(n * 0.1 * 0.9);
  EXPECT_LE(std::abs(spoke - 0.1 * n), 4 * sigma);
  const double expected_claims = 0.1 * n * kProactiveClaimShare;
  EXPECT_LE(std::abs(claims - expected_claims), 4 * std::sqrt(expected_claims) + 1);
}

TEST(Simulated, ParamsValidate) {
  EXPECT_THROW(SimulatedHuman({1.5, Mood::Positive}), ConfigError);
  EXPECT_THROW(SimulatedHuman({0.5, Mood::Positive, -0.1}), ConfigError);
  EXPECT_THROW(parse_mood("grumpy"), ConfigError);
  EXPECT_EQ(parse_mood("Negative"), Mood::Negative);
  EXPECT_DOUBLE_EQ((SimulatedHumanParams{0.5, Mood::Negative}.rate()), kProactiveRateNegative);
}

TEST(Pools, MoodsNeverShareALine) {
  const auto& p = pools(Mood::Positive);
  const auto& n = pools(Mood::Negative);
  std::set<std::string> pos;
  for (const auto* v : {&p.accept, &p.reject, &p.smalltalk, &p.claim}) pos.insert(v->begin(), v->end());
  for (const auto* v : {&n.accept, &n.reject, &n.smalltalk, &n.claim}) {
    for (const auto& s : *v) EXPECT_FALSE(pos.count(s)) << s;
  }
}

TEST(Script, ParseSerializeRoundTrip) {
  const auto s = parse_script("# fixture\nreject\naccept\nsay Hello there\nperform 3\nperform 2-4\nsilence\nclaim 4\nthanks\n");
  ASSERT_EQ(s.size(), 8u);
  EXPECT_EQ(s[2].text, "Hello there");
  EXPECT_EQ(s[3].steps, (StepRange{3, 4}));
  EXPECT_EQ(s[4].steps, (StepRange{2, 4}));
  EXPECT_EQ(parse_script(serialize_script(s)), s);
}

TEST(Script, ParseErrors) {
  for (const char* bad : {"dance\n", "reject now\n", "say\n", "perform\n", "perform -1\n", "claim 4-2\n", "perform x\n"}) {
    EXPECT_THROW(parse_script(bad), ParseError) << bad;
  }
  try {
    parse_script("accept\n\nbogus\n");
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(Fixture, EmptyScriptIsSilent) {
  FixtureHuman h({});
  ObsBuilder b;
  for (int i = 0; i < 10; ++i) {
    auto o = b.obs();
    o.pending = request(i + 1, {0, 1});
    EXPECT_TRUE(h.turn(o).silent());
  }
  EXPECT_TRUE(h.exhausted());
  EXPECT_THROW(h.peek(), ScriptExhausted);
}

TEST(Fixture, RejectThenAcceptWaitsForRequests) {
  FixtureHuman h(parse_script("reject\naccept\n"));
  ObsBuilder b;
  auto idle = b.obs();
  EXPECT_TRUE(h.turn(idle).silent());  // no request yet: the directive waits
  auto o = b.obs();
  o.pending = request(1, {0, 5});
  EXPECT_EQ(classify(h.turn(o).utterance, o.pending), Act::Reject);
  o.pending = request(2, {2, 4});
  o.current_step = 2;
  const auto t = h.turn(o);
  EXPECT_EQ(classify(t.utterance, o.pending), Act::Accept);
  EXPECT_EQ(t.perform, (std::vector<int>{2, 3}));
  EXPECT_TRUE(h.exhausted());
}

TEST(Fixture, PHelpTraceFallsTwiceThenRises) {
  FixtureHuman h(parse_script("reject\nreject\naccept\naccept\nthanks\n"));
  ObsBuilder b;
  dialog::PHelpEstimate est;
  std::vector<double> trace = {est.value()};
  for (int id = 1; id <= 5; ++id) {
    auto o = b.obs();
    if (id <= 4) o.pending = request(id, {4, 5});
    const auto t = h.turn(o);
    auto e = dialog::classify_incoming(t.utterance, {&task1().plan, 0, o.pending});
    est = dialog::update_p_help(est, e);
    trace.push_back(est.value());
  }
  EXPECT_LT(trace[1], trace[0]);
  EXPECT_LT(trace[2], trace[1]);
  EXPECT_GT(trace[3], trace[2]);
  EXPECT_GT(trace[4], trace[3]);
  EXPECT_GT(trace[5], trace[4]);
}

TEST(Fixture, ClaimAndPerformDirectives) {
  FixtureHuman h(parse_script("claim 4\nperform 0-2\n"));
  ObsBuilder b;
  auto o = b.obs();
  o.current_step = 4;
  const auto t = h.turn(o);
  EXPECT_EQ(classify(t.utterance, std::nullopt), Act::ClaimStep);
  EXPECT_EQ(t.perform, std::vector<int>{4});
  o.current_step = 0;
  EXPECT_EQ(h.turn(o).perform, (std::vector<int>{0, 1}));
}

TEST(Recorded, PlaysBackByEnvStep) {
  RecordedHuman h({{3, HumanTurn{"hello", {}}}, {5, HumanTurn{"", {1}}}});
  ObsBuilder b;
  auto o = b.obs();
  o.env_step = 3;
  EXPECT_EQ(h.turn(o).utterance, "hello");
  o.env_step = 4;
  EXPECT_TRUE(h.turn(o).silent());
  o.env_step = 5;
  EXPECT_EQ(h.turn(o).perform, std::vector<int>{1});
}

TEST(Bridge, PassesTextAndPerformThrough) {
  auto clock = std::make_shared<FakeClock>();
  InteractiveBridge bridge(std::chrono::milliseconds(1000), clock);
  ObsBuilder b;
  bridge.push({"I'll open the package", std::nullopt});
  bridge.push({"", 4});
  EXPECT_EQ(bridge.turn(b.obs()).utterance, "I'll open the package");
  const auto t = bridge.turn(b.obs());
  EXPECT_EQ(t.perform, std::vector<int>{4});
  EXPECT_TRUE(t.utterance.empty());
}

TEST(Bridge, TimeoutIsSilence) {
  auto clock = std::make_shared<FakeClock>();
  InteractiveBridge bridge(std::chrono::milliseconds(1000), clock);
  std::atomic<bool> started{false};
  bridge.on_turn_started([&](const Observation&) { started = true; });
  ObsBuilder b;
  auto fut = std::async(std::launch::async, [&] { return bridge.turn(b.obs()); });
  wait_for([&] { return clock->waiters() == 1; });
  EXPECT_TRUE(started);
  EXPECT_TRUE(bridge.awaiting());
  clock->advance(std::chrono::milliseconds(999));
  EXPECT_EQ(fut.wait_for(std::chrono::milliseconds(20)), std::future_status::timeout);
  clock->advance(std::chrono::milliseconds(1));
  EXPECT_TRUE(fut.get().silent());
  EXPECT_FALSE(bridge.awaiting());
}

TEST(Bridge, MessageWakesWaitingTurn) {
  auto clock = std::make_shared<FakeClock>();
  InteractiveBridge bridge(std::chrono::milliseconds(1000), clock);
  ObsBuilder b;
  auto fut = std::async(std::launch::async, [&] { return bridge.turn(b.obs()); });
  wait_for([&] { return clock->waiters() == 1; });
  bridge.push({"ok", std::nullopt});
  EXPECT_EQ(fut.get().utterance, "ok");
}

TEST(Bridge, CloseAbortsTurns) {
  auto clock = std::make_shared<FakeClock>();
  InteractiveBridge bridge(std::chrono::milliseconds(1000), clock);
  ObsBuilder b;
  auto fut = std::async(std::launch::async, [&] { return bridge.turn(b.obs()); });
  wait_for([&] { return clock->waiters() == 1; });
  bridge.close();
  EXPECT_THROW(fut.get(), SessionClosed);
  EXPECT_THROW(bridge.turn(b.obs()), SessionClosed);
  EXPECT_TRUE(bridge.closed());
}

TEST(Bridge, ClockMayOutliveBridge) {
  auto clock = std::make_shared<FakeClock>();
  { InteractiveBridge bridge(std::chrono::milliseconds(10), clock); }
  clock->advance(std::chrono::milliseconds(50));
  EXPECT_THROW(InteractiveBridge(std::chrono::milliseconds(0), clock), ConfigError);
}
