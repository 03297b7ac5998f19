#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "micobot/harness/suite.hpp"

using namespace micobot;
using namespace micobot::harness;
using nlohmann::json;

namespace {

SuiteGrid small_grid() {
  return SuiteGrid::from_json(json::parse(R"({"methods": ["micobot", "random", "recb:from:micobot"],
      "p_tilde": [0.0, 1.0], "moods": ["positive"], "seeds": 3, "q_samples": 20})"));
}

int lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n' ? 1 : 0;
  return n;
}

}  // namespace

TEST(Grid, ParsesBothHumanForms) {
  const auto g = SuiteGrid::from_json(json::parse(R"({"methods": ["micobot"], "p_tilde": [0.3, 0.7],
      "moods": ["positive", "negative"], "seeds": [4, 9], "alpha": 1.5})"));
  ASSERT_EQ(g.humans.size(), 4u);
  EXPECT_EQ(g.humans[2].mood, human::Mood::Negative);
  EXPECT_DOUBLE_EQ(g.humans[3].p_tilde, 0.7);
  EXPECT_EQ(g.seeds, (std::vector<std::uint64_t>{4, 9}));
  EXPECT_DOUBLE_EQ(g.base.alpha, 1.5);
  EXPECT_EQ(g.trial_count(), 8u);

  const auto h = SuiteGrid::from_json(json::parse(R"({"methods": ["h_init"],
      "humans": [{"p_tilde": 0.5, "mood": "negative", "proactive_rate": 0.0}], "seeds": 1})"));
  ASSERT_EQ(h.humans.size(), 1u);
  EXPECT_EQ(h.humans[0].proactive_rate, 0.0);
}

TEST(Grid, RejectsBadGrids) {
  for (const char* bad : {R"({"method": ["micobot"]})", R"({"methods": ["teleport"]})",
                          R"({"moods": ["positive"]})", R"({"p_tilde": [1.5]})", R"({"seeds": -1})",
                          R"({"methods": ["recb:from:micobot"]})", R"({"humans": [{"kind": "script"}]})", "[]"}) {
    EXPECT_THROW(SuiteGrid::from_json(json::parse(bad)), ConfigError) << bad;
  }
  EXPECT_THROW(SuiteGrid::load("/nonexistent/grid.json"), ConfigError);
}

TEST(Suite, EmptyGridGivesEmptyReport) {
  const auto r = run_suite(SuiteGrid{});
  EXPECT_TRUE(r.cells.empty());
  EXPECT_TRUE(r.trials.empty());
  EXPECT_EQ(lines(r.report_csv()), 1);
  EXPECT_EQ(lines(r.trials_csv()), 1);
}

TEST(Suite, ThreadCountDoesNotChangeTheReport) {
  const auto g = small_grid();
  const auto one = run_suite(g, 1);
  const auto two = run_suite(g, 3);
  EXPECT_EQ(one.report_csv(), two.report_csv());
  EXPECT_EQ(one.trials_csv(), two.trials_csv());
  EXPECT_EQ(one.scatter_csv(), two.scatter_csv());
}

TEST(Suite, FullMethodGridHasOneRowPerCell) {
  const auto g = SuiteGrid::from_json(json::parse(R"({"methods": ["micobot", "random", "recb:0.5", "llm_proxy",
      "h_init", "r_init", "no_phelp", "no_hierarchy"], "p_tilde": [0.0, 0.3, 0.7, 1.0],
      "moods": ["positive", "negative"], "seeds": 10, "q_samples": 10})"));
  ASSERT_EQ(g.trial_count(), 640u);
  const auto r = run_suite(g, 2);
  ASSERT_EQ(r.trials.size(), 640u);
  ASSERT_EQ(r.cells.size(), 64u);
  std::set<std::tuple<std::string, std::string, double>> keys;
  for (const auto& c : r.cells) {
    EXPECT_EQ(c.trials, 10);
    EXPECT_EQ(c.errors, 0) << c.first_error;
    keys.insert({c.method, std::string(human::to_string(c.human.mood)), c.human.p_tilde});
  }
  EXPECT_EQ(keys.size(), 64u);
  EXPECT_EQ(r.scatter.size(), 8u);
  EXPECT_EQ(lines(r.report_csv()), 65);
  EXPECT_EQ(lines(r.trials_csv()), 641);
}

// The derived recb cell must equal an explicit recb run at the mean
// human-step fraction of the referenced method.
TEST(Suite, RecbFromUsesTheReferencedMethodsHumanShare) {
  const auto g = small_grid();
  const auto r = run_suite(g);
  for (double p : {0.0, 1.0}) {
    std::vector<double> fractions;
    std::vector<const TrialRow*> derived;
    for (const auto& t : r.trials) {
      if (t.human.p_tilde != p) continue;
      if (t.method == "micobot") fractions.push_back(t.metrics->human_steps_fraction);
      if (t.method == "recb:from:micobot") derived.push_back(&t);
    }
    ASSERT_EQ(derived.size(), 3u);
    double mean = 0;
    for (double f : fractions) mean += f;
    mean /= static_cast<double>(fractions.size());
    for (const auto* t : derived) {
      TrialConfig c = g.base;
      c.method.kind = MethodKind::Recb;
      c.method.p_c = mean;
      c.human.params = t->human;
      c.seed = t->seed;
      const auto direct = run_trial(c).metrics;
      ASSERT_TRUE(t->metrics.has_value()) << t->error;
      EXPECT_EQ(direct.human_steps_fraction, t->metrics->human_steps_fraction);
      EXPECT_EQ(direct.env_steps, t->metrics->env_steps);
    }
  }
}

TEST(Suite, FailingTrialsAreRecordedAndTheRestRuns) {
  auto g = small_grid();
  g.scenarios = {"task-99", "task-1"};
  const auto r = run_suite(g);
  ASSERT_EQ(r.cells.size(), 12u);
  for (const auto& c : r.cells) {
    if (c.scenario == "task-99") {
      EXPECT_EQ(c.errors, 3);
      EXPECT_FALSE(c.first_error.empty());
    } else {
      EXPECT_EQ(c.errors, 0);
      EXPECT_EQ(c.success.n, 3);
    }
  }
  EXPECT_NE(r.report_csv().find("task-99"), std::string::npos);
}

TEST(Summary, MeanAndSampleSd) {
  const auto s = summarize({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.sd, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_EQ(summarize({7}).sd, 0.0);
  EXPECT_EQ(summarize({}).n, 0);
}

TEST(Report, WritesThreeFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "micobot-suite-test";
  std::filesystem::remove_all(dir);
  const auto r = run_suite(small_grid());
  r.write(dir.string());
  for (const char* name : {"report.csv", "scatter.csv", "trials.csv"}) {
    std::ifstream in(dir / name);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_FALSE(ss.str().empty()) << name;
  }
  std::ifstream in(dir / "report.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.substr(0, 20), "scenario,method,mood");
  std::filesystem::remove_all(dir);
}
