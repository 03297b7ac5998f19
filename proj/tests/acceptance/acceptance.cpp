// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "gen.hpp"
#include "micobot/harness/suite.hpp"

using namespace micobot;
using namespace micobot::harness;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && pass) {
      pass = false;
      detail = what;
    } else if (!cond) {
      detail += "; " + what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string write_variant(const std::string& name, const std::vector<std::pair<std::string, std::string>>& edits) {
  auto doc = task::builtin_document("task-1");
  for (const auto& [from, to] : edits) doc = std::regex_replace(doc, std::regex(from), to);
  const auto path = temp_path(name);
  std::ofstream(path) << doc;
  return path;
}

// 1 ------------------------------------------------------------------------

Outcome allocator_vs_greedy() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(20240601);
  const std::vector<double> alphas = {0.3, 1.0, 10.0};
  int mismatches = 0;
  for (int k = 0; k < 1000; ++k) {
    alloc::AllocationProblem p;
    const int n = rng.uniform_int(1, 10);
    p.first_step = rng.uniform_int(0, 3);
    for (int i = 0; i < n; ++i) {
      p.q_robot.push_back(gen::uniform_in(rng, -60, -1));
      p.q_human.push_back(gen::uniform_in(rng, -60, -1));
    }
    p.alpha = gen::pick(rng, alphas);
    p.p_help = {gen::uniform_in(rng, 0.01, 1.0)};
    const auto res = alloc::solve(p);
    // Independent per-step argmax; ties go to the robot.
    for (int i = 0; i < n; ++i) {
      const double r = p.q_robot[static_cast<std::size_t>(i)];
      const double h = p.alpha / p.p_help[0] * p.q_human[static_cast<std::size_t>(i)];
      const Agent want = r >= h ? Agent::Robot : Agent::Human;
      if (res.assignment.first_step != p.first_step || res.assignment.at(p.first_step + i) != want) {
        ++mismatches;
        break;
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(mismatches == 0, std::to_string(mismatches) + " of 1000 problems differ from greedy");
  o.require(secs < 5.0, "runtime " + fmt("%.2f", secs) + " s");
  if (o.pass) o.detail = "1000/1000 match, " + fmt("%.3f", secs) + " s";
  return o;
}

// 2 ------------------------------------------------------------------------

Outcome toy_fixture() {
  Outcome o;
  TrialConfig c;
  c.human.kind = HumanSpec::Kind::Script;
  c.human.script = human::parse_script("reject\naccept\n");
  c.alpha = 0.3;
  c.q_samples = 10;
  TrialHooks hooks;
  hooks.costs = std::make_shared<q::FixedCostModel>(std::vector<double>{-10, -6, -20, -60, -2},
                                                    std::vector<double>{-9.6, -7.2, -13.2, -2.4, -2.4});
  const auto log = run_trial(c, hooks).log;
  std::vector<std::string> allocs;
  double p_after = -1;
  bool seen_reject = false;
  for (const auto& r : log.records) {
    if (r.kind == RecordKind::Allocation) allocs.push_back(r.payload.at("assignment").get<std::string>());
    if (r.kind == RecordKind::PHelp && r.payload.at("cause") == "reject" && !seen_reject) {
      seen_reject = true;
      p_after = r.payload.at("value").get<double>();
    }
  }
  o.require(allocs.size() >= 2, "fewer than two allocation records");
  if (allocs.size() >= 2) {
    o.require(allocs[0] == "HHHHH", "t=0 allocation " + allocs[0]);
    o.require(allocs[1] == "RRHHR", "post-rejection allocation " + allocs[1]);
    o.require(allocs[1].size() == 5 && allocs[1][3] == 'H', "infeasible step not H");
  }
  o.require(p_after == 0.25, "p_help after rejection " + fmt("%.4f", p_after));
  if (o.pass) o.detail = "HHHHH -> p_help 0.25 -> RRHHR";
  return o;
}

// 3 ------------------------------------------------------------------------

Outcome q_convergence() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto& sc = task::builtin_scenarios().at(0);
  const auto prim = world::PhysicalPrimitive::parse("pickplace(bowl, coffee_table)");
  double worst = 0;
  std::uint64_t seed = 1;
  for (double p : {0.0, 0.3, 0.5, 0.8, 1.0}) {
    for (double d : {5.0, 10.0, 20.0}) {
      world::AgentProfile profile;
      profile.fallback = {p, world::DurationDist::constant(d), 0.0};
      Rng rng(seed++);
      q::RobotQTable table(60);
      table.add(q::collect_samples(profile, sc.initial, prim, 10000, rng));
      const double got = q::robot_q(table, sc.initial, prim);
      const double want = -(p * d + (1 - p) * 60.0);
      const double rel = std::abs(got - want) / std::abs(want);
      worst = std::max(worst, rel);
      o.require(rel <= 0.01, "p=" + fmt("%.1f", p) + " d=" + fmt("%.0f", d) + " rel err " + fmt("%.4f", rel));
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "runtime " + fmt("%.2f", secs) + " s");
  if (o.pass) o.detail = "15 profiles, worst rel err " + fmt("%.5f", worst) + ", " + fmt("%.2f", secs) + " s";
  return o;
}

// 4 ------------------------------------------------------------------------

Outcome trend() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto grid = SuiteGrid::from_json(json::parse(R"({"scenarios": ["task-1"], "methods": ["micobot", "h_init"],
      "p_tilde": [0.0, 0.3, 0.7, 1.0], "moods": ["positive", "negative"], "seeds": 50})"));
  const auto report = run_suite(grid, 1);
  std::map<std::string, std::map<std::string, std::map<double, double>>> rate;  // method, mood, p
  for (const auto& c : report.cells) {
    o.require(c.errors == 0, c.method + " errors: " + c.first_error);
    rate[c.method][std::string(human::to_string(c.human.mood))][c.human.p_tilde] = c.success.mean;
  }
  std::string table;
  for (const char* mood : {"positive", "negative"}) {
    const auto& mb = rate["micobot"][mood];
    const auto& hi = rate["h_init"][mood];
    double prev = -1;
    table += std::string(table.empty() ? "" : " | ") + mood + " micobot";
    for (double p : {0.0, 0.3, 0.7, 1.0}) {
      const double v = mb.at(p);
      table += " " + fmt("%.2f", v);
      o.require(v >= prev, std::string(mood) + ": success decreases at p=" + fmt("%.1f", p));
      prev = v;
    }
    table += " h_init";
    for (double p : {0.0, 0.3, 0.7, 1.0}) table += " " + fmt("%.2f", hi.at(p));
    o.require(mb.at(1.0) >= 0.9, std::string(mood) + ": success at 1.0 is " + fmt("%.2f", mb.at(1.0)));
    for (double p : {0.3, 0.7}) {
      o.require(mb.at(p) - hi.at(p) >= 0.30,
                std::string(mood) + ": h_init gap at p=" + fmt("%.1f", p) + " is " + fmt("%.2f", mb.at(p) - hi.at(p)));
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 300.0, "runtime " + fmt("%.1f", secs) + " s");
  o.detail = (o.pass ? "" : o.detail + " :: ") + table + ", " + fmt("%.1f", secs) + " s";
  return o;
}

// 5 ------------------------------------------------------------------------

class AllRobotTransport : public llm::ChatTransport {
 public:
  llm::TransportReply post(const std::string& body, const std::string&, double) override {
    const auto ctx = json::parse(json::parse(body).at("messages").at(1).at("content").get<std::string>());
    const auto n = ctx.at("plan").at("steps").size() - ctx.at("current_step").get<std::size_t>();
    const json reply = {{"choices", json::array({json{{"message", {{"content", std::string(n, 'R')}}}}})}};
    return {true, 200, reply.dump(), ""};
  }
};

class ClosingHuman : public human::HumanAgent {
 public:
  human::HumanTurn turn(const human::Observation&) override { throw human::SessionClosed("closed"); }
};

int terminations(const TrialLog& log) {
  int n = 0;
  for (const auto& r : log.records) n += r.kind == RecordKind::Termination ? 1 : 0;
  return n;
}

Outcome termination_totality() {
  Outcome o;
  const auto reliable = write_variant("acceptance-reliable.scn", {{"irrecoverable 0\\.1", "irrecoverable 0"}});
  const auto fragile = write_variant("acceptance-fragile.scn",
                                     {{"\n0 0\\.95\n", "\n0 0.01\n"}, {"irrecoverable 0\\.1", "irrecoverable 1"}});
  auto scripted = [&](const std::string& script, const std::string& method = "micobot") {
    TrialConfig c;
    c.scenario = reliable;
    c.method = Method::parse(method);
    c.human.kind = HumanSpec::Kind::Script;
    c.human.script = human::parse_script(script);
    c.q_samples = 100;
    return c;
  };
  auto check = [&](const std::string& name, const TrialResult& r, TerminationReason want) {
    o.require(r.metrics.termination == want, name + " ended " + std::string(to_string(r.metrics.termination)));
    o.require(terminations(r.log) == 1, name + " has " + std::to_string(terminations(r.log)) + " termination records");
    try {
      r.log.validate();
    } catch (const std::exception& e) {
      o.require(false, name + ": " + e.what());
    }
  };

  // (a)
  {
    TrialConfig c = scripted("");
    c.scenario = fragile;
    c.seed = 1;
    check("(a)", run_trial(c), TerminationReason::IrrecoverableFailure);
  }
  // (b) exact 4T cutoff
  {
    TrialHooks hooks;
    hooks.policy = [](const PolicyContext&) {
      meta::RobotDecision d;
      d.kind = meta::RobotDecision::Kind::Wait;
      return d;
    };
    const auto r = run_trial(scripted(""), hooks);
    check("(b)", r, TerminationReason::StepLimit);
    o.require(r.log.records.back().env_step == 20, "(b) cutoff at " + std::to_string(r.log.records.back().env_step));
    for (std::size_t i = 0; i + 1 < r.log.records.size(); ++i) {
      if (r.log.records[i].env_step >= 20) o.require(false, "(b) record at env_step >= 4T");
    }
  }
  // (c)
  {
    auto c = scripted("", "llm_proxy");
    c.llm.enabled = true;
    c.llm.capabilities = {llm::Capability::Allocate};
    TrialHooks hooks;
    hooks.transport = std::make_shared<AllRobotTransport>();
    check("(c)", run_trial(c, hooks), TerminationReason::InfeasibleToRobot);
  }
  // (d) two consecutive refusals
  check("(d)", run_trial(scripted("reject\nreject\n")), TerminationReason::HumanRefusedTwice);
  // (e)
  check("(e)", run_trial(scripted("accept\naccept\naccept\naccept\n")), TerminationReason::PlanComplete);
  // aborted
  {
    TrialHooks hooks;
    hooks.human = std::make_shared<ClosingHuman>();
    check("aborted", run_trial(scripted(""), hooks), TerminationReason::Aborted);
  }
  // Sweep: one termination record per trial.
  int trials = 0;
  for (const char* m : {"micobot", "random", "recb:0.4", "llm_proxy", "h_init", "r_init", "no_phelp", "no_hierarchy"}) {
    for (double p : {0.0, 0.3, 0.7, 1.0}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TrialConfig c;
        c.method = Method::parse(m);
        c.human.params.p_tilde = p;
        c.human.params.mood = seed % 2 ? human::Mood::Negative : human::Mood::Positive;
        c.seed = seed;
        c.q_samples = 50;
        const auto r = run_trial(c);
        ++trials;
        if (terminations(r.log) != 1 || r.log.records.back().kind != RecordKind::Termination) {
          o.require(false, std::string(m) + " seed " + std::to_string(seed) + " lacks a single final termination");
        }
      }
    }
  }
  std::filesystem::remove(reliable);
  std::filesystem::remove(fragile);
  if (o.pass) o.detail = "rules (a)-(e) and abort, 4T = 20, " + std::to_string(trials) + " sweep trials";
  return o;
}

// 6 ------------------------------------------------------------------------

Outcome p_help_fuzz() {
  Outcome o;
  o.require(dialog::PHelpEstimate{}.value() == 0.5, "fresh estimate is not 0.5");
  Rng rng(77);
  const auto& plan = task::builtin_scenarios().at(0).plan;
  const std::vector<dialog::Act> acts = {dialog::Act::Accept,    dialog::Act::Reject,     dialog::Act::ConditionalAccept,
                                         dialog::Act::Smalltalk, dialog::Act::Acknowledge, dialog::Act::Silence};
  long events = 0, strict_checks = 0;
  for (int seq = 0; seq < 100000 && o.pass; ++seq) {
    dialog::PHelpEstimate e;
    const int len = rng.uniform_int(1, 20);
    for (int k = 0; k < len; ++k) {
      dialog::DialogEvent ev;
      ev.initiator = Agent::Human;
      ev.act = gen::pick(rng, acts);
      const int b = rng.uniform_int(0, plan.size() - 1);
      ev.step_refs = {{b, std::min(plan.size(), b + rng.uniform_int(1, 2))}};
      ev.sentiment = static_cast<dialog::Sentiment>(rng.uniform_int(-1, 1));
      const auto next = dialog::update_p_help(e, ev);
      ++events;
      const double v = next.value();
      if (!(v >= dialog::PHelpEstimate::kMin && v <= dialog::PHelpEstimate::kMax)) {
        o.require(false, "value " + fmt("%.4f", v) + " out of bounds");
      }
      if (ev.act == dialog::Act::Reject || ev.act == dialog::Act::Accept || ev.act == dialog::Act::ConditionalAccept) {
        // Strict on the unclamped estimate with the offset held; the clamped
        // value may only saturate, never move the wrong way.
        auto raw = [&](const dialog::PHelpEstimate& x) {
          return (x.accepts + 1.0) / (x.accepts + x.rejects + 2.0) + e.offset;
        };
        const bool up = ev.act != dialog::Act::Reject;
        const double before = raw(e), after = raw(next);
        ++strict_checks;
        if (up ? !(after > before) : !(after < before)) {
          o.require(false, std::string(up ? "acceptance" : "rejection") + " moved raw " + fmt("%.4f", before) +
                               " to " + fmt("%.4f", after));
        }
        if (up ? v < e.value() : v > e.value()) {
          o.require(false, std::string(up ? "acceptance" : "rejection") + " moved the clamped value the wrong way");
        }
      }
      e = next;
    }
  }
  if (o.pass) {
    o.detail = "100000 sequences, " + std::to_string(events) + " events, " + std::to_string(strict_checks) +
               " strict checks";
  }
  return o;
}

// 7 ------------------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  int logs = 0;
  for (const char* m : {"micobot", "random", "recb:0.5", "llm_proxy", "h_init", "r_init", "no_phelp", "no_hierarchy"}) {
    for (std::uint64_t seed : {0u, 7u, 123456789u}) {
      TrialConfig c;
      c.method = Method::parse(m);
      c.human.params.p_tilde = 0.3 + 0.2 * static_cast<double>(seed % 3);
      c.human.params.mood = seed % 2 ? human::Mood::Negative : human::Mood::Positive;
      c.seed = seed;
      c.q_samples = 200;
      const auto a = run_trial(c).log.serialize();
      const auto b = run_trial(c).log.serialize();
      o.require(a == b, std::string(m) + " seed " + std::to_string(seed) + " differs on rerun");
      const auto rep = replay(a);
      o.require(rep.identical, std::string(m) + " replay differs at line " + std::to_string(rep.first_difference));
      ++logs;
    }
  }
  const auto grid = SuiteGrid::from_json(json::parse(R"({"methods": ["micobot", "recb:from:micobot", "random"],
      "p_tilde": [0.3, 0.7], "moods": ["positive", "negative"], "seeds": 5, "q_samples": 100})"));
  const auto r1 = run_suite(grid, 1);
  const auto r2 = run_suite(grid, 1);
  const auto r3 = run_suite(grid, 2);
  for (const auto* r : {&r2, &r3}) {
    o.require(r->report_csv() == r1.report_csv() && r->trials_csv() == r1.trials_csv() &&
                  r->scatter_csv() == r1.scatter_csv(),
              "suite report differs on rerun");
  }
  if (o.pass) o.detail = std::to_string(logs) + " logs rerun and replayed, 3 suite runs identical";
  return o;
}

// 8 ------------------------------------------------------------------------

class FailingTransport : public llm::ChatTransport {
 public:
  llm::TransportReply post(const std::string& body, const std::string&, double) override {
    if (json::parse(body).at("messages").at(0).at("content") == llm::preamble(llm::Capability::Strategy)) {
      ++strategy_calls;
    }
    ++calls;
    return {false, 500, "", "injected failure"};
  }
  int calls = 0;
  int strategy_calls = 0;
};

Outcome fault_recovery() {
  Outcome o;
  int trials = 0, derivations = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TrialConfig c;
    c.human.params.p_tilde = 0.7;
    c.seed = seed;
    c.q_samples = 100;
    c.llm.enabled = true;
    auto transport = std::make_shared<FailingTransport>();
    std::vector<meta::RecoveryReport> reports;
    TrialHooks hooks;
    hooks.transport = transport;
    hooks.on_recovery = [&](const meta::RecoveryReport& r) { reports.push_back(r); };
    const auto r = run_trial(c, hooks);
    ++trials;
    o.require(terminations(r.log) == 1, "seed " + std::to_string(seed) + " did not complete");
    for (const auto& rep : reports) {
      ++derivations;
      if (rep.attempts != meta::kFullDialogAttempts + meta::kDroppedDialogAttempts ||
          rep.dropped_dialog_attempts != meta::kDroppedDialogAttempts || !rep.fallback) {
        o.require(false, "recovery schedule " + std::to_string(rep.attempts) + "/" +
                             std::to_string(rep.dropped_dialog_attempts));
      }
    }
    if (transport->strategy_calls != 5 * static_cast<int>(reports.size())) {
      o.require(false, "strategy calls " + std::to_string(transport->strategy_calls) + " for " +
                           std::to_string(reports.size()) + " derivations");
    }
    // With every call failing the trial matches the rule-only run.
    TrialConfig plain = c;
    plain.llm.enabled = false;
    const auto base = run_trial(plain);
    if (base.metrics.to_json() != r.metrics.to_json()) {
      o.require(false, "seed " + std::to_string(seed) + " metrics differ from the rule-only run");
    }
  }
  o.require(derivations > 0, "no strategy derivations happened");
  if (o.pass) {
    o.detail = std::to_string(trials) + " trials, " + std::to_string(derivations) + " derivations at 3 + 2 then fallback";
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"allocator-matches-greedy", allocator_vs_greedy},
      {"toy-fixture-allocations", toy_fixture},
      {"q-estimate-convergence", q_convergence},
      {"simulation-trend", trend},
      {"termination-totality", termination_totality},
      {"p-help-monotone-bounded", p_help_fuzz},
      {"determinism-replay", determinism},
      {"fault-recovery", fault_recovery},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
