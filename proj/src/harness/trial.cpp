#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "micobot/harness/trial.hpp"
#include "micobot/text.hpp"

namespace micobot::harness {

using nlohmann::json;
using dialog::Act;
using dialog::DialogEvent;
using meta::RobotDecision;

namespace {

/// Answers every request with yes and does what it agreed to.
class CompliantHuman final : public human::HumanAgent {
 public:
  human::HumanTurn turn(const human::Observation& obs) override {
    human::HumanTurn t;
    if (obs.pending && !obs.pending->accepted && obs.pending->request_id != answered_) {
      answered_ = obs.pending->request_id;
      t.utterance = "Ok, I will do that now!";
      commitments_.push_back(obs.pending->human_range());
    }
    int c = obs.current_step;
    while (std::any_of(commitments_.begin(), commitments_.end(), [&](StepRange r) { return r.contains(c); })) {
      t.perform.push_back(c++);
    }
    std::erase_if(commitments_, [&](StepRange r) { return r.end <= c; });
    return t;
  }

 private:
  int answered_ = 0;
  std::vector<StepRange> commitments_;
};

json range_json(const std::optional<StepRange>& r) { return r ? json(r->to_string()) : json(nullptr); }

json refs_json(const std::vector<StepRange>& refs) {
  json a = json::array();
  for (const auto& r : refs) a.push_back(r.to_string());
  return a;
}

bool is_response(Act a) { return a == Act::Accept || a == Act::Reject || a == Act::ConditionalAccept; }

/// Walkable cell next to the furniture's footprint closest to `from`.
std::optional<world::Cell> cell_next_to(const world::GridWorld& w, const std::string& furniture, world::Cell from) {
  const auto& f = w.find_furniture(furniture);
  std::optional<world::Cell> best;
  long best_d = std::numeric_limits<long>::max();
  for (const auto& c : f.cells) {
    for (auto [dx, dy] : {std::pair{0, 1}, {0, -1}, {1, 0}, {-1, 0}}) {
      const world::Cell n{c.x + dx, c.y + dy};
      if (!w.in_bounds(n) || !w.walkable(n)) continue;
      const long d = static_cast<long>(n.x - from.x) * (n.x - from.x) + static_cast<long>(n.y - from.y) * (n.y - from.y);
      if (d < best_d || (d == best_d && *best > n)) {
        best_d = d;
        best = n;
      }
    }
  }
  return best;
}

class Trial {
 public:
  Trial(const TrialConfig& cfg, const TrialHooks& hooks)
      : cfg_(cfg),
        hooks_(hooks),
        scenario_(task::resolve_scenario(cfg.scenario)),
        plan_(scenario_.plan),
        human_costs_(q::HumanCostModel::for_scenario(scenario_)),
        state_(scenario_.initial),
        robot_rng_(Rng::derive(cfg.seed, 1)),
        method_rng_(Rng::derive(cfg.seed, 2)) {
    cfg_.validate();
    scenario_.validate();
    log_.config = cfg_.to_json();
    log_.plan_size = plan_.size();
    setup_costs();
    setup_human();
    setup_adapter();
    if (cfg_.method.kind == MethodKind::Recb) {
      for (int i = 0; i < plan_.size(); ++i) {
        recb_.push_back(method_rng_.bernoulli(cfg_.method.p_c) ? Agent::Human : Agent::Robot);
      }
    }
  }

  TrialResult run() {
    emit(0, "system", RecordKind::PHelp, phelp_payload("initial"));
    last_p_ = ps_.p_help;
    const int limit = cfg_.max_step_multiplier * plan_.size();
    try {
      for (int k = 0; k < limit && !done_; ++k) step(k);
      if (!done_) terminate(limit, TerminationReason::StepLimit);
    } catch (const human::SessionClosed&) {
      if (!done_) terminate(env_step_, TerminationReason::Aborted);
    }
    TrialResult r;
    r.metrics = compute_metrics(log_);
    r.log = std::move(log_);
    return r;
  }

 private:
  bool family() const { return cfg_.method.micobot_family(); }

  void setup_costs() {
    if (hooks_.costs) {
      costs_ = hooks_.costs;
      return;
    }
    auto table = std::make_shared<q::RobotQTable>(q::build_robot_table(scenario_, cfg_.q_samples, cfg_.q_seed));
    costs_ = std::make_shared<q::ScenarioCostModel>(scenario_, table);
  }

  void setup_human() {
    if (cfg_.method.kind == MethodKind::Recb) {
      human_ = std::make_shared<CompliantHuman>();
      return;
    }
    if (hooks_.human) {
      human_ = hooks_.human;
      return;
    }
    switch (cfg_.human.kind) {
      case HumanSpec::Kind::Simulated: {
        auto p = cfg_.human.params;
        p.seed = Rng::derive(cfg_.seed, 3).next_u64();
        human_ = std::make_shared<human::SimulatedHuman>(p, cfg_.method.kind != MethodKind::RInit);
        break;
      }
      case HumanSpec::Kind::Script:
        human_ = std::make_shared<human::FixtureHuman>(cfg_.human.script);
        break;
      case HumanSpec::Kind::Interactive:
        throw ConfigError("interactive trials need a live session");
    }
  }

  void setup_adapter() {
    if (!cfg_.llm.enabled) return;
    adapter_ = std::make_unique<llm::LlmAdapter>(cfg_.llm, hooks_.transport);
    llm::install_dialog_hooks(engine_, *adapter_);
    if (family() && adapter_->enabled(llm::Capability::Strategy)) {
      source_ = std::make_unique<llm::AdapterProgramSource>(*adapter_);
    }
  }

  void emit(int env_step, std::string actor, RecordKind kind, json payload) {
    LogRecord r{env_step, std::move(actor), kind, std::move(payload)};
    if (hooks_.on_record) hooks_.on_record(r);
    log_.records.push_back(std::move(r));
  }

  json phelp_payload(const std::string& cause) const {
    return {{"value", ps_.p_help.value()},
            {"accepts", ps_.p_help.accepts},
            {"rejects", ps_.p_help.rejects},
            {"offset", ps_.p_help.offset},
            {"cause", cause}};
  }

  void terminate(int env_step, TerminationReason reason) {
    done_ = true;
    emit(env_step, "system", RecordKind::Termination,
         {{"reason", std::string(to_string(reason))},
          {"steps_completed", ps_.current_step},
          {"plan_size", plan_.size()},
          {"success", reason == TerminationReason::PlanComplete}});
  }

  // Allocation ----------------------------------------------------------

  alloc::Assignment planner_allocation(json& payload) {
    alloc::AllocationProblem prob;
    prob.first_step = ps_.current_step;
    world::SymbolicState s = state_;
    for (int i = ps_.current_step; i < plan_.size(); ++i) {
      prob.q_robot.push_back(costs_->robot_cost(s, i));
      prob.q_human.push_back(costs_->human_cost(s, i));
      prob.robot_infeasible.push_back(plan_.robot_infeasible(i));
      s = world::apply_effect(s, plan_.steps[static_cast<std::size_t>(i)]);
    }
    prob.p_help = {cfg_.method.kind == MethodKind::NoPhelp ? 1.0 : ps_.p_help.value()};
    prob.alpha = cfg_.alpha;
    prob.strict = true;
    prob.constraints = alloc::clip_constraints(ps_.constraints, prob.first_step, prob.end_step());
    const auto res = alloc::solve(prob);
    json relaxed = json::array();
    for (const auto& c : res.relaxed) relaxed.push_back(c.to_string());
    payload["objective"] = res.objective;
    payload["relaxed"] = relaxed;
    payload["source"] = "planner";
    return res.assignment;
  }

  alloc::Assignment scripted_all_robot() const {
    alloc::Assignment a{ps_.current_step, {}};
    for (int i = ps_.current_step; i < plan_.size(); ++i) {
      const auto kind = plan_.steps[static_cast<std::size_t>(i)].kind;
      const bool advertised =
          std::find(scenario_.robot_skills.begin(), scenario_.robot_skills.end(), kind) != scenario_.robot_skills.end();
      a.agents.push_back(advertised ? Agent::Robot : Agent::Human);
    }
    return a;
  }

  alloc::Assignment allocate(json& payload) {
    const int c = ps_.current_step;
    switch (cfg_.method.kind) {
      case MethodKind::Random: {
        alloc::Assignment a{c, {}};
        for (int i = c; i < plan_.size(); ++i) a.agents.push_back(method_rng_.bernoulli(0.5) ? Agent::Human : Agent::Robot);
        payload["source"] = "random";
        return a;
      }
      case MethodKind::Recb:
        payload["source"] = "recb";
        return alloc::Assignment{c, std::vector<Agent>(recb_.begin() + c, recb_.end())};
      case MethodKind::LlmProxy: {
        if (adapter_ && adapter_->enabled(llm::Capability::Allocate)) {
          json ctx = llm::planner_context({}, ps_, plan_);
          ctx["alpha"] = cfg_.alpha;
          ctx["state"] = state_.canonical();
          auto r = adapter_->allocate(ctx, c, plan_.size() - c);
          if (llm::ok(r)) {
            payload["source"] = "llm";
            return std::get<alloc::Assignment>(r);
          }
        }
        payload["source"] = "fallback";
        return scripted_all_robot();
      }
      default:
        return planner_allocation(payload);
    }
  }

  // Steps ------------------------------------------------------------------

  json pose_json(const std::string& agent) const {
    const auto c = state_.agent_pose(agent);
    return json::array({c.x, c.y});
  }

  /// Applies the current step's effect and moves the agent next to its site.
  void advance(Agent who) {
    const auto& prim = plan_.steps[static_cast<std::size_t>(ps_.current_step)];
    state_ = world::apply_effect(state_, prim);
    const std::string& agent = who == Agent::Human ? scenario_.human_agent : scenario_.robot_agent;
    if (const auto site = state_.furniture_of(prim.primary_object())) {
      if (const auto cell = cell_next_to(scenario_.world, *site, state_.agent_pose(agent))) {
        state_.set_agent_pose(agent, *cell);
      }
    }
    ++ps_.current_step;
  }

  void finish_step() {
    if (ps_.pending && ps_.current_step >= ps_.pending->human_range().end) ps_.pending.reset();
    std::erase_if(ps_.constraints, [&](const alloc::Constraint& x) { return x.range.end <= ps_.current_step; });
    if (ps_.current_step >= plan_.size()) terminate(env_step_, TerminationReason::PlanComplete);
  }

  void robot_physical(int step) {
    if (step != ps_.current_step) throw ValidationError("decision", "robot may only execute the current step");
    const auto& prim = plan_.steps[static_cast<std::size_t>(step)];
    world::PrimitiveOutcome out;
    if (cfg_.method.kind == MethodKind::Recb) {
      out.succeeded = true;
      out.duration = scenario_.robot.lookup(prim).duration.sample(robot_rng_);
    } else {
      out = world::rollout_primitive(state_, prim, scenario_.robot, robot_rng_);
    }
    json payload = {{"step", step},
                    {"primitive", prim.to_string()},
                    {"succeeded", out.succeeded},
                    {"duration", out.duration},
                    {"terminal_failure", out.terminal_failure}};
    if (out.succeeded) {
      advance(Agent::Robot);
      payload["pose"] = pose_json(scenario_.robot_agent);
      emit(env_step_, "R", RecordKind::Physical, payload);
      finish_step();
    } else {
      payload["pose"] = pose_json(scenario_.robot_agent);
      emit(env_step_, "R", RecordKind::Physical, payload);
    }
    if (!out.succeeded && out.terminal_failure) {
      terminate(env_step_, TerminationReason::IrrecoverableFailure);
    }
  }

  void robot_say(const meta::VerbalIntent& v, bool negotiation, std::vector<std::string>& spoken) {
    DialogEvent e;
    e.turn_id = ps_.next_turn_id++;
    e.initiator = Agent::Robot;
    e.act = v.act;
    e.step_refs = {v.range};
    e.robot_part = v.robot_part;
    e.human_part = v.human_part;
    dialog::ToneContext tone{negotiation ? ps_.episode_rejections : 0};
    e.text = engine_.realize(v.act, e.step_refs, plan_, tone, v.robot_part, v.human_part);

    json request_id = nullptr;
    if (v.act == Act::AskHelp || v.act == Act::ProposeSplit) {
      if (!negotiation || ps_.current_episode == 0) {
        ps_.current_episode = ps_.next_episode++;
        ps_.episode_negotiated = false;
        ps_.episode_rejections = 0;
      }
      if (negotiation) ps_.episode_negotiated = true;
      dialog::PendingRequest p;
      p.request_id = ps_.next_request_id++;
      p.episode = ps_.current_episode;
      p.act = v.act;
      p.range = v.range;
      p.robot_part = v.robot_part;
      p.human_part = v.human_part;
      ps_.pending = p;
      request_id = p.request_id;
    }
    ps_.history.push_back(e);
    spoken.push_back(e.text);
    emit(env_step_, "R", RecordKind::Verbal,
         {{"act", std::string(dialog::to_string(e.act))},
          {"text", e.text},
          {"step_refs", refs_json(e.step_refs)},
          {"robot_part", range_json(e.robot_part)},
          {"human_part", range_json(e.human_part)},
          {"sentiment", "neutral"},
          {"request_id", request_id},
          {"episode", ps_.current_episode == 0 ? json(nullptr) : json(ps_.current_episode)},
          {"in_reply_to", nullptr},
          {"negotiation", negotiation}});
  }

  void robot_acknowledge(StepRange span, std::vector<std::string>& spoken) {
    DialogEvent e;
    e.turn_id = ps_.next_turn_id++;
    e.initiator = Agent::Robot;
    e.act = Act::Acknowledge;
    e.step_refs = {span};
    e.text = engine_.realize(Act::Acknowledge, e.step_refs, plan_);
    ps_.history.push_back(e);
    spoken.push_back(e.text);
    emit(env_step_, "R", RecordKind::Verbal,
         {{"act", "acknowledge"},
          {"text", e.text},
          {"step_refs", refs_json(e.step_refs)},
          {"robot_part", nullptr},
          {"human_part", nullptr},
          {"sentiment", "positive"},
          {"request_id", nullptr},
          {"episode", nullptr},
          {"in_reply_to", nullptr},
          {"negotiation", false}});
  }

  void human_utterance(const std::string& text, std::vector<std::string>& spoken) {
    dialog::ClassifyContext ctx{&plan_, ps_.current_step, ps_.pending};
    DialogEvent e = engine_.classify(text, ctx, ps_.next_turn_id++);
    e.initiator = Agent::Human;
    e.text = text;
    const bool reply = ps_.pending && !ps_.pending->accepted && is_response(e.act);
    json payload = {{"act", std::string(dialog::to_string(e.act))},
                    {"text", e.text},
                    {"step_refs", refs_json(e.step_refs)},
                    {"robot_part", range_json(e.robot_part)},
                    {"human_part", range_json(e.human_part)},
                    {"sentiment", std::string(dialog::to_string(e.sentiment))},
                    {"request_id", nullptr},
                    {"episode", reply ? json(ps_.pending->episode) : json(nullptr)},
                    {"in_reply_to", reply ? json(ps_.pending->request_id) : json(nullptr)},
                    {"negotiation", false}};

    std::optional<meta::StrategyProgram> program;
    if (family() && !hooks_.policy) {
      meta::RecoveryReport rep;
      program = meta::derive_with_recovery(source_.get(), {e}, ps_, plan_, &rep);
      if (hooks_.on_recovery) hooks_.on_recovery(rep);
      payload["strategy"] = program->to_string();
      if (source_) {
        payload["recovery"] = {{"attempts", rep.attempts},
                               {"dropped_dialog_attempts", rep.dropped_dialog_attempts},
                               {"fallback", rep.fallback}};
      }
    }
    emit(env_step_, "H", RecordKind::Verbal, payload);

    const bool refused = meta::absorb_human_event(ps_, e, plan_, cfg_.method.kind == MethodKind::NoPhelp);
    if (!(ps_.p_help == last_p_)) {
      emit(env_step_, "system", RecordKind::PHelp, phelp_payload(std::string(dialog::to_string(e.act))));
      last_p_ = ps_.p_help;
    }
    if (refused) {
      for (const auto& [step, n] : ps_.infeasible_refusals) {
        if (n >= 2) {
          terminate(env_step_, TerminationReason::HumanRefusedTwice);
          return;
        }
      }
    }
    if (program) meta::apply_program(ps_, *program, "env " + std::to_string(env_step_));
    if (family() && e.act == Act::ClaimStep) {
      const StepRange span = e.span();
      if (!span.empty() && span.end <= plan_.size()) robot_acknowledge(span, spoken);
    }
  }

  void human_perform(int step) {
    if (step != ps_.current_step || step >= plan_.size()) return;
    const auto& prim = plan_.steps[static_cast<std::size_t>(step)];
    const double seconds = q::human_seconds(human_costs_, scenario_.world, state_, prim, scenario_.human_agent);
    const int duration = std::max(1, static_cast<int>(std::ceil(seconds / human_costs_.seconds_per_timestep)));
    advance(Agent::Human);
    emit(env_step_, "H", RecordKind::Physical,
         {{"step", step},
          {"primitive", prim.to_string()},
          {"succeeded", true},
          {"duration", duration},
          {"seconds", seconds},
          {"terminal_failure", false},
          {"pose", pose_json(scenario_.human_agent)}});
    finish_step();
  }

  void step(int k) {
    env_step_ = k;
    json payload = json::object();
    const alloc::Assignment allocation = allocate(payload);
    payload["first_step"] = allocation.first_step;
    payload["assignment"] = allocation.to_string();
    json constraints = json::array();
    for (const auto& c : ps_.constraints) constraints.push_back(c.to_string());
    payload["constraints"] = constraints;
    if (payload != last_allocation_) {
      emit(k, "system", RecordKind::Allocation, payload);
      last_allocation_ = payload;
    }

    const int c = ps_.current_step;
    if (cfg_.method.kind != MethodKind::Recb && plan_.robot_infeasible(c) && allocation.at(c) == Agent::Robot) {
      if (++ps_.consecutive_infeasible_robot >= 2) {
        terminate(k, TerminationReason::InfeasibleToRobot);
        return;
      }
    } else {
      ps_.consecutive_infeasible_robot = 0;
    }

    RobotDecision d;
    if (hooks_.policy) {
      d = hooks_.policy(PolicyContext{scenario_, ps_, allocation, k});
    } else {
      d = meta::select_next_action(ps_, allocation, plan_, {cfg_.method.kind != MethodKind::NoHierarchy});
    }
    if (d.consumed_negotiation) ps_.negotiation.clear();
    if (cfg_.method.kind == MethodKind::HInit && d.kind == RobotDecision::Kind::Verbal) {
      d.kind = RobotDecision::Kind::Wait;
      d.utterances.clear();
    }

    std::vector<std::string> spoken;
    switch (d.kind) {
      case RobotDecision::Kind::Physical:
        robot_physical(d.step);
        break;
      case RobotDecision::Kind::Verbal:
        for (const auto& v : d.utterances) robot_say(v, d.consumed_negotiation, spoken);
        break;
      case RobotDecision::Kind::Wait:
        ps_.wait_requested = false;
        break;
    }
    if (done_) return;

    human::Observation obs{&scenario_, &state_, ps_.current_step, k, spoken, ps_.pending};
    const human::HumanTurn t = human_->turn(obs);
    if (!text::trim(t.utterance).empty()) {
      human_utterance(t.utterance, spoken);
      if (done_) return;
    }
    for (int s : t.perform) {
      human_perform(s);
      if (done_) return;
    }
  }

  TrialConfig cfg_;
  const TrialHooks& hooks_;
  task::TaskScenario scenario_;
  const task::PlanSpec& plan_;
  q::HumanCostModel human_costs_;
  std::shared_ptr<q::StepCostModel> costs_;
  std::shared_ptr<human::HumanAgent> human_;
  std::unique_ptr<llm::LlmAdapter> adapter_;
  std::unique_ptr<llm::AdapterProgramSource> source_;
  dialog::DialogEngine engine_;
  world::SymbolicState state_;
  meta::PlannerState ps_;
  dialog::PHelpEstimate last_p_;
  Rng robot_rng_;
  Rng method_rng_;
  std::vector<Agent> recb_;
  TrialLog log_;
  json last_allocation_;
  int env_step_ = 0;
  bool done_ = false;
};

}  // namespace

TrialResult run_trial(const TrialConfig& config, const TrialHooks& hooks) {
  Trial trial(config, hooks);
  return trial.run();
}

std::map<int, human::HumanTurn> recorded_human_turns(const TrialLog& log) {
  std::map<int, human::HumanTurn> turns;
  for (const auto& r : log.records) {
    if (r.actor != "H") continue;
    try {
      if (r.kind == RecordKind::Verbal) {
        turns[r.env_step].utterance = r.payload.at("text").get<std::string>();
      } else if (r.kind == RecordKind::Physical) {
        turns[r.env_step].perform.push_back(r.payload.at("step").get<int>());
      }
    } catch (const json::exception& e) {
      throw MalformedLog(std::string("human record: ") + e.what());
    }
  }
  return turns;
}

ReplayResult replay(const std::string& log_text) {
  const TrialLog log = TrialLog::parse(log_text);
  const TrialConfig cfg = TrialConfig::from_json(log.config);
  TrialHooks hooks;
  if (cfg.human.kind == HumanSpec::Kind::Interactive) {
    hooks.human = std::make_shared<human::RecordedHuman>(recorded_human_turns(log));
  }
  ReplayResult out;
  out.regenerated = run_trial(cfg, hooks).log.serialize();
  std::istringstream a(log_text);
  std::istringstream b(out.regenerated);
  std::string la;
  std::string lb;
  int line = 0;
  while (true) {
    ++line;
    const bool ha = static_cast<bool>(std::getline(a, la));
    const bool hb = static_cast<bool>(std::getline(b, lb));
    if (!ha && !hb) break;
    if (ha != hb || la != lb) {
      out.first_difference = line;
      break;
    }
  }
  out.identical = out.first_difference == 0 && log_text == out.regenerated;
  if (!out.identical && out.first_difference == 0) out.first_difference = line;
  return out;
}

}  // namespace micobot::harness
