#include "micobot/meta/planner.hpp"

#include <algorithm>

#include "micobot/text.hpp"

namespace micobot::meta {

using alloc::Constraint;
using dialog::Act;
using dialog::DialogEvent;

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::Proceed: return "proceed";
    case Policy::NegotiateFirst: return "negotiate_first";
    case Policy::Wait: return "wait";
  }
  return "?";
}

std::string_view to_string(RobotDecision::Kind k) {
  switch (k) {
    case RobotDecision::Kind::Physical: return "physical";
    case RobotDecision::Kind::Verbal: return "verbal";
    case RobotDecision::Kind::Wait: return "wait";
  }
  return "?";
}

std::string VerbalIntent::to_string() const {
  std::string s = std::string(dialog::to_string(act)) + " " + range.to_string();
  if (robot_part && human_part) s += " " + robot_part->to_string() + " " + human_part->to_string();
  return s;
}

namespace {

std::vector<std::string> tokens_of(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : text::split(text::trim(s), ' ')) {
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

StepRange parse_range_or_throw(const std::string& tok) {
  const auto r = StepRange::parse(tok);
  if (!r || r->empty()) throw InvalidProgram("bad step range '" + tok + "'");
  return *r;
}

VerbalIntent parse_intent(std::string_view clause) {
  const auto t = tokens_of(clause);
  if (t.size() != 2 && t.size() != 4) throw InvalidProgram("bad verbal act '" + std::string(clause) + "'");
  const auto act = dialog::parse_act(t[0]);
  if (!act) throw InvalidProgram("unknown act '" + t[0] + "'");
  VerbalIntent v;
  v.act = *act;
  v.range = parse_range_or_throw(t[1]);
  if (t.size() == 4) {
    v.robot_part = parse_range_or_throw(t[2]);
    v.human_part = parse_range_or_throw(t[3]);
  }
  return v;
}

Policy parse_policy(const std::string& name) {
  for (auto p : {Policy::Proceed, Policy::NegotiateFirst, Policy::Wait}) {
    if (to_string(p) == name) return p;
  }
  throw InvalidProgram("unknown policy '" + name + "'");
}

}  // namespace

std::string StrategyProgram::to_string() const {
  std::string s = "policy " + std::string(meta::to_string(policy));
  for (std::size_t i = 0; i < negotiation.size(); ++i) {
    s += (i == 0 ? " " : " + ") + negotiation[i].to_string();
  }
  for (const auto& d : deltas) {
    s += std::string("; ") + (d.op == ConstraintDelta::Op::Add ? "add " : "remove ") + d.constraint.to_string();
  }
  return s;
}

StrategyProgram StrategyProgram::parse(const std::string& text) {
  StrategyProgram p;
  bool have_policy = false;
  for (const auto& raw : text::split(text::trim(text), ';')) {
    const std::string clause(text::trim(raw));
    if (clause.empty()) throw InvalidProgram("empty clause");
    const auto sp = clause.find(' ');
    const std::string head = clause.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : std::string(text::trim(clause.substr(sp + 1)));
    if (head == "policy") {
      if (have_policy) throw InvalidProgram("more than one policy clause");
      have_policy = true;
      const auto sp2 = rest.find(' ');
      p.policy = parse_policy(rest.substr(0, sp2));
      if (sp2 != std::string::npos) {
        for (const auto& a : text::split(rest.substr(sp2 + 1), '+')) p.negotiation.push_back(parse_intent(a));
      }
    } else if (head == "add" || head == "remove") {
      const auto c = Constraint::parse(rest);
      if (!c) throw InvalidProgram("bad constraint '" + rest + "'");
      p.deltas.push_back({head == "add" ? ConstraintDelta::Op::Add : ConstraintDelta::Op::Remove, *c});
    } else {
      throw InvalidProgram("unknown clause '" + head + "'");
    }
  }
  if (!have_policy) throw InvalidProgram("missing policy clause");
  return p;
}

void StrategyProgram::validate(const task::PlanSpec& plan) const {
  const int t = plan.size();
  auto in_plan = [&](const StepRange& r, const std::string& what) {
    if (r.empty() || r.begin < 0 || r.end > t) {
      throw InvalidProgram(what + " references steps " + r.to_string() + " outside the plan");
    }
  };
  for (const auto& d : deltas) {
    in_plan(d.constraint.range, "constraint");
    if (d.constraint.kind == Constraint::Kind::Split &&
        (d.constraint.boundary < d.constraint.range.begin || d.constraint.boundary > d.constraint.range.end)) {
      throw InvalidProgram("split boundary outside its range");
    }
  }
  if (policy == Policy::NegotiateFirst && negotiation.empty()) {
    throw InvalidProgram("negotiate_first needs at least one verbal act");
  }
  if (policy != Policy::NegotiateFirst && !negotiation.empty()) {
    throw InvalidProgram("verbal acts are only allowed with negotiate_first");
  }
  for (const auto& v : negotiation) {
    if (v.act != Act::AskHelp && v.act != Act::ProposeSplit && v.act != Act::InformLimitation) {
      throw InvalidProgram(std::string("act ") + std::string(dialog::to_string(v.act)) + " cannot open a negotiation");
    }
    in_plan(v.range, "verbal act");
    if (v.act == Act::ProposeSplit) {
      if (!v.robot_part || !v.human_part) throw InvalidProgram("propose_split needs robot and human parts");
      in_plan(*v.robot_part, "propose_split");
      in_plan(*v.human_part, "propose_split");
      if (v.robot_part->overlaps(*v.human_part)) throw InvalidProgram("propose_split parts overlap");
    }
  }
}

void PlannerState::validate(const task::PlanSpec& plan) const {
  if (current_step < 0 || current_step > plan.size()) {
    throw ValidationError("planner.current_step", "outside [0, T]");
  }
  if (consecutive_infeasible_robot < 0) throw ValidationError("planner.counters", "negative counter");
  for (const auto& [step, n] : infeasible_refusals) {
    if (n < 0) throw ValidationError("planner.counters", "negative refusal count");
  }
}

StepRange feasible_prefix(const task::PlanSpec& plan, StepRange bundle) {
  StepRange r{bundle.begin, bundle.begin};
  while (r.end < bundle.end && !plan.robot_infeasible(r.end)) ++r.end;
  return r;
}

namespace {

bool has_infeasible(const task::PlanSpec& plan, StepRange r) {
  for (int i = r.begin; i < r.end; ++i) {
    if (plan.robot_infeasible(i)) return true;
  }
  return false;
}

void add(StrategyProgram& p, Constraint c) { p.deltas.push_back({ConstraintDelta::Op::Add, std::move(c)}); }
void remove(StrategyProgram& p, Constraint c) { p.deltas.push_back({ConstraintDelta::Op::Remove, std::move(c)}); }

/// Split arrangement as constraints: a boundary constraint when the robot
/// part directly precedes the human part, else two assignments.
void add_split(StrategyProgram& p, StepRange robot, StepRange human) {
  if (robot.end == human.begin) {
    add(p, Constraint::split(StepRange{robot.begin, human.end}, human.begin));
  } else {
    add(p, Constraint::assign(robot, Agent::Robot));
    add(p, Constraint::assign(human, Agent::Human));
  }
}

std::vector<VerbalIntent> negotiation_for(const dialog::PendingRequest& req, const PlannerState& state,
                                          const task::PlanSpec& plan) {
  const StepRange target = req.human_range();
  const auto& bundle_step = plan.abstract_of(std::clamp(target.begin, 0, plan.size() - 1));
  const StepRange bundle{std::max(bundle_step.range.begin, state.current_step), bundle_step.range.end};
  if (!has_infeasible(plan, target)) return {VerbalIntent{Act::AskHelp, target, std::nullopt, std::nullopt}};
  const StepRange prefix = feasible_prefix(plan, bundle);
  if (!prefix.empty() && prefix.end < bundle.end) {
    const StepRange human{prefix.end, bundle.end};
    return {VerbalIntent{Act::ProposeSplit, bundle, prefix, human}};
  }
  return {VerbalIntent{Act::InformLimitation, target, std::nullopt, std::nullopt},
          VerbalIntent{Act::AskHelp, target, std::nullopt, std::nullopt}};
}

}  // namespace

StrategyProgram derive_program(const std::vector<DialogEvent>& latest_events, const PlannerState& state,
                               const task::PlanSpec& plan) {
  StrategyProgram p;
  for (const auto& e : latest_events) {
    if (e.initiator != Agent::Human) continue;
    const StepRange r = e.span();
    switch (e.act) {
      case Act::ClaimStep:
        if (!r.empty()) add(p, Constraint::assign(r, Agent::Human));
        p.policy = Policy::Proceed;
        p.negotiation.clear();
        break;
      case Act::DelegateStep:
      case Act::AskHelp:
        if (!r.empty()) add(p, Constraint::assign(r, Agent::Robot));
        p.policy = Policy::Proceed;
        p.negotiation.clear();
        break;
      case Act::Reject: {
        if (!state.pending) break;
        const auto& req = *state.pending;
        const StepRange target = req.human_range();
        for (const auto& c : state.constraints) {
          if (c.kind == Constraint::Kind::Assign && c.agent == Agent::Human && c.range.overlaps(target)) {
            remove(p, c);
          }
        }
        if (!state.episode_negotiated) {
          p.policy = Policy::NegotiateFirst;
          p.negotiation = negotiation_for(req, state, plan);
        } else {
          add(p, Constraint::forbid(target, Agent::Human));
          p.policy = Policy::Proceed;
          p.negotiation.clear();
        }
        break;
      }
      case Act::ConditionalAccept:
      case Act::ProposeSplit:
        if (e.robot_part && e.human_part) add_split(p, *e.robot_part, *e.human_part);
        p.policy = Policy::Proceed;
        p.negotiation.clear();
        break;
      case Act::Accept:
        if (state.pending && state.pending->robot_part && state.pending->human_part) {
          add_split(p, *state.pending->robot_part, *state.pending->human_part);
        }
        p.policy = Policy::Proceed;
        p.negotiation.clear();
        break;
      case Act::InformLimitation:
        if (!r.empty()) add(p, Constraint::forbid(r, Agent::Human));
        break;
      case Act::Acknowledge:
      case Act::Smalltalk:
      case Act::Silence:
        break;
    }
  }
  return p;
}

void apply_program(PlannerState& state, const StrategyProgram& program, const std::string& origin) {
  for (const auto& d : program.deltas) {
    Constraint c = d.constraint;
    if (d.op == ConstraintDelta::Op::Remove) {
      std::erase_if(state.constraints, [&](const Constraint& x) {
        return x.kind == c.kind && x.range == c.range && x.agent == c.agent && x.boundary == c.boundary;
      });
      continue;
    }
    c.origin = origin;
    // Normalize: a new assign/forbid replaces any assign/forbid on the same
    // range, so the latest statement about a range wins.
    std::erase_if(state.constraints, [&](const Constraint& x) {
      if (x.range != c.range) return false;
      if (x.kind == Constraint::Kind::Split || c.kind == Constraint::Kind::Split) {
        return x.kind == c.kind && x.boundary == c.boundary;
      }
      return true;
    });
    state.constraints.push_back(c);
  }
  state.negotiation = program.policy == Policy::NegotiateFirst ? program.negotiation : std::vector<VerbalIntent>{};
  state.wait_requested = program.policy == Policy::Wait;
}

StrategyProgram derive_with_recovery(ProgramSource* source, const std::vector<DialogEvent>& events,
                                     const PlannerState& state, const task::PlanSpec& plan,
                                     RecoveryReport* report) {
  RecoveryReport local;
  RecoveryReport& rep = report ? *report : local;
  rep = {};
  if (!source) return derive_program(events, state, plan);

  auto attempt = [&](const std::vector<DialogEvent>& input) -> std::optional<StrategyProgram> {
    ++rep.attempts;
    const auto text = source->derive(input, state, plan);
    if (!text) return std::nullopt;
    try {
      auto prog = StrategyProgram::parse(*text);
      prog.validate(plan);
      return prog;
    } catch (const InvalidProgram&) {
      return std::nullopt;
    }
  };

  for (int i = 0; i < kFullDialogAttempts; ++i) {
    if (auto p = attempt(events)) return *p;
  }
  std::vector<DialogEvent> reduced = events;
  for (auto it = reduced.rbegin(); it != reduced.rend(); ++it) {
    if (it->initiator == Agent::Human) {
      reduced.erase(std::next(it).base());
      break;
    }
  }
  for (int i = 0; i < kDroppedDialogAttempts; ++i) {
    ++rep.dropped_dialog_attempts;
    if (auto p = attempt(reduced)) return *p;
  }
  rep.fallback = true;
  return derive_program(events, state, plan);
}

bool absorb_human_event(PlannerState& state, const DialogEvent& event, const task::PlanSpec& plan,
                        bool pin_p_help) {
  state.history.push_back(event);
  if (!pin_p_help) state.p_help = dialog::update_p_help(state.p_help, event);
  if (!state.pending) return false;
  auto& req = *state.pending;
  bool refused_infeasible = false;
  switch (event.act) {
    case Act::Accept:
    case Act::ConditionalAccept:
      req.accepted = true;
      if (event.act == Act::ConditionalAccept && event.human_part) {
        req.robot_part = event.robot_part;
        req.human_part = event.human_part;
      }
      state.current_episode = 0;
      state.episode_negotiated = false;
      state.episode_rejections = 0;
      break;
    case Act::Reject: {
      const StepRange target = req.human_range();
      for (int i = target.begin; i < target.end; ++i) {
        if (plan.robot_infeasible(i)) {
          ++state.infeasible_refusals[i];
          refused_infeasible = true;
        }
      }
      ++state.episode_rejections;
      if (state.episode_negotiated) {
        state.current_episode = 0;
        state.episode_negotiated = false;
        state.episode_rejections = 0;
      }
      state.pending.reset();
      break;
    }
    default:
      break;
  }
  return refused_infeasible;
}

RobotDecision select_next_action(const PlannerState& state, const alloc::Assignment& allocation,
                                 const task::PlanSpec& plan, const SelectOptions& options) {
  const int c = state.current_step;
  if (c >= plan.size()) throw PlanExhausted("every plan step is complete");
  if (allocation.first_step > c || allocation.first_step + allocation.size() < plan.size()) {
    throw ValidationError("allocation", "does not cover the remaining steps");
  }
  const auto human_at = [&](int i) { return allocation.at(i) == Agent::Human; };

  RobotDecision d;
  if (!state.negotiation.empty()) {
    d.consumed_negotiation = true;
    std::vector<VerbalIntent> live;
    bool relevant = false;
    for (auto v : state.negotiation) {
      v.range.begin = std::max(v.range.begin, c);
      if (v.human_part) v.human_part->begin = std::max(v.human_part->begin, c);
      if (v.robot_part) v.robot_part->begin = std::max(v.robot_part->begin, c);
      if (v.range.empty()) continue;
      const StepRange h = v.human_range();
      for (int i = h.begin; i < h.end; ++i) relevant = relevant || human_at(i);
      live.push_back(v);
    }
    if (relevant) {
      d.kind = RobotDecision::Kind::Verbal;
      d.utterances = live;
      return d;
    }
  }
  if (state.wait_requested) {
    d.kind = RobotDecision::Kind::Wait;
    return d;
  }
  if (!human_at(c)) {
    d.kind = RobotDecision::Kind::Physical;
    d.step = c;
    return d;
  }
  if (state.pending) {
    d.kind = RobotDecision::Kind::Wait;
    return d;
  }
  const auto& a = plan.abstract_of(c);
  int end = c + 1;
  if (options.use_hierarchy) {
    bool all_h = true;
    for (int i = c; i < a.range.end; ++i) all_h = all_h && human_at(i);
    if (all_h) {
      end = a.range.end;
    } else {
      while (end < a.range.end && human_at(end)) ++end;
    }
  }
  d.kind = RobotDecision::Kind::Verbal;
  d.utterances = {VerbalIntent{Act::AskHelp, StepRange{c, end}, std::nullopt, std::nullopt}};
  return d;
}

}  // namespace micobot::meta
