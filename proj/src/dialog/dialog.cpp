#include <algorithm>
#include <fstream>
#include <sstream>

#include "micobot/dialog/dialog.hpp"
#include "micobot/text.hpp"

namespace micobot::dialog {

std::string_view to_string(Act act) {
  switch (act) {
    case Act::AskHelp: return "ask_help";
    case Act::Accept: return "accept";
    case Act::Reject: return "reject";
    case Act::ConditionalAccept: return "conditional_accept";
    case Act::ProposeSplit: return "propose_split";
    case Act::ClaimStep: return "claim_step";
    case Act::DelegateStep: return "delegate_step";
    case Act::InformLimitation: return "inform_limitation";
    case Act::Acknowledge: return "acknowledge";
    case Act::Smalltalk: return "smalltalk";
    case Act::Silence: return "silence";
  }
  return "?";
}

std::optional<Act> parse_act(std::string_view name) {
  for (auto a : kAllActs) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

bool needs_step_refs(Act act) {
  return act == Act::AskHelp || act == Act::ProposeSplit || act == Act::ClaimStep || act == Act::DelegateStep;
}

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::Negative: return "negative";
    case Sentiment::Neutral: return "neutral";
    case Sentiment::Positive: return "positive";
  }
  return "?";
}

std::optional<Sentiment> parse_sentiment(std::string_view name) {
  for (auto s : {Sentiment::Negative, Sentiment::Neutral, Sentiment::Positive}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

StepRange DialogEvent::span() const {
  if (step_refs.empty()) return {};
  StepRange r = step_refs.front();
  for (const auto& s : step_refs) {
    r.begin = std::min(r.begin, s.begin);
    r.end = std::max(r.end, s.end);
  }
  return r;
}

int DialogEvent::weight() const {
  int n = 0;
  for (const auto& r : step_refs) n += r.size();
  return std::max(n, 1);
}

void DialogEvent::validate(int plan_size) const {
  const std::string locus = "dialog_event." + std::string(to_string(act));
  if (needs_step_refs(act) && step_refs.empty()) throw ValidationError(locus, "missing step references");
  if (act == Act::Silence && !text.empty()) throw ValidationError(locus, "silence carries text");
  auto check = [&](const StepRange& r) {
    if (r.empty() || r.begin < 0 || r.end > plan_size) {
      throw ValidationError(locus, "step range " + r.to_string() + " outside the plan");
    }
  };
  for (const auto& r : step_refs) check(r);
  if (robot_part) check(*robot_part);
  if (human_part) check(*human_part);
  if ((act == Act::ProposeSplit || act == Act::ConditionalAccept) && robot_part && human_part &&
      robot_part->overlaps(*human_part)) {
    throw ValidationError(locus, "robot and human parts overlap");
  }
}

double PHelpEstimate::value() const {
  const double mean = static_cast<double>(accepts + 1) / static_cast<double>(accepts + rejects + 2);
  return std::clamp(mean + offset, kMin, kMax);
}

PHelpEstimate update_p_help(const PHelpEstimate& estimate, const DialogEvent& event) {
  PHelpEstimate e = estimate;
  if (event.initiator != Agent::Human) return e;
  switch (event.act) {
    case Act::Accept:
    case Act::ConditionalAccept:
    case Act::ClaimStep:
      e.accepts += event.weight();
      break;
    case Act::Reject:
      e.rejects += event.weight();
      break;
    case Act::Smalltalk:
    case Act::Acknowledge:
      if (event.sentiment == Sentiment::Positive) e.offset += PHelpEstimate::kOffsetStep;
      if (event.sentiment == Sentiment::Negative) e.offset -= PHelpEstimate::kOffsetStep;
      e.offset = std::clamp(e.offset, -PHelpEstimate::kOffsetBound, PHelpEstimate::kOffsetBound);
      break;
    default:
      break;
  }
  return e;
}

TemplateSet TemplateSet::defaults() {
  TemplateSet t;
  t.templates_ = {
      {"ask_help", "Could you please help me {step}? Thank you so much!"},
      {"ask_help_again", "Could you please help me {step} after all? It would really help!"},
      {"propose_split",
       "Let's collaborate to {label}! I can {robot_part}, and you can then {human_part}. Thank you for your help!"},
      {"inform_limitation", "I'm sorry, but I'm not able to {label}."},
      {"acknowledge", "Great! Thank you for taking care of \"{title}\"!"},
      {"claim_step", "I will {label}."},
      {"delegate_step", "You should {label}."},
      {"accept", "Ok, I will do that now!"},
      {"reject", "Sorry, I can't do that right now."},
      {"conditional_accept", "Ok, if you {robot_part}, then I will {human_part}."},
      {"smalltalk", "Nice working with you!"},
  };
  return t;
}

TemplateSet TemplateSet::parse(const std::string& document) {
  TemplateSet t = defaults();
  std::istringstream in(document);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto s = text::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto colon = s.find(':');
    if (colon == std::string_view::npos) throw ParseError("expected 'act: template'", n);
    const std::string key(text::trim(s.substr(0, colon)));
    const std::string body(text::trim(s.substr(colon + 1)));
    if (key != "ask_help_again" && !parse_act(key)) throw ParseError("unknown act '" + key + "'", n);
    if (key == "silence") throw ParseError("silence has no template", n);
    if (body.empty()) throw ParseError("empty template for '" + key + "'", n);
    t.templates_[key] = body;
  }
  return t;
}

TemplateSet TemplateSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read template file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string TemplateSet::serialize() const {
  std::string out;
  for (const auto& [k, v] : templates_) out += k + ": " + v + "\n";
  return out;
}

const std::string& TemplateSet::get(const std::string& key) const {
  auto it = templates_.find(key);
  if (it == templates_.end()) throw ConfigError("no template for '" + key + "'");
  return it->second;
}

std::string primitive_phrase(const world::PhysicalPrimitive& prim) {
  using K = world::PrimitiveKind;
  const auto p = [&](std::size_t i) { return "the " + text::humanize(prim.params.at(i)); };
  switch (prim.kind) {
    case K::PickPlace: return "bring " + p(0) + " to " + p(1);
    case K::PickOpenPlace: return "open " + p(1) + " using " + p(0);
    case K::PickPourPlace: return "pour " + p(0) + " into " + p(1);
    case K::PutOn: return "attach " + p(0) + " to " + p(1) + " using " + p(2);
    case K::Switch: return "switch " + p(1) + " to " + p(0);
    case K::Fold: return "fold " + p(0);
    case K::Cover: return "cover " + p(1) + " with " + p(0);
    case K::Wrap: return "wrap " + p(0) + " around " + p(1);
    case K::CutPut: return "cut " + p(0) + " with " + p(1) + " and put it on " + p(2);
  }
  return prim.to_string();
}

namespace {

void check_range(const task::PlanSpec& plan, StepRange r) {
  if (r.empty() || r.begin < 0 || r.end > plan.size()) {
    throw UnknownStepRef("step range " + r.to_string() + " is not part of the plan");
  }
}

const task::AbstractStep* exact_abstract(const task::PlanSpec& plan, StepRange r) {
  for (const auto& a : plan.abstract_steps) {
    if (a.range == r) return &a;
  }
  return nullptr;
}

}  // namespace

std::string range_phrase(const task::PlanSpec& plan, StepRange range) {
  check_range(plan, range);
  if (const auto* a = exact_abstract(plan, range)) return a->spoken();
  std::vector<std::string> parts;
  for (int i = range.begin; i < range.end; ++i) parts.push_back(primitive_phrase(plan.steps[static_cast<std::size_t>(i)]));
  return text::join(parts, " and ");
}

std::string realize_utterance(const TemplateSet& templates, Act act, const std::vector<StepRange>& step_refs,
                              const task::PlanSpec& plan, const ToneContext& tone,
                              std::optional<StepRange> robot_part, std::optional<StepRange> human_part) {
  if (act == Act::Silence) return "";
  for (const auto& r : step_refs) check_range(plan, r);
  DialogEvent hull;
  hull.step_refs = step_refs;
  if (robot_part) hull.step_refs.push_back(*robot_part);
  if (human_part) hull.step_refs.push_back(*human_part);
  const StepRange span = hull.span();

  std::vector<std::pair<std::string, std::string>> vars;
  if (!span.empty()) {
    const auto phrase = range_phrase(plan, span);
    vars.emplace_back("step", phrase);
    vars.emplace_back("label", phrase);
    const auto* a = exact_abstract(plan, span);
    vars.emplace_back("title", a ? a->label : phrase);
  }
  if (robot_part) vars.emplace_back("robot_part", range_phrase(plan, *robot_part));
  if (human_part) vars.emplace_back("human_part", range_phrase(plan, *human_part));

  std::string key(to_string(act));
  if (act == Act::AskHelp && tone.prior_rejections > 0) key = "ask_help_again";
  const std::string& tmpl = templates.get(key);
  for (const char* needed : {"{step}", "{label}", "{title}", "{robot_part}", "{human_part}"}) {
    if (tmpl.find(needed) == std::string::npos) continue;
    const std::string name(needed + 1, std::char_traits<char>::length(needed) - 2);
    const bool present = std::any_of(vars.begin(), vars.end(), [&](const auto& v) { return v.first == name; });
    if (!present) throw UnknownStepRef("template '" + key + "' needs " + needed);
  }
  return text::substitute(tmpl, vars);
}

DialogEvent DialogEngine::classify(const std::string& text, const ClassifyContext& ctx, int turn_id) const {
  DialogEvent e = classify_incoming(text, ctx, turn_id);
  if (classify_hook_) {
    if (auto o = classify_hook_(text, ctx)) {
      try {
        o->validate(ctx.plan ? ctx.plan->size() : 0);
        o->turn_id = turn_id;
        o->initiator = Agent::Human;
        o->text = text::trim(text).empty() ? "" : text;
        e = *o;
      } catch (const ValidationError&) {
      }
    }
  }
  if (sentiment_hook_ && e.act != Act::Silence) {
    if (auto s = sentiment_hook_(text)) e.sentiment = *s;
  }
  return e;
}

std::string DialogEngine::realize(Act act, const std::vector<StepRange>& refs, const task::PlanSpec& plan,
                                  const ToneContext& tone, std::optional<StepRange> robot_part,
                                  std::optional<StepRange> human_part) const {
  std::string draft = realize_utterance(templates_, act, refs, plan, tone, robot_part, human_part);
  if (!realize_hook_) return draft;
  auto rewritten = realize_hook_(act, draft);
  if (!rewritten || text::trim(*rewritten).empty()) return draft;
  // A rewrite must still read as the same act.
  ClassifyContext ctx{&plan, 0, std::nullopt};
  if (act == Act::Accept || act == Act::Reject) {
    DialogEvent hull;
    hull.step_refs = refs;
    const StepRange target = refs.empty() ? StepRange{0, std::min(1, plan.size())} : hull.span();
    ctx.pending = PendingRequest{0, 0, Act::AskHelp, target, std::nullopt, std::nullopt, false};
  }
  if (act != Act::Smalltalk && classify_incoming(*rewritten, ctx).act != act) return draft;
  return *rewritten;
}

}  // namespace micobot::dialog
