#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "micobot/harness/trial.hpp"
#include "micobot/text.hpp"

namespace micobot::harness {

using nlohmann::json;

namespace {

struct MethodName {
  MethodKind kind;
  const char* name;
};
constexpr MethodName kMethodNames[] = {
    {MethodKind::Micobot, "micobot"}, {MethodKind::Random, "random"},   {MethodKind::Recb, "recb"},
    {MethodKind::LlmProxy, "llm_proxy"}, {MethodKind::HInit, "h_init"}, {MethodKind::RInit, "r_init"},
    {MethodKind::NoPhelp, "no_phelp"}, {MethodKind::NoHierarchy, "no_hierarchy"},
};

std::string kind_name(MethodKind k) {
  for (const auto& m : kMethodNames) {
    if (m.kind == k) return m.name;
  }
  return "?";
}

/// Shortest decimal that parses back to `v`.
std::string format_double(double v) {
  for (int precision = 1; precision <= 17; ++precision) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    if (std::stod(os.str()) == v) return os.str();
  }
  return std::to_string(v);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

std::string Method::to_string() const {
  if (kind != MethodKind::Recb) return kind_name(kind);
  if (p_c_from) return "recb:from:" + *p_c_from;
  return "recb:" + format_double(p_c);
}

Method Method::parse(const std::string& text) {
  const std::string t = text::lower(text::trim(text));
  Method m;
  if (text::starts_with(t, "recb")) {
    m.kind = MethodKind::Recb;
    if (t == "recb") throw ConfigError("recb needs p_c, e.g. recb:0.3 or recb:from:micobot");
    if (t[4] != ':') throw ConfigError("unknown method '" + text + "'");
    const std::string arg = t.substr(5);
    if (text::starts_with(arg, "from:")) {
      const Method source = parse(arg.substr(5));
      if (source.kind == MethodKind::Recb) throw ConfigError("recb cannot take p_c from recb");
      m.p_c_from = source.to_string();
      return m;
    }
    double v = -1.0;
    try {
      v = text::parse_double(arg);
    } catch (const ParseError&) {
    }
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("recb p_c must be a number in [0, 1]");
    m.p_c = v;
    return m;
  }
  for (const auto& n : kMethodNames) {
    if (t == n.name && n.kind != MethodKind::Recb) {
      m.kind = n.kind;
      return m;
    }
  }
  throw ConfigError("unknown method '" + text + "'");
}

bool Method::micobot_family() const {
  switch (kind) {
    case MethodKind::Micobot:
    case MethodKind::HInit:
    case MethodKind::RInit:
    case MethodKind::NoPhelp:
    case MethodKind::NoHierarchy:
      return true;
    default:
      return false;
  }
}

json HumanSpec::to_json() const {
  switch (kind) {
    case Kind::Simulated: {
      json j = {{"kind", "simulated"}, {"p_tilde", params.p_tilde}, {"mood", std::string(human::to_string(params.mood))}};
      j["proactive_rate"] = params.proactive_rate ? json(*params.proactive_rate) : json(nullptr);
      return j;
    }
    case Kind::Script:
      return {{"kind", "script"}, {"script", human::serialize_script(script)}};
    case Kind::Interactive:
      return {{"kind", "interactive"}, {"turn_timeout_ms", turn_timeout_ms}};
  }
  return {};
}

HumanSpec HumanSpec::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("human spec must be an object");
  HumanSpec h;
  try {
    const std::string kind = get_or<std::string>(j, "kind", "simulated");
    if (kind == "simulated") {
      h.kind = Kind::Simulated;
      h.params.p_tilde = get_or<double>(j, "p_tilde", h.params.p_tilde);
      if (j.contains("mood")) h.params.mood = human::parse_mood(j.at("mood").get<std::string>());
      if (j.contains("proactive_rate") && !j.at("proactive_rate").is_null()) {
        h.params.proactive_rate = j.at("proactive_rate").get<double>();
      }
      h.params.validate();
    } else if (kind == "script") {
      h.kind = Kind::Script;
      if (j.contains("script")) h.script = human::parse_script(j.at("script").get<std::string>());
      if (j.contains("script_file")) h.script = human::load_script(j.at("script_file").get<std::string>());
    } else if (kind == "interactive") {
      h.kind = Kind::Interactive;
      h.turn_timeout_ms = get_or<int>(j, "turn_timeout_ms", h.turn_timeout_ms);
      if (h.turn_timeout_ms <= 0) throw ConfigError("turn_timeout_ms must be positive");
    } else {
      throw ConfigError("unknown human kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed human spec: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("bad human script: ") + e.what());
  }
  return h;
}

void TrialConfig::validate() const {
  if (scenario.empty()) throw ConfigError("scenario must be set");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
  if (max_step_multiplier < 1) throw ConfigError("max_step_multiplier must be at least 1");
  if (q_samples < 1) throw ConfigError("q_samples must be at least 1");
  if (method.kind == MethodKind::Recb && method.p_c_from) {
    throw ConfigError("recb:from:... is resolved by the suite; single trials need a numeric p_c");
  }
  if (human.kind == HumanSpec::Kind::Simulated) human.params.validate();
  llm.validate();
}

json TrialConfig::to_json() const {
  return {{"scenario", scenario},
          {"method", method.to_string()},
          {"human", human.to_json()},
          {"alpha", alpha},
          {"seed", seed},
          {"max_step_multiplier", max_step_multiplier},
          {"q_samples", q_samples},
          {"q_seed", q_seed},
          {"llm", llm.to_json()}};
}

TrialConfig TrialConfig::from_json(const json& j) { return from_json(j, TrialConfig{}); }

TrialConfig TrialConfig::load(const std::string& path) { return load(path, TrialConfig{}); }

TrialConfig TrialConfig::from_json(const json& j, const TrialConfig& base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> kKeys = {"scenario", "method", "human", "alpha", "seed",
                                              "max_step_multiplier", "q_samples", "q_seed", "llm"};
  for (const auto& [k, v] : j.items()) {
    if (!kKeys.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  TrialConfig c = base;
  try {
    c.scenario = get_or<std::string>(j, "scenario", c.scenario);
    if (j.contains("method")) c.method = Method::parse(j.at("method").get<std::string>());
    if (j.contains("human")) c.human = HumanSpec::from_json(j.at("human"));
    c.alpha = get_or<double>(j, "alpha", c.alpha);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.max_step_multiplier = get_or<int>(j, "max_step_multiplier", c.max_step_multiplier);
    c.q_samples = get_or<int>(j, "q_samples", c.q_samples);
    c.q_seed = get_or<std::uint64_t>(j, "q_seed", c.q_seed);
    if (j.contains("llm")) c.llm = llm::AdapterConfig::from_json(j.at("llm"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

TrialConfig TrialConfig::load(const std::string& path, const TrialConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  try {
    return from_json(json::parse(in), base);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

namespace {

constexpr std::pair<RecordKind, const char*> kRecordKinds[] = {
    {RecordKind::Physical, "physical"}, {RecordKind::Verbal, "verbal"}, {RecordKind::Allocation, "allocation"},
    {RecordKind::PHelp, "phelp"},       {RecordKind::Termination, "termination"},
};

constexpr std::pair<TerminationReason, const char*> kReasons[] = {
    {TerminationReason::IrrecoverableFailure, "irrecoverable_failure"},
    {TerminationReason::StepLimit, "step_limit"},
    {TerminationReason::InfeasibleToRobot, "infeasible_allocated_to_robot"},
    {TerminationReason::HumanRefusedTwice, "human_refused_twice"},
    {TerminationReason::PlanComplete, "plan_complete"},
    {TerminationReason::Aborted, "aborted"},
};

}  // namespace

std::string_view to_string(RecordKind k) {
  for (const auto& [kind, name] : kRecordKinds) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<RecordKind> parse_record_kind(std::string_view name) {
  for (const auto& [kind, n] : kRecordKinds) {
    if (name == n) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(TerminationReason r) {
  for (const auto& [reason, name] : kReasons) {
    if (reason == r) return name;
  }
  return "?";
}

std::optional<TerminationReason> parse_termination(std::string_view name) {
  for (const auto& [reason, n] : kReasons) {
    if (name == n) return reason;
  }
  return std::nullopt;
}

json LogRecord::to_json() const {
  return {{"env_step", env_step}, {"actor", actor}, {"kind", std::string(harness::to_string(kind))},
          {"payload", payload}};
}

LogRecord LogRecord::from_json(const json& j) {
  try {
    LogRecord r;
    r.env_step = j.at("env_step").get<int>();
    r.actor = j.at("actor").get<std::string>();
    const auto k = parse_record_kind(j.at("kind").get<std::string>());
    if (!k) throw MalformedLog("unknown record kind");
    r.kind = *k;
    r.payload = j.at("payload");
    if (!r.payload.is_object()) throw MalformedLog("payload must be an object");
    if (r.actor != "R" && r.actor != "H" && r.actor != "system") throw MalformedLog("unknown actor '" + r.actor + "'");
    return r;
  } catch (const json::exception& e) {
    throw MalformedLog(std::string("bad record: ") + e.what());
  }
}

std::string TrialLog::serialize() const {
  std::string out = json{{"trial_log", 1}, {"config", config}, {"plan_size", plan_size}}.dump();
  out += '\n';
  for (const auto& r : records) {
    out += r.to_json().dump();
    out += '\n';
  }
  return out;
}

TrialLog TrialLog::parse(const std::string& text) {
  TrialLog log;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw MalformedLog("line " + std::to_string(n) + " is not JSON");
    }
    if (!header) {
      if (!j.is_object() || j.value("trial_log", 0) != 1) {
        throw MalformedLog("missing or unsupported trial_log header");
      }
      log.config = j.value("config", json::object());
      log.plan_size = j.value("plan_size", 0);
      header = true;
      continue;
    }
    try {
      log.records.push_back(LogRecord::from_json(j));
    } catch (const MalformedLog& e) {
      throw MalformedLog("line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (!header) throw MalformedLog("empty log");
  return log;
}

TrialLog TrialLog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read log '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void TrialLog::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write log '" + path + "'");
  out << serialize();
}

void TrialLog::validate() const {
  if (plan_size <= 0) throw MalformedLog("plan_size must be positive");
  int last = 0;
  int terminations = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.env_step < last) throw MalformedLog("env_step decreases at record " + std::to_string(i));
    last = r.env_step;
    if (r.kind == RecordKind::Termination) {
      ++terminations;
      if (i + 1 != records.size()) throw MalformedLog("termination record is not last");
      if (!r.payload.contains("reason") || !parse_termination(r.payload.at("reason").get<std::string>())) {
        throw MalformedLog("termination record without a known reason");
      }
    }
  }
  if (terminations != 1) throw MalformedLog("expected exactly one termination record");
}

json Metrics::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"full_success", full_success},
          {"termination", std::string(to_string(termination))},
          {"env_steps", env_steps},
          {"steps_completed_fraction", steps_completed_fraction},
          {"human_steps_fraction", human_steps_fraction},
          {"human_effort_seconds", human_effort_seconds},
          {"help_requests", help_requests},
          {"initial_acceptance", opt(initial_acceptance)},
          {"post_negotiation_acceptance", opt(post_negotiation_acceptance)},
          {"robot_initiated", robot_initiated},
          {"human_initiated", human_initiated},
          {"initiative_shifts", initiative_shifts},
          {"dialog_events", dialog_events}};
}

namespace {

bool is_response(const std::string& act) {
  return act == "accept" || act == "reject" || act == "conditional_accept";
}

}  // namespace

Metrics compute_metrics(const TrialLog& log) {
  log.validate();
  Metrics m;
  const auto& term = log.records.back();
  m.termination = *parse_termination(term.payload.at("reason").get<std::string>());
  m.env_steps = term.env_step;

  int completed = 0;
  int by_human = 0;
  // Episode id -> (first response accepted?, eventually accepted?).
  std::map<int, std::pair<bool, bool>> episodes;
  std::string previous_actor;
  try {
    for (const auto& r : log.records) {
      if (r.kind == RecordKind::Physical) {
        if (!r.payload.at("succeeded").get<bool>()) continue;
        ++completed;
        if (r.actor == "H") {
          ++by_human;
          m.human_effort_seconds += r.payload.at("seconds").get<double>();
        }
      } else if (r.kind == RecordKind::Verbal) {
        const std::string act = r.payload.at("act").get<std::string>();
        ++m.dialog_events;
        if (!previous_actor.empty() && previous_actor != r.actor) ++m.initiative_shifts;
        previous_actor = r.actor;
        const bool reply = !r.payload.value("in_reply_to", json(nullptr)).is_null();
        if (r.actor == "R") {
          if (act == "ask_help" || act == "propose_split") ++m.help_requests;
          if (act != "acknowledge") ++m.robot_initiated;
        } else if (!reply && act != "silence") {
          ++m.human_initiated;
        }
        if (r.actor == "H" && reply && is_response(act)) {
          const int ep = r.payload.at("episode").get<int>();
          const bool accepted = act != "reject";
          auto it = episodes.find(ep);
          if (it == episodes.end()) {
            episodes.emplace(ep, std::make_pair(accepted, accepted));
          } else {
            it->second.second = it->second.second || accepted;
          }
        }
      }
    }
  } catch (const json::exception& e) {
    throw MalformedLog(std::string("record payload: ") + e.what());
  }
  m.steps_completed_fraction = static_cast<double>(completed) / log.plan_size;
  m.human_steps_fraction = static_cast<double>(by_human) / log.plan_size;
  m.full_success = m.termination == TerminationReason::PlanComplete && completed == log.plan_size;
  if (!episodes.empty()) {
    int first = 0;
    int eventually = 0;
    for (const auto& [ep, v] : episodes) {
      first += v.first ? 1 : 0;
      eventually += v.second ? 1 : 0;
    }
    m.initial_acceptance = static_cast<double>(first) / static_cast<double>(episodes.size());
    m.post_negotiation_acceptance = static_cast<double>(eventually) / static_cast<double>(episodes.size());
  }
  return m;
}

}  // namespace micobot::harness
