#include "micobot/llm/adapter.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "micobot/text.hpp"

namespace micobot::llm {

using nlohmann::json;

std::string_view to_string(Capability c) {
  switch (c) {
    case Capability::Classify: return "classify";
    case Capability::Sentiment: return "sentiment";
    case Capability::Realize: return "realize";
    case Capability::Strategy: return "strategy";
    case Capability::Allocate: return "allocate";
  }
  return "?";
}

std::optional<Capability> parse_capability(std::string_view name) {
  for (auto c : {Capability::Classify, Capability::Sentiment, Capability::Realize, Capability::Strategy,
                 Capability::Allocate}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

void AdapterConfig::validate() const {
  if (!(timeout_seconds > 0.0) || !std::isfinite(timeout_seconds)) {
    throw ConfigError("llm timeout_seconds must be positive");
  }
  if (enabled) {
    if (model.empty()) throw ConfigError("llm model must not be empty");
    HttpChatTransport probe(endpoint);  // throws on a malformed URL
    (void)probe;
  }
}

AdapterConfig AdapterConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("llm config must be an object");
  AdapterConfig c;
  try {
    if (j.contains("enabled")) c.enabled = j.at("enabled").get<bool>();
    if (j.contains("endpoint")) c.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("model")) c.model = j.at("model").get<std::string>();
    if (j.contains("credential_env")) c.credential_env = j.at("credential_env").get<std::string>();
    if (j.contains("timeout_seconds")) c.timeout_seconds = j.at("timeout_seconds").get<double>();
    if (j.contains("log_raw")) c.log_raw = j.at("log_raw").get<bool>();
    if (j.contains("capabilities")) {
      c.capabilities.clear();
      for (const auto& name : j.at("capabilities")) {
        const auto cap = parse_capability(name.get<std::string>());
        if (!cap) throw ConfigError("unknown llm capability '" + name.get<std::string>() + "'");
        c.capabilities.insert(*cap);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed llm config: ") + e.what());
  }
  c.validate();
  return c;
}

json AdapterConfig::to_json() const {
  json caps = json::array();
  for (auto c : capabilities) caps.push_back(std::string(llm::to_string(c)));
  return json{{"enabled", enabled},         {"endpoint", endpoint}, {"model", model},
              {"credential_env", credential_env}, {"timeout_seconds", timeout_seconds},
              {"capabilities", caps},       {"log_raw", log_raw}};
}

HttpChatTransport::HttpChatTransport(const std::string& endpoint) {
  static const std::regex kUrl(R"(^(https?)://([^/:]+)(:[0-9]+)?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, kUrl)) throw ConfigError("malformed llm endpoint '" + endpoint + "'");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (m[1] == "https") throw ConfigError("https endpoints need a build with TLS support");
#endif
  origin_ = m[1].str() + "://" + m[2].str() + m[3].str();
  path_ = m[4].matched ? m[4].str() : "/";
}

TransportReply HttpChatTransport::post(const std::string& body, const std::string& bearer, double timeout_seconds) {
  TransportReply reply;
  try {
    httplib::Client cli(origin_);
    const auto secs = static_cast<time_t>(timeout_seconds);
    const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
    auto res = cli.Post(path_, headers, body, "application/json");
    if (!res) {
      reply.error = "transport error: " + httplib::to_string(res.error());
      return reply;
    }
    reply.status = res->status;
    reply.body = res->body;
    reply.ok = res->status >= 200 && res->status < 300;
    if (!reply.ok) reply.error = "http status " + std::to_string(res->status);
  } catch (const std::exception& e) {
    reply.error = e.what();
  }
  return reply;
}

LlmAdapter::LlmAdapter(AdapterConfig config, std::shared_ptr<ChatTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.validate();
  if (!transport_ && config_.enabled) transport_ = std::make_shared<HttpChatTransport>(config_.endpoint);
}

void LlmAdapter::record(AuditEntry e) {
  if (!config_.log_raw) {
    e.prompt.clear();
    e.response.clear();
  }
  std::lock_guard l(audit_m_);
  audit_.push_back(std::move(e));
}

std::vector<AuditEntry> LlmAdapter::audit() const {
  std::lock_guard l(audit_m_);
  return audit_;
}

namespace {

/// Drops a surrounding ``` fence if the model added one.
std::string unfence(std::string s) {
  auto t = std::string(text::trim(s));
  if (text::starts_with(t, "```")) {
    const auto nl = t.find('\n');
    const auto close = t.rfind("```");
    if (nl != std::string::npos && close != std::string::npos && close > nl) {
      t = std::string(text::trim(t.substr(nl + 1, close - nl - 1)));
    }
  }
  return t;
}

}  // namespace

Result<std::string> LlmAdapter::call(Capability capability, const json& structured_prompt) {
  if (!enabled(capability)) return FallbackSignal{"capability disabled"};
  const json body = {
      {"model", config_.model},
      {"temperature", 0},
      {"messages",
       json::array({json{{"role", "system"}, {"content", preamble(capability)}},
                    json{{"role", "user"}, {"content", structured_prompt.dump()}}})},
  };
  const std::string payload = body.dump();
  AuditEntry entry;
  entry.capability = capability;
  entry.prompt_hash = hex64(fnv1a64(payload));
  entry.prompt = payload;

  std::string bearer;
  if (const char* v = std::getenv(config_.credential_env.c_str())) bearer = v;
  const TransportReply reply = transport_->post(payload, bearer, config_.timeout_seconds);
  entry.response_hash = hex64(fnv1a64(reply.body));
  entry.response = reply.body;
  if (!reply.ok) {
    entry.reason = reply.error.empty() ? "request failed" : reply.error;
    record(entry);
    return FallbackSignal{entry.reason};
  }
  try {
    const json r = json::parse(reply.body);
    const auto& content = r.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw std::runtime_error("content is not a string");
    entry.ok = true;
    record(entry);
    return unfence(content.get<std::string>());
  } catch (const std::exception& e) {
    entry.reason = std::string("unparseable response: ") + e.what();
    record(entry);
    return FallbackSignal{entry.reason};
  }
}

json event_to_json(const dialog::DialogEvent& e) {
  json refs = json::array();
  for (const auto& r : e.step_refs) refs.push_back(r.to_string());
  json j = {{"turn_id", e.turn_id},
            {"initiator", std::string(1, to_char(e.initiator))},
            {"act", std::string(dialog::to_string(e.act))},
            {"step_refs", refs},
            {"text", e.text},
            {"sentiment", std::string(dialog::to_string(e.sentiment))}};
  j["robot_part"] = e.robot_part ? json(e.robot_part->to_string()) : json(nullptr);
  j["human_part"] = e.human_part ? json(e.human_part->to_string()) : json(nullptr);
  return j;
}

dialog::DialogEvent event_from_json(const json& j) {
  dialog::DialogEvent e;
  const auto act = dialog::parse_act(j.at("act").get<std::string>());
  if (!act) throw ValidationError("act", "unknown act");
  e.act = *act;
  auto range = [](const json& v) {
    const auto r = StepRange::parse(v.get<std::string>());
    if (!r) throw ValidationError("step_refs", "bad range");
    return *r;
  };
  if (j.contains("step_refs")) {
    for (const auto& r : j.at("step_refs")) e.step_refs.push_back(range(r));
  }
  if (j.contains("robot_part") && !j.at("robot_part").is_null()) e.robot_part = range(j.at("robot_part"));
  if (j.contains("human_part") && !j.at("human_part").is_null()) e.human_part = range(j.at("human_part"));
  if (j.contains("sentiment")) {
    const auto s = dialog::parse_sentiment(j.at("sentiment").get<std::string>());
    if (!s) throw ValidationError("sentiment", "unknown sentiment");
    e.sentiment = *s;
  }
  if (j.contains("text")) e.text = j.at("text").get<std::string>();
  if (j.contains("turn_id")) e.turn_id = j.at("turn_id").get<int>();
  if (j.contains("initiator")) {
    const auto s = j.at("initiator").get<std::string>();
    const auto a = s.size() == 1 ? agent_from_char(s[0]) : std::nullopt;
    if (!a) throw ValidationError("initiator", "expected H or R");
    e.initiator = *a;
  }
  return e;
}

namespace {

json plan_json(const task::PlanSpec& plan) {
  json steps = json::array();
  for (int i = 0; i < plan.size(); ++i) {
    steps.push_back({{"index", i},
                     {"primitive", plan.steps[static_cast<std::size_t>(i)].to_string()},
                     {"robot_capability", plan.robot_capability[static_cast<std::size_t>(i)]}});
  }
  json hierarchy = json::array();
  for (const auto& a : plan.abstract_steps) hierarchy.push_back({{"label", a.label}, {"range", a.range.to_string()}});
  return {{"steps", steps}, {"hierarchy", hierarchy}};
}

json pending_json(const std::optional<dialog::PendingRequest>& p) {
  if (!p) return nullptr;
  json j = {{"act", std::string(dialog::to_string(p->act))}, {"range", p->range.to_string()},
            {"accepted", p->accepted}};
  if (p->robot_part) j["robot_part"] = p->robot_part->to_string();
  if (p->human_part) j["human_part"] = p->human_part->to_string();
  return j;
}

}  // namespace

json planner_context(const std::vector<dialog::DialogEvent>& events, const meta::PlannerState& state,
                     const task::PlanSpec& plan) {
  json latest = json::array();
  for (const auto& e : events) latest.push_back(event_to_json(e));
  json history = json::array();
  for (const auto& e : state.history) history.push_back(event_to_json(e));
  json constraints = json::array();
  for (const auto& c : state.constraints) constraints.push_back(c.to_string());
  return {{"plan", plan_json(plan)},
          {"current_step", state.current_step},
          {"constraints", constraints},
          {"pending", pending_json(state.pending)},
          {"p_help", state.p_help.value()},
          {"dialog_history", history},
          {"latest_events", latest}};
}

Result<dialog::DialogEvent> LlmAdapter::classify(const std::string& text, const dialog::ClassifyContext& ctx) {
  json prompt = {{"utterance", text}, {"current_step", ctx.current_step}, {"pending", pending_json(ctx.pending)}};
  if (ctx.plan) prompt["plan"] = plan_json(*ctx.plan);
  auto r = call(Capability::Classify, prompt);
  if (!ok(r)) return std::get<FallbackSignal>(r);
  try {
    auto e = event_from_json(json::parse(std::get<std::string>(r)));
    e.validate(ctx.plan ? ctx.plan->size() : 0);
    return e;
  } catch (const std::exception& ex) {
    return FallbackSignal{std::string("classify schema violation: ") + ex.what()};
  }
}

Result<double> LlmAdapter::sentiment(const std::string& text) {
  auto r = call(Capability::Sentiment, json{{"utterance", text}});
  if (!ok(r)) return std::get<FallbackSignal>(r);
  try {
    const auto j = json::parse(std::get<std::string>(r));
    const double s = j.at("score").get<double>();
    if (!(s >= -1.0 && s <= 1.0)) return FallbackSignal{"sentiment score outside [-1, 1]"};
    return s;
  } catch (const std::exception& ex) {
    return FallbackSignal{std::string("sentiment schema violation: ") + ex.what()};
  }
}

Result<std::string> LlmAdapter::realize(dialog::Act act, const std::string& draft) {
  auto r = call(Capability::Realize, json{{"act", std::string(dialog::to_string(act))}, {"draft", draft}});
  if (!ok(r)) return r;
  const auto& s = std::get<std::string>(r);
  if (text::trim(s).empty() || s.find('\n') != std::string::npos) return FallbackSignal{"realize: not one line"};
  return s;
}

Result<std::string> LlmAdapter::strategy_text(const std::vector<dialog::DialogEvent>& events,
                                              const meta::PlannerState& state, const task::PlanSpec& plan) {
  return call(Capability::Strategy, planner_context(events, state, plan));
}

Result<meta::StrategyProgram> LlmAdapter::strategy(const std::vector<dialog::DialogEvent>& events,
                                                   const meta::PlannerState& state, const task::PlanSpec& plan) {
  auto r = strategy_text(events, state, plan);
  if (!ok(r)) return std::get<FallbackSignal>(r);
  try {
    auto p = meta::StrategyProgram::parse(std::get<std::string>(r));
    p.validate(plan);
    return p;
  } catch (const meta::InvalidProgram& e) {
    return FallbackSignal{std::string("invalid program: ") + e.what()};
  }
}

Result<alloc::Assignment> LlmAdapter::allocate(const json& context, int first_step, int count) {
  auto r = call(Capability::Allocate, context);
  if (!ok(r)) return std::get<FallbackSignal>(r);
  std::string text;
  for (char c : std::get<std::string>(r)) {
    if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
  }
  auto a = alloc::Assignment::parse(first_step, text);
  if (!a || a->size() != count) return FallbackSignal{"allocation has the wrong shape"};
  return *a;
}

std::optional<std::string> AdapterProgramSource::derive(const std::vector<dialog::DialogEvent>& events,
                                                        const meta::PlannerState& state,
                                                        const task::PlanSpec& plan) {
  auto r = adapter_.strategy_text(events, state, plan);
  if (!ok(r)) return std::nullopt;
  return std::get<std::string>(r);
}

void install_dialog_hooks(dialog::DialogEngine& engine, LlmAdapter& adapter) {
  if (adapter.enabled(Capability::Classify)) {
    engine.set_classify_hook([&adapter](const std::string& text, const dialog::ClassifyContext& ctx)
                                 -> std::optional<dialog::DialogEvent> {
      if (text::trim(text).empty()) return std::nullopt;
      auto r = adapter.classify(text, ctx);
      if (!ok(r)) return std::nullopt;
      return std::get<dialog::DialogEvent>(r);
    });
  }
  if (adapter.enabled(Capability::Sentiment)) {
    engine.set_sentiment_hook([&adapter](const std::string& text) -> std::optional<dialog::Sentiment> {
      auto r = adapter.sentiment(text);
      if (!ok(r)) return std::nullopt;
      const double s = std::get<double>(r);
      if (s > 1.0 / 3.0) return dialog::Sentiment::Positive;
      if (s < -1.0 / 3.0) return dialog::Sentiment::Negative;
      return dialog::Sentiment::Neutral;
    });
  }
  if (adapter.enabled(Capability::Realize)) {
    engine.set_realize_hook([&adapter](dialog::Act act, const std::string& draft) -> std::optional<std::string> {
      auto r = adapter.realize(act, draft);
      if (!ok(r)) return std::nullopt;
      return std::get<std::string>(r);
    });
  }
}

}  // namespace micobot::llm
