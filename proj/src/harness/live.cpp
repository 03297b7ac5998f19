#include "micobot/harness/live.hpp"

#include <filesystem>

namespace micobot::harness {

using nlohmann::json;

SessionView::SessionView(task::TaskScenario scenario)
    : scenario_(std::move(scenario)),
      state_(scenario_.initial),
      allocation_(static_cast<std::size_t>(scenario_.plan.size()), '-'),
      done_by_(static_cast<std::size_t>(scenario_.plan.size())) {}

SessionView SessionView::fold(task::TaskScenario scenario, const std::vector<LogRecord>& records) {
  SessionView v(std::move(scenario));
  for (const auto& r : records) v.apply(r);
  return v;
}

void SessionView::apply(const LogRecord& r) {
  env_step_ = r.env_step;
  const int T = scenario_.plan.size();
  try {
    switch (r.kind) {
      case RecordKind::Allocation: {
        const int first = r.payload.at("first_step").get<int>();
        const std::string a = r.payload.at("assignment").get<std::string>();
        if (first < 0 || first + static_cast<int>(a.size()) != T) throw MalformedLog("allocation does not fit the plan");
        for (std::size_t i = 0; i < a.size(); ++i) allocation_[static_cast<std::size_t>(first) + i] = a[i];
        break;
      }
      case RecordKind::Physical: {
        const int step = r.payload.at("step").get<int>();
        if (step < 0 || step >= T) throw MalformedLog("physical step outside the plan");
        const auto pose = r.payload.at("pose");
        const std::string& agent = r.actor == "H" ? scenario_.human_agent : scenario_.robot_agent;
        if (r.payload.at("succeeded").get<bool>()) {
          if (step != current_step_) throw MalformedLog("physical steps out of order");
          state_ = world::apply_effect(state_, scenario_.plan.steps[static_cast<std::size_t>(step)]);
          done_by_[static_cast<std::size_t>(step)] = r.actor;
          current_step_ = step + 1;
        }
        state_.set_agent_pose(agent, world::Cell{pose.at(0).get<int>(), pose.at(1).get<int>()});
        transcript_.push_back({{"env_step", r.env_step},
                               {"actor", r.actor},
                               {"kind", "physical"},
                               {"text", r.payload.at("primitive").get<std::string>() +
                                            (r.payload.at("succeeded").get<bool>() ? "" : " (failed)")}});
        if (!pending_.is_null()) {
          const auto range = StepRange::parse(pending_.at("human_range").get<std::string>());
          if (range && current_step_ >= range->end) pending_ = nullptr;
        }
        break;
      }
      case RecordKind::Verbal: {
        const std::string act = r.payload.at("act").get<std::string>();
        transcript_.push_back({{"env_step", r.env_step},
                               {"actor", r.actor},
                               {"kind", "verbal"},
                               {"act", act},
                               {"text", r.payload.at("text")}});
        if (r.actor == "R" && !r.payload.at("request_id").is_null()) {
          const auto& hp = r.payload.at("human_part");
          const std::string human_range = hp.is_null() ? r.payload.at("step_refs").at(0).get<std::string>()
                                                       : hp.get<std::string>();
          pending_ = {{"request_id", r.payload.at("request_id")},
                      {"act", act},
                      {"text", r.payload.at("text")},
                      {"human_range", human_range},
                      {"accepted", false}};
        } else if (r.actor == "H" && !r.payload.at("in_reply_to").is_null() && !pending_.is_null()) {
          if (act == "reject") {
            pending_ = nullptr;
          } else {
            pending_["accepted"] = true;
          }
        }
        break;
      }
      case RecordKind::PHelp:
        p_help_trace_.push_back(r.payload.at("value").get<double>());
        break;
      case RecordKind::Termination:
        termination_ = r.payload.at("reason").get<std::string>();
        pending_ = nullptr;
        break;
    }
  } catch (const json::exception& e) {
    throw MalformedLog(std::string("record does not fit the view: ") + e.what());
  } catch (const Error& e) {
    if (dynamic_cast<const MalformedLog*>(&e)) throw;
    throw MalformedLog(std::string("record does not fit the scenario: ") + e.what());
  }
}

json SessionView::to_json() const {
  json steps = json::array();
  for (int i = 0; i < scenario_.plan.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    steps.push_back({{"index", i},
                     {"label", scenario_.plan.abstract_of(i).label},
                     {"primitive", scenario_.plan.steps[idx].to_string()},
                     {"status", i < current_step_ ? "done" : "pending"},
                     {"done_by", done_by_[idx].empty() ? json(nullptr) : json(done_by_[idx])},
                     {"allocation", std::string(1, allocation_[idx])},
                     {"robot_infeasible", scenario_.plan.robot_infeasible(i)}});
  }
  json furniture = json::array();
  for (const auto& f : scenario_.world.furniture()) {
    json cells = json::array();
    for (const auto& c : f.cells) cells.push_back(json::array({c.x, c.y}));
    furniture.push_back({{"name", f.name}, {"cells", cells}});
  }
  json objects = json::object();
  for (const auto& [name, loc] : state_.locations()) {
    json flags = json::array();
    for (const auto& fl : state_.flags(name)) flags.push_back(fl);
    objects[name] = {{"location", loc}, {"flags", flags}};
  }
  json agents = json::object();
  for (const auto& [name, c] : state_.agent_poses()) agents[name] = json::array({c.x, c.y});
  return {{"scenario", scenario_.name},
          {"grid",
           {{"width", scenario_.world.width()},
            {"height", scenario_.world.height()},
            {"furniture", furniture},
            {"objects", objects},
            {"agents", agents}}},
          {"steps", steps},
          {"transcript", transcript_},
          {"p_help", p_help_trace_.empty() ? 0.5 : p_help_trace_.back()},
          {"p_help_trace", p_help_trace_},
          {"pending", pending_},
          {"current_step", current_step_},
          {"env_step", env_step_},
          {"termination", termination_ ? json(*termination_) : json(nullptr)}};
}

namespace {

json message(const std::string& type) { return {{"type", type}, {"protocol", kProtocolVersion}}; }

}  // namespace

LiveSession::LiveSession(TrialConfig config, std::shared_ptr<human::Clock> clock, std::string log_path)
    : config_(std::move(config)),
      log_path_(std::move(log_path)),
      view_(task::resolve_scenario(config_.scenario)) {
  config_.human.kind = HumanSpec::Kind::Interactive;
  config_.validate();
  bridge_ = std::make_shared<human::InteractiveBridge>(std::chrono::milliseconds(config_.human.turn_timeout_ms),
                                                       std::move(clock));
  bridge_->on_turn_started([this](const human::Observation& obs) {
    json m = message("turn_request");
    m["env_step"] = obs.env_step;
    m["current_step"] = obs.current_step;
    m["timeout_ms"] = config_.human.turn_timeout_ms;
    std::lock_guard l(m_);
    broadcast(m);
  });
}

LiveSession::~LiveSession() {
  close();
  if (thread_.joinable()) thread_.join();
}

void LiveSession::start() {
  if (thread_.joinable()) return;
  thread_ = std::thread([this] {
    TrialHooks hooks;
    hooks.human = bridge_;
    hooks.on_record = [this](const LogRecord& r) {
      std::lock_guard l(m_);
      view_.apply(r);
      json m = message("event");
      m["record"] = r.to_json();
      broadcast(m);
    };
    std::optional<TrialResult> result;
    std::string failure;
    try {
      result = run_trial(config_, hooks);
      if (!log_path_.empty()) result->log.save(log_path_);
    } catch (const std::exception& e) {
      failure = e.what();
    }
    std::lock_guard l(m_);
    result_ = std::move(result);
    finished_ = true;
    if (!failure.empty()) {
      json m = message("error");
      m["code"] = "SessionClosed";
      m["message"] = failure;
      broadcast(m);
    }
  });
}

void LiveSession::broadcast(const json& m) {
  for (const auto& [id, send] : subscribers_) send(m);
}

void LiveSession::subscribe(int id, Send send) {
  std::lock_guard l(m_);
  json m = message("snapshot");
  m["view"] = view_.to_json();
  m["awaiting_turn"] = bridge_->awaiting();
  send(m);
  subscribers_[id] = std::move(send);
}

void LiveSession::unsubscribe(int id) {
  std::lock_guard l(m_);
  subscribers_.erase(id);
}

json LiveSession::snapshot() const {
  std::lock_guard l(m_);
  json m = message("snapshot");
  m["view"] = view_.to_json();
  m["awaiting_turn"] = bridge_->awaiting();
  return m;
}

void LiveSession::submit(const human::BridgeMessage& msg) {
  {
    std::lock_guard l(m_);
    if (finished_ || view_.terminated() || bridge_->closed()) throw ProtocolError("SessionClosed", "the trial is over");
    if (msg.perform_step) {
      const int s = *msg.perform_step;
      if (s < 0 || s >= view_.plan_size()) throw ProtocolError("InvalidStep", "step is not part of the plan");
      if (s < view_.current_step()) throw ProtocolError("InvalidStep", "step is already complete");
      if (s > view_.current_step()) throw ProtocolError("InvalidStep", "steps must be performed in plan order");
    }
  }
  bridge_->push(msg);
}

void LiveSession::close() { bridge_->close(); }

bool LiveSession::finished() const {
  std::lock_guard l(m_);
  return finished_;
}

void LiveSession::wait() {
  if (thread_.joinable()) thread_.join();
}

std::optional<TrialResult> LiveSession::result() const {
  std::lock_guard l(m_);
  return result_;
}

SessionProtocol::SessionProtocol(Options options) : options_(std::move(options)) {}

SessionProtocol::~SessionProtocol() { shutdown(); }

int SessionProtocol::connect(LiveSession::Send send) {
  std::lock_guard l(m_);
  const int id = next_client_++;
  clients_[id] = std::move(send);
  ready_[id] = false;
  return id;
}

void SessionProtocol::disconnect(int client) {
  std::shared_ptr<LiveSession> s;
  {
    std::lock_guard l(m_);
    clients_.erase(client);
    ready_.erase(client);
    s = session_;
  }
  if (s) s->unsubscribe(client);
}

std::shared_ptr<LiveSession> SessionProtocol::session() const {
  std::lock_guard l(m_);
  return session_;
}

void SessionProtocol::shutdown() {
  std::shared_ptr<LiveSession> s = session();
  if (s) {
    s->close();
    s->wait();
  }
}

void SessionProtocol::send_error(const LiveSession::Send& send, const std::string& code,
                                 const std::string& text) const {
  json m = message("error");
  m["code"] = code;
  m["message"] = text;
  send(m);
}

void SessionProtocol::handle(int client, const std::string& text) {
  LiveSession::Send send;
  bool ready = false;
  std::shared_ptr<LiveSession> s;
  {
    std::lock_guard l(m_);
    auto it = clients_.find(client);
    if (it == clients_.end()) return;
    send = it->second;
    ready = ready_[client];
    s = session_;
  }
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error&) {
    send_error(send, "BadRequest", "message is not JSON");
    return;
  }
  if (!msg.is_object() || !msg.contains("type") || !msg.at("type").is_string()) {
    send_error(send, "BadRequest", "message needs a string 'type'");
    return;
  }
  const std::string type = msg.at("type").get<std::string>();
  if (!msg.contains("protocol") || msg.at("protocol") != kProtocolVersion) {
    send_error(send, "VersionMismatch", "server speaks protocol " + std::to_string(kProtocolVersion));
    return;
  }

  if (type == "hello") {
    {
      std::lock_guard l(m_);
      ready_[client] = true;
    }
    if (s) {
      s->subscribe(client, send);
    } else {
      json m = message("snapshot");
      m["view"] = nullptr;
      m["awaiting_turn"] = false;
      send(m);
    }
    return;
  }
  if (!ready) {
    send_error(send, "BadRequest", "send hello first");
    return;
  }
  try {
    if (type == "start") {
      if (s && !s->finished()) throw ProtocolError("SessionBusy", "a trial is already running");
      TrialConfig cfg = options_.base;
      if (msg.contains("config")) cfg = TrialConfig::from_json(msg.at("config"), cfg);
      std::string log_path;
      std::shared_ptr<LiveSession> fresh;
      std::vector<std::pair<int, LiveSession::Send>> subscribers;
      {
        std::lock_guard l(m_);
        const int n = ++sessions_started_;
        if (!options_.log_dir.empty()) {
          std::filesystem::create_directories(options_.log_dir);
          log_path = (std::filesystem::path(options_.log_dir) / ("session-" + std::to_string(n) + ".jsonl")).string();
        }
        fresh = std::make_shared<LiveSession>(cfg, options_.clock, log_path);
        for (const auto& [id, fn] : clients_) {
          if (ready_[id]) subscribers.emplace_back(id, fn);
        }
        session_ = fresh;
      }
      for (auto& [id, fn] : subscribers) fresh->subscribe(id, fn);
      fresh->start();
      json ack = message("ack");
      ack["of"] = "start";
      send(ack);
    } else if (type == "human_turn") {
      if (!s) throw ProtocolError("SessionClosed", "no trial is running");
      human::BridgeMessage bm;
      if (msg.contains("text") && !msg.at("text").is_null()) bm.text = msg.at("text").get<std::string>();
      if (msg.contains("perform_step") && !msg.at("perform_step").is_null()) {
        bm.perform_step = msg.at("perform_step").get<int>();
      }
      s->submit(bm);
      json ack = message("ack");
      ack["of"] = "human_turn";
      send(ack);
    } else {
      send_error(send, "BadRequest", "unknown message type '" + type + "'");
    }
  } catch (const ProtocolError& e) {
    send_error(send, e.code(), e.what());
  } catch (const ConfigError& e) {
    send_error(send, "BadRequest", e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(send, "BadRequest", e.what());
  }
}

}  // namespace micobot::harness
