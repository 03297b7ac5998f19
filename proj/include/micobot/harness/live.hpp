#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "micobot/harness/trial.hpp"

namespace micobot::harness {

/// Version of the live-session wire protocol (docs/session-protocol.md).
inline constexpr int kProtocolVersion = 1;

/// What a client renders: a pure fold over a trial's records.
class SessionView {
 public:
  explicit SessionView(task::TaskScenario scenario);

  /// Throws MalformedLog for records that do not fit the scenario.
  void apply(const LogRecord& record);
  /// View after folding `records` from scratch.
  static SessionView fold(task::TaskScenario scenario, const std::vector<LogRecord>& records);

  int current_step() const { return current_step_; }
  int plan_size() const { return scenario_.plan.size(); }
  bool terminated() const { return termination_.has_value(); }
  nlohmann::json to_json() const;

 private:
  task::TaskScenario scenario_;
  world::SymbolicState state_;
  std::vector<char> allocation_;
  std::vector<std::string> done_by_;
  nlohmann::json transcript_ = nlohmann::json::array();
  std::vector<double> p_help_trace_;
  nlohmann::json pending_;
  int current_step_ = 0;
  int env_step_ = 0;
  std::optional<std::string> termination_;
};

/// Error sent to a client; `code` is part of the protocol.
class ProtocolError : public Error {
 public:
  ProtocolError(std::string code, const std::string& what) : Error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// One interactive trial running on its own thread, with the human turns fed
/// by connected clients.
class LiveSession {
 public:
  using Send = std::function<void(const nlohmann::json&)>;

  /// The config's human is replaced by an interactive bridge.
  LiveSession(TrialConfig config, std::shared_ptr<human::Clock> clock = nullptr, std::string log_path = {});
  ~LiveSession();
  LiveSession(const LiveSession&) = delete;
  LiveSession& operator=(const LiveSession&) = delete;

  void start();
  /// Sends a snapshot to `send`, then every later message.
  void subscribe(int id, Send send);
  void unsubscribe(int id);
  nlohmann::json snapshot() const;

  /// Queues a human turn. Throws ProtocolError (InvalidStep, SessionClosed).
  void submit(const human::BridgeMessage& message);
  /// Aborts the trial if it is still running.
  void close();
  bool finished() const;
  /// Blocks until the trial thread ends.
  void wait();
  /// Set once finished.
  std::optional<TrialResult> result() const;
  /// True while a human turn is waiting for input.
  bool awaiting_turn() const { return bridge_->awaiting(); }

 private:
  void broadcast(const nlohmann::json& message);

  TrialConfig config_;
  std::string log_path_;
  std::shared_ptr<human::InteractiveBridge> bridge_;
  mutable std::mutex m_;
  SessionView view_;
  std::map<int, Send> subscribers_;
  std::optional<TrialResult> result_;
  bool finished_ = false;
  std::thread thread_;
};

/// Transport-independent handler for the session protocol. The socket server
/// feeds it text frames and delivers what it sends.
class SessionProtocol {
 public:
  struct Options {
    TrialConfig base;
    std::shared_ptr<human::Clock> clock;
    /// Directory for finished trial logs; empty to skip writing.
    std::string log_dir;
  };

  explicit SessionProtocol(Options options);
  ~SessionProtocol();

  int connect(LiveSession::Send send);
  void disconnect(int client);
  void handle(int client, const std::string& text);

  std::shared_ptr<LiveSession> session() const;
  /// Closes the running session, if any.
  void shutdown();

 private:
  void send_error(const LiveSession::Send& send, const std::string& code, const std::string& message) const;

  Options options_;
  mutable std::mutex m_;
  std::map<int, LiveSession::Send> clients_;
  std::map<int, bool> ready_;
  int next_client_ = 1;
  int sessions_started_ = 0;
  std::shared_ptr<LiveSession> session_;
};

}  // namespace micobot::harness
