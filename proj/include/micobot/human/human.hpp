#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "micobot/dialog/dialog.hpp"
#include "micobot/rng.hpp"
#include "micobot/task/scenario.hpp"

namespace micobot::human {

enum class Mood { Positive, Negative };
std::string_view to_string(Mood m);
/// Throws ConfigError.
Mood parse_mood(std::string_view name);

inline constexpr double kProactiveRatePositive = 0.1;
inline constexpr double kProactiveRateNegative = 0.02;
/// A proactive turn is a claim with probability kProactiveClaimShare * p_tilde,
/// otherwise smalltalk.
inline constexpr double kProactiveClaimShare = 0.1;

struct SimulatedHumanParams {
  double p_tilde = 1.0;
  Mood mood = Mood::Positive;
  /// Defaults by mood when unset.
  std::optional<double> proactive_rate;
  std::uint64_t seed = 0;

  double rate() const;
  /// Throws ConfigError.
  void validate() const;
};

/// What the human sees before acting.
struct Observation {
  const task::TaskScenario* scenario = nullptr;
  const world::SymbolicState* state = nullptr;
  int current_step = 0;
  int env_step = 0;
  std::vector<std::string> robot_utterances;
  /// Latest robot request, unresolved or accepted and not yet carried out.
  std::optional<dialog::PendingRequest> pending;
};

struct HumanTurn {
  std::string utterance;
  /// Plan steps performed this turn, in order.
  std::vector<int> perform;

  bool silent() const { return utterance.empty() && perform.empty(); }
  bool operator==(const HumanTurn&) const = default;
};

class HumanAgent {
 public:
  virtual ~HumanAgent() = default;
  virtual HumanTurn turn(const Observation& obs) = 0;
};

/// Utterance pools per mood. Positive and negative pools never share a line.
struct UtterancePools {
  std::vector<std::string> accept, reject, smalltalk, claim;
};
const UtterancePools& pools(Mood mood);

/// Parameterized human: answers requests with probability p_tilde, carries
/// out what it accepted, and occasionally speaks up on its own.
class SimulatedHuman final : public HumanAgent {
 public:
  explicit SimulatedHuman(SimulatedHumanParams params, bool proactive = true);
  HumanTurn turn(const Observation& obs) override;
  const SimulatedHumanParams& params() const { return params_; }

 private:
  SimulatedHumanParams params_;
  bool proactive_;
  Rng rng_;
  int answered_request_ = 0;
  std::vector<StepRange> commitments_;
};

/// One line of a fixture script.
struct Directive {
  enum class Kind { Reject, Accept, Say, Perform, Silence, Claim, Thanks };
  Kind kind = Kind::Silence;
  std::string text;
  StepRange steps;
  bool operator==(const Directive&) const = default;
};

/// "reject", "accept", "say TEXT", "perform STEP|B-E", "silence",
/// "claim STEP|B-E", "thanks"; '#' comments. Throws ParseError.
std::vector<Directive> parse_script(const std::string& document);
std::vector<Directive> load_script(const std::string& path);
std::string serialize_script(const std::vector<Directive>& script);

class ScriptExhausted : public Error {
 public:
  using Error::Error;
};

/// Replays a script. accept/reject wait for an unresolved request; other
/// directives fire on the next turn. An exhausted script is silent.
class FixtureHuman final : public HumanAgent {
 public:
  explicit FixtureHuman(std::vector<Directive> script) : script_(std::move(script)) {}
  HumanTurn turn(const Observation& obs) override;
  bool exhausted() const { return next_ >= script_.size(); }
  /// Throws ScriptExhausted.
  const Directive& peek() const;

 private:
  std::vector<Directive> script_;
  std::size_t next_ = 0;
  int answered_request_ = 0;
  std::vector<StepRange> commitments_;
};

/// Plays back recorded turns keyed by environment step.
class RecordedHuman final : public HumanAgent {
 public:
  explicit RecordedHuman(std::map<int, HumanTurn> turns) : turns_(std::move(turns)) {}
  HumanTurn turn(const Observation& obs) override;

 private:
  std::map<int, HumanTurn> turns_;
};

/// Time source for the interactive turn timeout; replaceable in tests.
class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;
  virtual ~Clock() = default;
  virtual time_point now() const = 0;
  /// Blocks until notified or `deadline` (as seen by this clock).
  virtual void wait_until(std::unique_lock<std::mutex>& lock, std::condition_variable& cv, time_point deadline) = 0;
  /// Called whenever time moves in a way waiters must observe.
  virtual void subscribe(std::function<void()> wake) { (void)wake; }
};

class SteadyClock final : public Clock {
 public:
  time_point now() const override { return std::chrono::steady_clock::now(); }
  void wait_until(std::unique_lock<std::mutex>& lock, std::condition_variable& cv, time_point deadline) override {
    cv.wait_until(lock, deadline);
  }
};

/// Manually advanced clock.
class FakeClock final : public Clock {
 public:
  time_point now() const override;
  void wait_until(std::unique_lock<std::mutex>& lock, std::condition_variable& cv, time_point deadline) override;
  void subscribe(std::function<void()> wake) override;
  void advance(std::chrono::milliseconds d);
  /// Number of threads currently blocked in wait_until.
  int waiters() const;

 private:
  mutable std::mutex m_;
  time_point now_{};
  int waiters_ = 0;
  std::vector<std::function<void()>> wakers_;
};

class SessionClosed : public Error {
 public:
  using Error::Error;
};

/// A message from the live collaborator.
struct BridgeMessage {
  std::string text;
  std::optional<int> perform_step;
};

/// Human turns taken from a message queue fed by a live session. A turn with
/// no message within the timeout is silent.
class InteractiveBridge final : public HumanAgent {
 public:
  explicit InteractiveBridge(std::chrono::milliseconds turn_timeout, std::shared_ptr<Clock> clock = nullptr);

  HumanTurn turn(const Observation& obs) override;

  void push(BridgeMessage message);
  /// Makes the current and all later turns throw SessionClosed.
  void close();
  bool closed() const;
  /// Turn currently waiting for input, if any.
  bool awaiting() const;
  /// Invoked (from the trial thread) when a turn starts waiting.
  void on_turn_started(std::function<void(const Observation&)> cb) { on_turn_ = std::move(cb); }

 private:
  std::chrono::milliseconds timeout_;
  std::shared_ptr<Clock> clock_;
  mutable std::mutex m_;
  std::condition_variable cv_;
  std::deque<BridgeMessage> queue_;
  bool closed_ = false;
  bool awaiting_ = false;
  std::function<void(const Observation&)> on_turn_;
  /// Lets clock wakers outlive the bridge.
  std::shared_ptr<char> alive_ = std::make_shared<char>();
};

}  // namespace micobot::human
