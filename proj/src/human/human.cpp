#include "micobot/human/human.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "micobot/text.hpp"

namespace micobot::human {

std::string_view to_string(Mood m) { return m == Mood::Positive ? "positive" : "negative"; }

Mood parse_mood(std::string_view name) {
  const auto n = text::lower(name);
  if (n == "positive") return Mood::Positive;
  if (n == "negative") return Mood::Negative;
  throw ConfigError("unknown mood '" + std::string(name) + "' (expected positive or negative)");
}

double SimulatedHumanParams::rate() const {
  if (proactive_rate) return *proactive_rate;
  return mood == Mood::Positive ? kProactiveRatePositive : kProactiveRateNegative;
}

void SimulatedHumanParams::validate() const {
  if (!(p_tilde >= 0.0 && p_tilde <= 1.0)) throw ConfigError("p_tilde must lie in [0, 1]");
  const double r = rate();
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("proactive_rate must lie in [0, 1]");
}

const UtterancePools& pools(Mood mood) {
  static const UtterancePools kPositive{
      {"Ok, I will do that now!", "Sure, happy to help!", "Of course, I'm on it!"},
      {"Sorry, I can't do that right now.", "I'd love to, but I'm busy right now, sorry."},
      {"Thank you, you're doing great!", "Good job, robot!", "This is fun, thanks!"},
      {"I will {step}.", "Let me {step} for you!"},
  };
  static const UtterancePools kNegative{
      {"Fine, I'll do it.", "Ugh, okay, I'll do it."},
      {"No, I don't want to do that.", "Ugh, no. Do it yourself."},
      {"Ugh, this is taking forever.", "You are so slow, this is annoying.", "I'm tired of this."},
      {"I'll {step} myself, I guess.", "Ugh, I will {step}."},
  };
  return mood == Mood::Positive ? kPositive : kNegative;
}

namespace {

const std::string& pick(const std::vector<std::string>& pool, double u) {
  const auto n = pool.size();
  auto i = static_cast<std::size_t>(std::floor(u * static_cast<double>(n)));
  return pool[std::min(i, n - 1)];
}

/// Steps from the current one onward that some commitment covers.
std::vector<int> due_steps(std::vector<StepRange>& commitments, int current, int plan_size) {
  std::vector<int> out;
  int c = current;
  while (c < plan_size &&
         std::any_of(commitments.begin(), commitments.end(), [&](const StepRange& r) { return r.contains(c); })) {
    out.push_back(c++);
  }
  std::erase_if(commitments, [&](const StepRange& r) { return r.end <= c; });
  return out;
}

bool unanswered(const Observation& obs, int answered) {
  return obs.pending && !obs.pending->accepted && obs.pending->request_id != answered;
}

std::string claim_text(const std::string& tmpl, const task::PlanSpec& plan, StepRange r) {
  return text::substitute(tmpl, {{"step", dialog::range_phrase(plan, r)}});
}

StepRange rest_of_abstract(const task::PlanSpec& plan, int step) {
  return StepRange{step, plan.abstract_of(step).range.end};
}

}  // namespace

SimulatedHuman::SimulatedHuman(SimulatedHumanParams params, bool proactive)
    : params_(params), proactive_(proactive), rng_(params.seed) {
  params_.validate();
}

HumanTurn SimulatedHuman::turn(const Observation& obs) {
  // Fixed draw count per turn keeps streams aligned across p_tilde values.
  const double u_accept = rng_.uniform();
  const double u_proactive = rng_.uniform();
  const double u_claim = rng_.uniform();
  const double u_pool = rng_.uniform();

  const auto& plan = obs.scenario->plan;
  const auto& pool = pools(params_.mood);
  HumanTurn t;
  if (unanswered(obs, answered_request_)) {
    answered_request_ = obs.pending->request_id;
    if (u_accept < params_.p_tilde) {
      t.utterance = pick(pool.accept, u_pool);
      commitments_.push_back(obs.pending->human_range());
    } else {
      t.utterance = pick(pool.reject, u_pool);
    }
  } else if (proactive_ && !obs.pending && obs.current_step < plan.size() && u_proactive < params_.rate()) {
    if (u_claim < kProactiveClaimShare * params_.p_tilde) {
      const StepRange r = rest_of_abstract(plan, obs.current_step);
      t.utterance = claim_text(pick(pool.claim, u_pool), plan, r);
      commitments_.push_back(r);
    } else {
      t.utterance = pick(pool.smalltalk, u_pool);
    }
  }
  t.perform = due_steps(commitments_, obs.current_step, plan.size());
  return t;
}

std::vector<Directive> parse_script(const std::string& document) {
  std::vector<Directive> out;
  std::istringstream in(document);
  std::string line;
  int n = 0;
  auto steps = [&](std::string_view tok) {
    if (tok.find('-') != std::string_view::npos) {
      const auto r = StepRange::parse(tok);
      if (!r || r->empty()) throw ParseError("bad step range '" + std::string(tok) + "'", n);
      return *r;
    }
    const int i = static_cast<int>(text::parse_int(tok, n));
    if (i < 0) throw ParseError("negative step index", n);
    return StepRange{i, i + 1};
  };
  while (std::getline(in, line)) {
    ++n;
    const auto s = text::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto sp = s.find(' ');
    const std::string head = text::lower(s.substr(0, sp));
    const std::string rest = sp == std::string_view::npos ? "" : std::string(text::trim(s.substr(sp + 1)));
    Directive d;
    if (head == "reject" || head == "accept" || head == "silence" || head == "thanks") {
      if (!rest.empty()) throw ParseError("'" + head + "' takes no argument", n);
      d.kind = head == "reject"    ? Directive::Kind::Reject
               : head == "accept"  ? Directive::Kind::Accept
               : head == "silence" ? Directive::Kind::Silence
                                   : Directive::Kind::Thanks;
    } else if (head == "say") {
      if (rest.empty()) throw ParseError("'say' needs text", n);
      d.kind = Directive::Kind::Say;
      d.text = rest;
    } else if (head == "perform" || head == "claim") {
      if (rest.empty()) throw ParseError("'" + head + "' needs a step", n);
      d.kind = head == "perform" ? Directive::Kind::Perform : Directive::Kind::Claim;
      d.steps = steps(rest);
    } else {
      throw ParseError("unknown directive '" + head + "'", n);
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Directive> load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read human script '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_script(ss.str());
}

std::string serialize_script(const std::vector<Directive>& script) {
  std::string out;
  auto steps = [](StepRange r) { return r.size() == 1 ? std::to_string(r.begin) : r.to_string(); };
  for (const auto& d : script) {
    switch (d.kind) {
      case Directive::Kind::Reject: out += "reject\n"; break;
      case Directive::Kind::Accept: out += "accept\n"; break;
      case Directive::Kind::Silence: out += "silence\n"; break;
      case Directive::Kind::Thanks: out += "thanks\n"; break;
      case Directive::Kind::Say: out += "say " + d.text + "\n"; break;
      case Directive::Kind::Perform: out += "perform " + steps(d.steps) + "\n"; break;
      case Directive::Kind::Claim: out += "claim " + steps(d.steps) + "\n"; break;
    }
  }
  return out;
}

const Directive& FixtureHuman::peek() const {
  if (exhausted()) throw ScriptExhausted("fixture script has no directives left");
  return script_[next_];
}

HumanTurn FixtureHuman::turn(const Observation& obs) {
  HumanTurn t;
  const auto& plan = obs.scenario->plan;
  if (!exhausted()) {
    const Directive& d = script_[next_];
    switch (d.kind) {
      case Directive::Kind::Accept:
      case Directive::Kind::Reject:
        if (unanswered(obs, answered_request_)) {
          ++next_;
          answered_request_ = obs.pending->request_id;
          if (d.kind == Directive::Kind::Accept) {
            t.utterance = "Ok, I will do that now!";
            commitments_.push_back(obs.pending->human_range());
          } else {
            t.utterance = "Sorry, I can't do that right now.";
          }
        }
        break;
      case Directive::Kind::Say:
        ++next_;
        t.utterance = d.text;
        break;
      case Directive::Kind::Perform:
        ++next_;
        commitments_.push_back(d.steps);
        break;
      case Directive::Kind::Silence:
        ++next_;
        break;
      case Directive::Kind::Claim:
        ++next_;
        if (d.steps.end <= plan.size()) {
          t.utterance = "I will " + dialog::range_phrase(plan, d.steps) + ".";
          commitments_.push_back(d.steps);
        }
        break;
      case Directive::Kind::Thanks:
        ++next_;
        t.utterance = "Thank you so much!";
        break;
    }
  }
  t.perform = due_steps(commitments_, obs.current_step, plan.size());
  return t;
}

HumanTurn RecordedHuman::turn(const Observation& obs) {
  auto it = turns_.find(obs.env_step);
  return it == turns_.end() ? HumanTurn{} : it->second;
}

Clock::time_point FakeClock::now() const {
  std::lock_guard l(m_);
  return now_;
}

void FakeClock::wait_until(std::unique_lock<std::mutex>& lock, std::condition_variable& cv, time_point deadline) {
  {
    std::lock_guard l(m_);
    if (now_ >= deadline) return;
    ++waiters_;
  }
  cv.wait(lock);
  std::lock_guard l(m_);
  --waiters_;
}

void FakeClock::subscribe(std::function<void()> wake) {
  std::lock_guard l(m_);
  wakers_.push_back(std::move(wake));
}

void FakeClock::advance(std::chrono::milliseconds d) {
  std::vector<std::function<void()>> wakers;
  {
    std::lock_guard l(m_);
    now_ += d;
    wakers = wakers_;
  }
  for (auto& w : wakers) w();
}

int FakeClock::waiters() const {
  std::lock_guard l(m_);
  return waiters_;
}

InteractiveBridge::InteractiveBridge(std::chrono::milliseconds turn_timeout, std::shared_ptr<Clock> clock)
    : timeout_(turn_timeout), clock_(clock ? std::move(clock) : std::make_shared<SteadyClock>()) {
  if (timeout_.count() <= 0) throw ConfigError("turn timeout must be positive");
  std::weak_ptr<char> alive = alive_;
  clock_->subscribe([this, alive] {
    if (!alive.lock()) return;
    std::lock_guard l(m_);
    cv_.notify_all();
  });
}

HumanTurn InteractiveBridge::turn(const Observation& obs) {
  {
    std::lock_guard l(m_);
    if (closed_) throw SessionClosed("session closed");
    awaiting_ = true;
  }
  if (on_turn_) on_turn_(obs);
  std::unique_lock lk(m_);
  const auto deadline = clock_->now() + timeout_;
  while (queue_.empty() && !closed_ && clock_->now() < deadline) clock_->wait_until(lk, cv_, deadline);
  awaiting_ = false;
  if (closed_) throw SessionClosed("session closed during the human turn");
  if (queue_.empty()) return {};
  BridgeMessage msg = std::move(queue_.front());
  queue_.pop_front();
  HumanTurn t;
  t.utterance = msg.text;
  if (msg.perform_step) t.perform.push_back(*msg.perform_step);
  return t;
}

void InteractiveBridge::push(BridgeMessage message) {
  {
    std::lock_guard l(m_);
    queue_.push_back(std::move(message));
  }
  cv_.notify_all();
}

void InteractiveBridge::close() {
  {
    std::lock_guard l(m_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool InteractiveBridge::closed() const {
  std::lock_guard l(m_);
  return closed_;
}

bool InteractiveBridge::awaiting() const {
  std::lock_guard l(m_);
  return awaiting_;
}

}  // namespace micobot::human
