#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "micobot/common.hpp"
#include "micobot/task/scenario.hpp"

namespace micobot::dialog {

enum class Act {
  AskHelp,
  Accept,
  Reject,
  ConditionalAccept,
  ProposeSplit,
  ClaimStep,
  DelegateStep,
  InformLimitation,
  Acknowledge,
  Smalltalk,
  Silence,
};

inline constexpr Act kAllActs[] = {
    Act::AskHelp,          Act::Accept,      Act::Reject,    Act::ConditionalAccept,
    Act::ProposeSplit,     Act::ClaimStep,   Act::DelegateStep, Act::InformLimitation,
    Act::Acknowledge,      Act::Smalltalk,   Act::Silence,
};

std::string_view to_string(Act act);
std::optional<Act> parse_act(std::string_view name);
/// Acts that must name at least one step.
bool needs_step_refs(Act act);

enum class Sentiment { Negative = -1, Neutral = 0, Positive = 1 };
std::string_view to_string(Sentiment s);
std::optional<Sentiment> parse_sentiment(std::string_view name);

struct DialogEvent {
  int turn_id = 0;
  Agent initiator = Agent::Human;
  Act act = Act::Silence;
  std::vector<StepRange> step_refs;
  std::string text;
  Sentiment sentiment = Sentiment::Neutral;
  /// For propose_split / conditional_accept: who does which part.
  std::optional<StepRange> robot_part;
  std::optional<StepRange> human_part;

  /// Smallest range covering every step ref; empty when there are none.
  StepRange span() const;
  /// Number of low-level steps referenced (at least 1).
  int weight() const;

  /// Throws ValidationError when the act's structural requirements fail.
  void validate(int plan_size) const;
  bool operator==(const DialogEvent&) const = default;
};

/// An outstanding robot request the human has not resolved yet.
struct PendingRequest {
  int request_id = 0;
  int episode = 0;
  Act act = Act::AskHelp;
  StepRange range;
  std::optional<StepRange> robot_part;
  std::optional<StepRange> human_part;
  bool accepted = false;
  /// Steps the human is asked to perform.
  StepRange human_range() const { return human_part ? *human_part : range; }
  bool operator==(const PendingRequest&) const = default;
};

struct ClassifyContext {
  const task::PlanSpec* plan = nullptr;
  /// First incomplete step.
  int current_step = 0;
  std::optional<PendingRequest> pending;
};

/// Sentiment from the fixed keyword lexicon.
Sentiment lexicon_sentiment(const std::string& text);

/// Resolves a phrase to the step range it names. Candidates are the abstract
/// steps and the individual low-level steps; the best token overlap wins,
/// abstract steps win ties unless `prefer_low_level`, and remaining ties go
/// to the earliest incomplete step.
std::optional<StepRange> resolve_step_ref(const std::string& phrase, const ClassifyContext& ctx,
                                          bool prefer_low_level = false);

/// Rule-based classification of a human utterance. Total: anything
/// unrecognized is smalltalk, empty text is silence.
DialogEvent classify_incoming(const std::string& text, const ClassifyContext& ctx, int turn_id = 0);

/// Help-probability estimate: Beta(1,1) posterior mean plus a bounded
/// sentiment offset.
struct PHelpEstimate {
  static constexpr double kMin = 0.01;
  static constexpr double kMax = 0.99;
  static constexpr double kOffsetStep = 0.05;
  static constexpr double kOffsetBound = 0.2;

  int accepts = 0;
  int rejects = 0;
  double offset = 0.0;

  double value() const;
  bool operator==(const PHelpEstimate&) const = default;
};

/// Accept-type acts add their step weight to accepts, reject adds it to
/// rejects, positive or negative smalltalk/acknowledge moves the offset.
/// Robot-initiated events leave the estimate unchanged.
PHelpEstimate update_p_help(const PHelpEstimate& estimate, const DialogEvent& event);

class UnknownStepRef : public Error {
 public:
  using Error::Error;
};

/// Sentence templates per act. Placeholders: {step}, {label}, {robot_part},
/// {human_part}. "ask_help_again" is used for a repeated request.
class TemplateSet {
 public:
  static TemplateSet defaults();
  /// "act: template" lines; '#' comments. Throws ParseError.
  static TemplateSet parse(const std::string& document);
  static TemplateSet load(const std::string& path);
  std::string serialize() const;

  const std::string& get(const std::string& key) const;
  void set(const std::string& key, std::string tmpl) { templates_[key] = std::move(tmpl); }
  bool operator==(const TemplateSet&) const = default;

 private:
  std::map<std::string, std::string> templates_;
};

/// How a low-level step is said ("bring the scissors to the coffee table").
std::string primitive_phrase(const world::PhysicalPrimitive& prim);
/// How a range is said: the abstract phrase when the range is exactly one
/// abstract step, otherwise the low-level phrases joined.
std::string range_phrase(const task::PlanSpec& plan, StepRange range);

struct ToneContext {
  /// Requests the human already turned down in this episode.
  int prior_rejections = 0;
};

/// Template realization. Throws UnknownStepRef for ranges outside the plan.
std::string realize_utterance(const TemplateSet& templates, Act act, const std::vector<StepRange>& step_refs,
                              const task::PlanSpec& plan, const ToneContext& tone = {},
                              std::optional<StepRange> robot_part = std::nullopt,
                              std::optional<StepRange> human_part = std::nullopt);

/// Rule-based cores plus optional overrides (e.g. an external model). An
/// override returning nullopt, or a structurally invalid result, falls back
/// to the core.
class DialogEngine {
 public:
  using ClassifyHook = std::function<std::optional<DialogEvent>(const std::string&, const ClassifyContext&)>;
  using SentimentHook = std::function<std::optional<Sentiment>(const std::string&)>;
  using RealizeHook = std::function<std::optional<std::string>(Act, const std::string& draft)>;

  explicit DialogEngine(TemplateSet templates = TemplateSet::defaults()) : templates_(std::move(templates)) {}

  void set_classify_hook(ClassifyHook h) { classify_hook_ = std::move(h); }
  void set_sentiment_hook(SentimentHook h) { sentiment_hook_ = std::move(h); }
  void set_realize_hook(RealizeHook h) { realize_hook_ = std::move(h); }

  DialogEvent classify(const std::string& text, const ClassifyContext& ctx, int turn_id) const;
  std::string realize(Act act, const std::vector<StepRange>& refs, const task::PlanSpec& plan,
                      const ToneContext& tone = {}, std::optional<StepRange> robot_part = std::nullopt,
                      std::optional<StepRange> human_part = std::nullopt) const;
  const TemplateSet& templates() const { return templates_; }

 private:
  TemplateSet templates_;
  ClassifyHook classify_hook_;
  SentimentHook sentiment_hook_;
  RealizeHook realize_hook_;
};

}  // namespace micobot::dialog
