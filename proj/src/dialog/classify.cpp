#include <algorithm>
#include <set>

#include "micobot/dialog/dialog.hpp"
#include "micobot/text.hpp"

namespace micobot::dialog {

namespace {

using Words = std::vector<std::string>;

constexpr std::size_t npos = static_cast<std::size_t>(-1);

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kWords = {"the", "a",    "an",   "to",   "into", "in",  "on",
                                               "of",  "and",  "with", "it",   "for",  "my",  "your",
                                               "me",  "then", "using", "now", "please", "is", "that"};
  return kWords;
}

std::string normalize_apostrophes(std::string s) {
  const std::string curly = "\xE2\x80\x99";
  for (std::size_t pos; (pos = s.find(curly)) != std::string::npos;) s.replace(pos, curly.size(), "'");
  return s;
}

Words tokenize(const std::string& text) { return text::words(normalize_apostrophes(text)); }

std::string stem(const std::string& w) {
  if (w.size() > 3 && w.back() == 's' && w[w.size() - 2] != 's') return w.substr(0, w.size() - 1);
  return w;
}

std::set<std::string> content(const Words& words) {
  std::set<std::string> out;
  for (const auto& w : words) {
    if (!stopwords().count(w)) out.insert(stem(w));
  }
  return out;
}

std::size_t find_phrase(const Words& w, const Words& phrase, std::size_t from = 0) {
  if (phrase.empty() || w.size() < phrase.size()) return npos;
  for (std::size_t i = from; i + phrase.size() <= w.size(); ++i) {
    if (std::equal(phrase.begin(), phrase.end(), w.begin() + static_cast<std::ptrdiff_t>(i))) return i;
  }
  return npos;
}

/// First occurrence of any marker at or after `from`; returns (index, length).
std::pair<std::size_t, std::size_t> find_any(const Words& w, const std::vector<Words>& markers,
                                             std::size_t from = 0) {
  std::pair<std::size_t, std::size_t> best{npos, 0};
  for (const auto& m : markers) {
    const auto i = find_phrase(w, m, from);
    if (i != npos && (best.first == npos || i < best.first || (i == best.first && m.size() > best.second))) {
      best = {i, m.size()};
    }
  }
  return best;
}

bool has_any(const Words& w, const std::vector<Words>& markers) { return find_any(w, markers).first != npos; }

Words slice(const Words& w, std::size_t b, std::size_t e) {
  b = std::min(b, w.size());
  e = std::min(e, w.size());
  return b < e ? Words(w.begin() + static_cast<std::ptrdiff_t>(b), w.begin() + static_cast<std::ptrdiff_t>(e))
               : Words{};
}

std::string unwords(const Words& w) { return text::join(w, " "); }

const std::vector<Words> kClaimMarkers = {{"i", "will"}, {"i'll"},        {"let", "me"},
                                          {"i", "can"},  {"i'm", "going"}, {"i", "am", "going"},
                                          {"leave", "it", "to", "me"}};
const std::vector<Words> kDelegateMarkers = {{"you", "should"}, {"can", "you"}, {"could", "you"},
                                             {"would", "you"},  {"please"},     {"you", "can"},
                                             {"you", "do"},     {"your", "turn"}};
const std::vector<Words> kNegation = {{"no"},    {"not"},   {"can't"}, {"cannot"}, {"won't"}, {"don't"},
                                      {"sorry"}, {"nope"},  {"busy"},  {"later"},  {"rather"}, {"refuse"}};
const std::vector<Words> kNotNegation = {{"no", "problem"}, {"not", "a", "problem"}, {"no", "worries"}};
const std::vector<Words> kAffirmation = {{"ok"},  {"okay"}, {"sure"},   {"yes"},      {"yeah"},
                                         {"fine"}, {"alright"}, {"on", "it"}, {"of", "course"},
                                         {"no", "problem"}, {"will", "do"}, {"happy", "to"}, {"yep"}};
const std::vector<Words> kAcknowledge = {{"thank", "you", "for", "taking", "care"},
                                         {"thanks", "for", "taking", "care"},
                                         {"got", "it"},
                                         {"noted"},
                                         {"understood"},
                                         {"sounds", "good"},
                                         {"ok"},
                                         {"okay"},
                                         {"alright"}};

Words strip(Words w, const std::vector<Words>& phrases) {
  for (const auto& p : phrases) {
    for (std::size_t i; (i = find_phrase(w, p)) != npos;) {
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(i), w.begin() + static_cast<std::ptrdiff_t>(i + p.size()));
    }
  }
  return w;
}

struct Candidate {
  StepRange range;
  int score = 0;
  bool low_level = false;
};

const std::map<world::PrimitiveKind, std::set<std::string>>& verb_synonyms() {
  using K = world::PrimitiveKind;
  static const std::map<K, std::set<std::string>> kVerbs = {
      {K::PickPlace, {"bring", "get", "fetch", "move", "place", "take", "carry", "pick", "put"}},
      {K::PickOpenPlace, {"open"}},
      {K::PickPourPlace, {"pour", "empty"}},
      {K::PutOn, {"attach", "assemble", "mount", "install", "put"}},
      {K::Switch, {"switch", "change", "swap"}},
      {K::Fold, {"fold"}},
      {K::Cover, {"cover", "close"}},
      {K::Wrap, {"wrap", "tie"}},
      {K::CutPut, {"cut", "tape"}},
  };
  return kVerbs;
}

std::set<std::string> ident_tokens(const std::string& ident) { return content(tokenize(text::humanize(ident))); }

int overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
  int n = 0;
  for (const auto& x : a) n += b.count(x) ? 1 : 0;
  return n;
}

std::vector<Candidate> candidates(const std::set<std::string>& tokens, const task::PlanSpec& plan) {
  std::vector<Candidate> out;
  for (const auto& a : plan.abstract_steps) {
    int best = 0;
    for (const auto& key : {content(tokenize(a.label)), content(tokenize(a.spoken()))}) {
      if (key.empty()) continue;
      const int hit = overlap(key, tokens);
      const int need = std::min<int>(2, static_cast<int>(key.size()));
      if (hit >= need && 2 * hit >= static_cast<int>(key.size())) best = std::max(best, hit);
    }
    if (best > 0) out.push_back({a.range, best, false});
  }
  for (int i = 0; i < plan.size(); ++i) {
    const auto& prim = plan.steps[static_cast<std::size_t>(i)];
    const auto& verbs = verb_synonyms().at(prim.kind);
    if (overlap(verbs, tokens) == 0) continue;
    const auto& primary = prim.primary_object();
    const int obj = overlap(ident_tokens(primary), tokens);
    if (obj == 0) continue;
    int others = 0;
    for (const auto& p : prim.params) {
      if (p != primary) others += overlap(ident_tokens(p), tokens);
    }
    out.push_back({StepRange{i, i + 1}, 1 + obj + others, true});
  }
  return out;
}

}  // namespace

std::optional<StepRange> resolve_step_ref(const std::string& phrase, const ClassifyContext& ctx,
                                          bool prefer_low_level) {
  if (!ctx.plan) return std::nullopt;
  auto cands = candidates(content(tokenize(phrase)), *ctx.plan);
  if (cands.empty()) return std::nullopt;
  const int cur = ctx.current_step;
  std::stable_sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.low_level != b.low_level) return a.low_level == prefer_low_level;
    const bool ai = a.range.end > cur, bi = b.range.end > cur;
    if (ai != bi) return ai;
    return a.range.begin < b.range.begin;
  });
  return cands.front().range;
}

namespace {

std::optional<StepRange> resolve_words(const Words& w, const ClassifyContext& ctx, bool low = false) {
  if (w.empty()) return std::nullopt;
  return resolve_step_ref(unwords(w), ctx, low);
}

bool refers_to_pending(const Words& w) {
  return has_any(w, {{"that"}, {"it"}, {"this"}});
}

/// Robot part and human part from "I can X, and you can Y" style proposals,
/// seen from a human speaker.
std::optional<std::pair<StepRange, StepRange>> split_parts(const Words& w, const ClassifyContext& ctx) {
  const auto mine = find_any(w, {{"i", "can"}, {"i", "will"}, {"i'll"}});
  if (mine.first == npos) return std::nullopt;
  const auto yours = find_any(w, {{"and", "you"}, {"you", "can"}, {"you"}}, mine.first + mine.second);
  if (yours.first == npos) return std::nullopt;
  const auto human = resolve_words(slice(w, mine.first + mine.second, yours.first), ctx, true);
  const auto robot = resolve_words(slice(w, yours.first + yours.second, w.size()), ctx, true);
  if (!human || !robot) return std::nullopt;
  return std::make_pair(*robot, *human);
}

DialogEvent make(Act act, const std::string& text, int turn_id) {
  DialogEvent e;
  e.turn_id = turn_id;
  e.initiator = Agent::Human;
  e.act = act;
  e.text = text;
  e.sentiment = lexicon_sentiment(text);
  return e;
}

}  // namespace

DialogEvent classify_incoming(const std::string& raw, const ClassifyContext& ctx, int turn_id) {
  const std::string text(text::trim(raw));
  const Words w = tokenize(text);
  if (w.empty()) {
    DialogEvent e;
    e.turn_id = turn_id;
    e.act = Act::Silence;
    return e;
  }
  const auto& pending = ctx.pending;

  // Conditional acceptance: "if you X, (then) I will Y".
  if (const auto ifyou = find_phrase(w, {"if", "you"}); ifyou != npos) {
    const auto mine = find_any(w, {{"i", "will"}, {"i'll"}, {"i", "can"}}, ifyou + 2);
    if (mine.first != npos) {
      const auto robot = resolve_words(slice(w, ifyou + 2, mine.first), ctx, true);
      const auto human = resolve_words(slice(w, mine.first + mine.second, w.size()), ctx, true);
      if (robot && human) {
        auto e = make(Act::ConditionalAccept, text, turn_id);
        e.robot_part = *robot;
        e.human_part = *human;
        e.step_refs = {*robot, *human};
        return e;
      }
    }
  }

  // Split proposals.
  if (find_phrase(w, {"let's", "collaborate"}) != npos || find_phrase(w, {"let", "us", "collaborate"}) != npos ||
      (has_any(w, {{"i", "can"}}) && has_any(w, {{"and", "you"}}))) {
    if (auto parts = split_parts(w, ctx)) {
      auto e = make(Act::ProposeSplit, text, turn_id);
      e.robot_part = parts->first;
      e.human_part = parts->second;
      e.step_refs = {parts->first, parts->second};
      return e;
    }
    if (find_phrase(w, {"let's", "collaborate"}) != npos) {
      auto ref = resolve_words(w, ctx);
      if (!ref && pending) ref = pending->range;
      if (ref) {
        auto e = make(Act::ProposeSplit, text, turn_id);
        e.step_refs = {*ref};
        return e;
      }
    }
  }

  // Stated inability.
  if (has_any(w, {{"not", "able", "to"}, {"unable", "to"}, {"isn't", "possible"}})) {
    if (pending) {
      auto e = make(Act::Reject, text, turn_id);
      e.step_refs = {pending->human_range()};
      return e;
    }
    auto e = make(Act::InformLimitation, text, turn_id);
    if (auto ref = resolve_words(w, ctx)) e.step_refs = {*ref};
    return e;
  }

  if (find_phrase(w, {"help", "me"}) != npos) {
    auto e = make(Act::AskHelp, text, turn_id);
    auto ref = resolve_words(w, ctx);
    if (!ref && ctx.plan && ctx.current_step < ctx.plan->size()) {
      const auto& a = ctx.plan->abstract_of(ctx.current_step);
      ref = StepRange{ctx.current_step, a.range.end};
    }
    if (ref) {
      e.step_refs = {*ref};
      return e;
    }
  }

  if (pending) {
    const Words cleaned = strip(w, kNotNegation);
    const auto respond = [&](Act act) {
      auto e = make(act, text, turn_id);
      e.step_refs = {pending->human_range()};
      if (act == Act::Accept) {
        e.robot_part = pending->robot_part;
        e.human_part = pending->human_part;
      }
      return e;
    };
    if (has_any(cleaned, kNegation)) return respond(Act::Reject);
    if (has_any(w, kAffirmation)) return respond(Act::Accept);
    const auto claim = find_any(w, kClaimMarkers);
    if (claim.first != npos) {
      const auto ref = resolve_words(slice(w, claim.first + claim.second, w.size()), ctx);
      if (!ref || ref->overlaps(pending->human_range())) return respond(Act::Accept);
    }
  }

  if (const auto claim = find_any(w, kClaimMarkers); claim.first != npos) {
    if (auto ref = resolve_words(slice(w, claim.first + claim.second, w.size()), ctx)) {
      auto e = make(Act::ClaimStep, text, turn_id);
      e.step_refs = {*ref};
      return e;
    }
  }

  if (const auto del = find_any(w, kDelegateMarkers); del.first != npos) {
    auto ref = resolve_words(slice(w, del.first + del.second, w.size()), ctx);
    if (!ref && pending && refers_to_pending(w)) ref = pending->range;
    if (ref) {
      auto e = make(Act::DelegateStep, text, turn_id);
      e.step_refs = {*ref};
      return e;
    }
  }

  if (has_any(w, kAcknowledge)) {
    auto e = make(Act::Acknowledge, text, turn_id);
    if (auto ref = resolve_words(w, ctx)) e.step_refs = {*ref};
    return e;
  }

  return make(Act::Smalltalk, text, turn_id);
}

Sentiment lexicon_sentiment(const std::string& text) {
  static const std::set<std::string> kPositive = {
      "thank", "thanks",    "great",   "good",       "awesome", "nice",    "fun",    "love",
      "happy", "glad",      "wonderful", "perfect",  "excellent", "appreciate", "amazing", "well",
      "yay",   "brilliant", "pleasure", "enjoy"};
  static const std::set<std::string> kNegative = {
      "ugh",     "annoying", "annoyed", "tired",   "hate",   "boring",  "useless", "frustrating",
      "slow",    "forever",  "stupid",  "terrible", "awful", "sick",    "irritating", "bother",
      "bothering", "lazy",   "worst",   "hopeless"};
  int score = 0;
  for (const auto& w : tokenize(text)) {
    if (kPositive.count(w)) ++score;
    if (kNegative.count(w)) --score;
  }
  return score > 0 ? Sentiment::Positive : score < 0 ? Sentiment::Negative : Sentiment::Neutral;
}

}  // namespace micobot::dialog
