// Scenario text format. Grammar: docs/scenario-format.md.

#include <set>
#include <sstream>

#include "micobot/task/scenario.hpp"
#include "micobot/text.hpp"

namespace micobot::task {

namespace {

using world::Cell;
using world::DurationDist;

struct Line {
  int number = 0;
  std::string raw;                  // without comment, trimmed
  std::vector<std::string> tokens;  // quoted tokens unescaped
};

std::vector<std::string> tokenize(std::string_view s, int line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == ' ' || s[i] == '\t') {
      ++i;
      continue;
    }
    if (s[i] == '"') {
      std::string tok;
      ++i;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == '\\' && i + 1 < s.size() && (s[i + 1] == '"' || s[i + 1] == '\\')) {
          tok.push_back(s[i + 1]);
          i += 2;
        } else if (s[i] == '"') {
          closed = true;
          ++i;
          break;
        } else {
          tok.push_back(s[i++]);
        }
      }
      if (!closed) throw ParseError("unterminated string", line);
      out.push_back(std::move(tok));
    } else {
      const auto start = i;
      while (i < s.size() && s[i] != ' ' && s[i] != '\t') {
        if (s[i] == '"') throw ParseError("stray quote", line);
        ++i;
      }
      out.emplace_back(s.substr(start, i - start));
    }
  }
  return out;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string strip_comment(std::string_view s) {
  bool in_quote = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && in_quote) {
      ++i;
      continue;
    }
    if (s[i] == '"') in_quote = !in_quote;
    if (s[i] == '#' && !in_quote) return std::string(s.substr(0, i));
  }
  return std::string(s);
}

Cell parse_cell(const std::string& tok, int line) {
  const auto parts = text::split(tok, ',');
  if (parts.size() != 2) throw ParseError("expected cell 'x,y', got '" + tok + "'", line);
  return Cell{static_cast<int>(text::parse_int(parts[0], line)),
              static_cast<int>(text::parse_int(parts[1], line))};
}

void expect_args(const Line& l, std::size_t n, const char* usage) {
  if (l.tokens.size() != n) throw ParseError(std::string("expected: ") + usage, l.number);
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

TaskScenario load_scenario(const std::string& document) {
  std::vector<Line> lines;
  {
    std::istringstream in(document);
    std::string raw;
    int n = 0;
    while (std::getline(in, raw)) {
      ++n;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      auto body = std::string(text::trim(strip_comment(raw)));
      if (body.empty()) continue;
      Line l;
      l.number = n;
      l.raw = body;
      l.tokens = tokenize(body, n);
      lines.push_back(std::move(l));
    }
  }

  TaskScenario sc;
  int width = 0, height = 0;
  double mpc = 1.0;
  std::uint64_t seed = 0;
  std::vector<world::Furniture> furniture;
  std::vector<std::pair<std::string, Cell>> agents;
  struct ObjectDecl {
    std::string name, location;
    std::set<std::string> flags;
    int line;
  };
  std::vector<ObjectDecl> objects;
  std::map<int, double> caps;
  std::map<PrimitiveKind, DurationDist> robot_durations;
  double irrecoverable = 0.0;
  bool have_skills = false;

  std::string section;
  const std::set<std::string> known_sections = {"world",        "objects",   "plan", "hierarchy",
                                                "capabilities", "durations", "robot"};
  for (const auto& l : lines) {
    const auto& t = l.tokens;
    if (l.raw.front() == '[') {
      if (l.raw.back() != ']') throw ParseError("malformed section header", l.number);
      section = std::string(text::trim(std::string_view(l.raw).substr(1, l.raw.size() - 2)));
      if (!known_sections.count(section)) throw ParseError("unknown section [" + section + "]", l.number);
      continue;
    }
    if (section.empty()) {
      if (t[0] == "scenario") {
        expect_args(l, 2, "scenario NAME");
        sc.name = t[1];
      } else if (t[0] == "description") {
        expect_args(l, 2, "description \"TEXT\"");
        sc.description = t[1];
      } else {
        throw ParseError("unexpected entry '" + t[0] + "' before first section", l.number);
      }
    } else if (section == "world") {
      if (t[0] == "size") {
        expect_args(l, 3, "size WIDTH HEIGHT");
        width = static_cast<int>(text::parse_int(t[1], l.number));
        height = static_cast<int>(text::parse_int(t[2], l.number));
      } else if (t[0] == "meters_per_cell") {
        expect_args(l, 2, "meters_per_cell M");
        mpc = text::parse_double(t[1], l.number);
      } else if (t[0] == "seed") {
        expect_args(l, 2, "seed N");
        seed = static_cast<std::uint64_t>(text::parse_int(t[1], l.number));
      } else if (t[0] == "furniture") {
        if (t.size() < 3) throw ParseError("expected: furniture NAME x,y [x,y ...]", l.number);
        world::Furniture f{t[1], {}};
        for (std::size_t i = 2; i < t.size(); ++i) f.cells.push_back(parse_cell(t[i], l.number));
        furniture.push_back(std::move(f));
      } else if (t[0] == "agent") {
        expect_args(l, 3, "agent NAME x,y");
        agents.emplace_back(t[1], parse_cell(t[2], l.number));
      } else {
        throw ParseError("unknown [world] key '" + t[0] + "'", l.number);
      }
    } else if (section == "objects") {
      if (t.size() < 2) throw ParseError("expected: NAME LOCATION [FLAG ...]", l.number);
      ObjectDecl d{t[0], t[1], {}, l.number};
      for (std::size_t i = 2; i < t.size(); ++i) d.flags.insert(t[i]);
      objects.push_back(std::move(d));
    } else if (section == "plan") {
      try {
        sc.plan.steps.push_back(world::PhysicalPrimitive::parse(l.raw));
      } catch (const ParseError& e) {
        throw ParseError(e.what(), l.number);
      }
    } else if (section == "hierarchy") {
      if (t.size() != 2 && t.size() != 3) {
        throw ParseError("expected: BEGIN..END \"LABEL\" [\"PHRASE\"]", l.number);
      }
      const auto dots = t[0].find("..");
      if (dots == std::string::npos) throw ParseError("expected range BEGIN..END", l.number);
      AbstractStep a;
      a.range.begin = static_cast<int>(text::parse_int(t[0].substr(0, dots), l.number));
      a.range.end = static_cast<int>(text::parse_int(t[0].substr(dots + 2), l.number));
      a.label = t[1];
      if (t.size() == 3) a.phrase = t[2];
      sc.plan.abstract_steps.push_back(std::move(a));
    } else if (section == "capabilities") {
      expect_args(l, 2, "STEP PROBABILITY");
      const int idx = static_cast<int>(text::parse_int(t[0], l.number));
      if (!caps.emplace(idx, text::parse_double(t[1], l.number)).second) {
        throw ParseError("duplicate capability for step " + t[0], l.number);
      }
    } else if (section == "durations") {
      expect_args(l, 3, "robot|human KIND VALUE");
      const auto kind = world::parse_kind(t[1]);
      if (!kind) throw ParseError("unknown primitive kind '" + t[1] + "'", l.number);
      if (t[0] == "robot") {
        try {
          robot_durations[*kind] = DurationDist::parse(t[2]);
        } catch (const ParseError& e) {
          throw ParseError(e.what(), l.number);
        }
      } else if (t[0] == "human") {
        sc.human_stationary[*kind] = text::parse_double(t[2], l.number);
      } else {
        throw ParseError("durations agent must be robot or human", l.number);
      }
    } else if (section == "robot") {
      if (t[0] == "irrecoverable") {
        expect_args(l, 2, "irrecoverable P");
        irrecoverable = text::parse_double(t[1], l.number);
      } else if (t[0] == "skills") {
        have_skills = true;
        for (std::size_t i = 1; i < t.size(); ++i) {
          const auto kind = world::parse_kind(t[i]);
          if (!kind) throw ParseError("unknown primitive kind '" + t[i] + "'", l.number);
          sc.robot_skills.push_back(*kind);
        }
      } else {
        throw ParseError("unknown [robot] key '" + t[0] + "'", l.number);
      }
    }
  }

  if (sc.name.empty()) throw ValidationError("scenario", "missing 'scenario NAME' header");
  sc.world = world::GridWorld(width, height, std::move(furniture), mpc, seed);
  sc.initial = world::SymbolicState(sc.world);
  for (const auto& [name, cell] : agents) sc.initial.set_agent_pose(name, cell);
  for (const auto& d : objects) sc.initial.add_object(d.name, d.location, d.flags);

  const int t_len = sc.plan.size();
  sc.plan.robot_capability.assign(static_cast<std::size_t>(t_len), -1.0);
  for (const auto& [idx, p] : caps) {
    if (idx < 0 || idx >= t_len) {
      throw ValidationError("capabilities." + std::to_string(idx), "step index outside plan");
    }
    sc.plan.robot_capability[static_cast<std::size_t>(idx)] = p;
  }
  for (int i = 0; i < t_len; ++i) {
    if (sc.plan.robot_capability[static_cast<std::size_t>(i)] < 0.0 && !caps.count(i)) {
      throw ValidationError("capabilities." + std::to_string(i), "missing capability");
    }
  }
  if (!(irrecoverable >= 0.0 && irrecoverable <= 1.0)) {
    throw ValidationError("robot.irrecoverable", "probability outside [0,1]");
  }

  sc.robot.agent = sc.robot_agent;
  for (const auto& [kind, dist] : robot_durations) {
    sc.robot.by_kind[kind] = world::SkillProfile{1.0, dist, irrecoverable};
  }
  sc.robot.fallback = world::SkillProfile{1.0, DurationDist::constant(world::kTimeoutSteps), irrecoverable};
  for (int i = 0; i < t_len; ++i) {
    const auto& prim = sc.plan.steps[static_cast<std::size_t>(i)];
    auto skill = sc.robot.lookup(prim);
    skill.p_success = sc.plan.robot_capability[static_cast<std::size_t>(i)];
    sc.robot.by_primitive[prim.to_string()] = skill;
  }
  if (!have_skills) {
    std::set<PrimitiveKind> kinds;
    for (const auto& s : sc.plan.steps) kinds.insert(s.kind);
    sc.robot_skills.assign(kinds.begin(), kinds.end());
  }
  sc.validate();
  return sc;
}

std::string serialize_scenario(const TaskScenario& sc) {
  std::ostringstream os;
  os << "scenario " << sc.name << "\n";
  if (!sc.description.empty()) os << "description " << quote(sc.description) << "\n";

  os << "\n[world]\n";
  os << "size " << sc.world.width() << " " << sc.world.height() << "\n";
  os << "meters_per_cell " << format_number(sc.world.meters_per_cell()) << "\n";
  os << "seed " << sc.world.seed() << "\n";
  for (const auto& f : sc.world.furniture()) {
    os << "furniture " << f.name;
    for (const auto& c : f.cells) os << " " << c.x << "," << c.y;
    os << "\n";
  }
  for (const auto& [agent, pose] : sc.initial.agent_poses()) {
    os << "agent " << agent << " " << pose.x << "," << pose.y << "\n";
  }

  os << "\n[objects]\n";
  for (const auto& [obj, loc] : sc.initial.locations()) {
    os << obj << " " << loc;
    for (const auto& flag : sc.initial.flags(obj)) os << " " << flag;
    os << "\n";
  }

  os << "\n[plan]\n";
  for (const auto& s : sc.plan.steps) os << s.to_string() << "\n";

  os << "\n[hierarchy]\n";
  for (const auto& a : sc.plan.abstract_steps) {
    os << a.range.begin << ".." << a.range.end << " " << quote(a.label);
    if (!a.phrase.empty()) os << " " << quote(a.phrase);
    os << "\n";
  }

  os << "\n[capabilities]\n";
  for (int i = 0; i < sc.plan.size(); ++i) {
    os << i << " " << format_number(sc.plan.robot_capability[static_cast<std::size_t>(i)]) << "\n";
  }

  os << "\n[durations]\n";
  for (const auto& [kind, skill] : sc.robot.by_kind) {
    os << "robot " << world::to_string(kind) << " " << skill.duration.to_string() << "\n";
  }
  for (const auto& [kind, secs] : sc.human_stationary) {
    os << "human " << world::to_string(kind) << " " << format_number(secs) << "\n";
  }

  os << "\n[robot]\n";
  os << "irrecoverable " << format_number(sc.robot.fallback.p_irrecoverable) << "\n";
  os << "skills";
  for (auto k : sc.robot_skills) os << " " << world::to_string(k);
  os << "\n";
  return os.str();
}

}  // namespace micobot::task
