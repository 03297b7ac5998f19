#include "micobot/harness/suite.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <thread>

namespace micobot::harness {

using nlohmann::json;

SuiteGrid SuiteGrid::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("grid must be a JSON object");
  static const std::set<std::string> kKeys = {"scenarios", "methods", "humans", "p_tilde", "moods", "seeds",
                                              "alpha", "max_step_multiplier", "q_samples", "q_seed"};
  for (const auto& [k, v] : j.items()) {
    if (!kKeys.count(k)) throw ConfigError("unknown grid key '" + k + "'");
  }
  SuiteGrid g;
  try {
    if (j.contains("scenarios")) g.scenarios = j.at("scenarios").get<std::vector<std::string>>();
    if (j.contains("methods")) {
      for (const auto& m : j.at("methods")) g.methods.push_back(Method::parse(m.get<std::string>()));
    }
    if (j.contains("humans")) {
      for (const auto& h : j.at("humans")) {
        const HumanSpec spec = HumanSpec::from_json(h);
        if (spec.kind != HumanSpec::Kind::Simulated) throw ConfigError("grid humans must be simulated");
        g.humans.push_back(spec.params);
      }
    }
    if (j.contains("p_tilde")) {
      std::vector<std::string> moods = {"positive"};
      if (j.contains("moods")) moods = j.at("moods").get<std::vector<std::string>>();
      for (const auto& mood : moods) {
        for (double p : j.at("p_tilde").get<std::vector<double>>()) {
          human::SimulatedHumanParams h;
          h.mood = human::parse_mood(mood);
          h.p_tilde = p;
          h.validate();
          g.humans.push_back(h);
        }
      }
    } else if (j.contains("moods")) {
      throw ConfigError("'moods' needs 'p_tilde'");
    }
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      if (s.is_number_integer()) {
        const auto n = s.get<long long>();
        if (n < 0) throw ConfigError("seed count must be non-negative");
        for (long long i = 0; i < n; ++i) g.seeds.push_back(static_cast<std::uint64_t>(i));
      } else {
        g.seeds = s.get<std::vector<std::uint64_t>>();
      }
    }
    if (j.contains("alpha")) g.base.alpha = j.at("alpha").get<double>();
    if (j.contains("max_step_multiplier")) g.base.max_step_multiplier = j.at("max_step_multiplier").get<int>();
    if (j.contains("q_samples")) g.base.q_samples = j.at("q_samples").get<int>();
    if (j.contains("q_seed")) g.base.q_seed = j.at("q_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed grid: ") + e.what());
  }
  for (const auto& m : g.methods) {
    if (m.p_c_from && !std::any_of(g.methods.begin(), g.methods.end(),
                                   [&](const Method& x) { return x.to_string() == *m.p_c_from; })) {
      throw ConfigError("method " + m.to_string() + " needs " + *m.p_c_from + " in the grid");
    }
  }
  return g;
}

SuiteGrid SuiteGrid::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read grid '" + path + "'");
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("grid '" + path + "' is not valid JSON: " + e.what());
  }
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (s.n - 1));
  }
  return s;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string summary_fields(const Summary& s, bool with_sd) {
  if (s.n == 0) return with_sd ? "," : "";
  return with_sd ? num(s.mean) + "," + num(s.sd) : num(s.mean);
}

struct Job {
  std::size_t row;
  TrialConfig config;
};

void run_jobs(std::vector<Job>& jobs, std::vector<TrialRow>& rows, int threads) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      TrialRow& row = rows[jobs[i].row];
      try {
        row.metrics = run_trial(jobs[i].config).metrics;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

}  // namespace

SuiteReport run_suite(const SuiteGrid& grid, int jobs) {
  SuiteReport report;
  // Row layout: scenario, human, method, seed (seed fastest).
  struct CellKey {
    std::size_t scenario, human, method;
  };
  std::vector<CellKey> cells;
  for (std::size_t s = 0; s < grid.scenarios.size(); ++s) {
    for (std::size_t h = 0; h < grid.humans.size(); ++h) {
      for (std::size_t m = 0; m < grid.methods.size(); ++m) cells.push_back({s, h, m});
    }
  }
  const std::size_t per_cell = grid.seeds.size();
  report.trials.resize(cells.size() * per_cell);

  auto config_for = [&](const CellKey& c, std::uint64_t seed, const Method& method) {
    TrialConfig cfg = grid.base;
    cfg.scenario = grid.scenarios[c.scenario];
    cfg.method = method;
    cfg.human = HumanSpec{};
    cfg.human.params = grid.humans[c.human];
    cfg.seed = seed;
    return cfg;
  };

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto& c = cells[ci];
    for (std::size_t k = 0; k < per_cell; ++k) {
      auto& row = report.trials[ci * per_cell + k];
      row.scenario = grid.scenarios[c.scenario];
      row.method = grid.methods[c.method].to_string();
      row.human = grid.humans[c.human];
      row.seed = grid.seeds[k];
    }
  }

  // Phase 1: methods with fixed parameters. Phase 2: recb:from:M.
  for (int phase = 0; phase < 2; ++phase) {
    std::vector<Job> batch;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      const auto& c = cells[ci];
      const Method& method = grid.methods[c.method];
      if (static_cast<bool>(method.p_c_from) != (phase == 1)) continue;
      Method concrete = method;
      if (method.p_c_from) {
        std::vector<double> fractions;
        for (std::size_t ck = 0; ck < cells.size(); ++ck) {
          const auto& o = cells[ck];
          if (o.scenario != c.scenario || o.human != c.human) continue;
          if (grid.methods[o.method].to_string() != *method.p_c_from) continue;
          for (std::size_t k = 0; k < per_cell; ++k) {
            const auto& r = report.trials[ck * per_cell + k];
            if (r.metrics) fractions.push_back(r.metrics->human_steps_fraction);
          }
        }
        if (fractions.empty()) {
          for (std::size_t k = 0; k < per_cell; ++k) {
            report.trials[ci * per_cell + k].error = "no successful " + *method.p_c_from + " trials to take p_c from";
          }
          continue;
        }
        concrete.p_c_from.reset();
        concrete.p_c = summarize(fractions).mean;
      }
      for (std::size_t k = 0; k < per_cell; ++k) {
        batch.push_back({ci * per_cell + k, config_for(c, grid.seeds[k], concrete)});
      }
    }
    run_jobs(batch, report.trials, jobs);
  }

  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_method;
  std::vector<std::string> method_order;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto& c = cells[ci];
    CellRow cell;
    cell.scenario = grid.scenarios[c.scenario];
    cell.method = grid.methods[c.method].to_string();
    cell.human = grid.humans[c.human];
    std::vector<double> success, completed, hsteps, effort, help, initial, post, shifts;
    for (std::size_t k = 0; k < per_cell; ++k) {
      const auto& r = report.trials[ci * per_cell + k];
      ++cell.trials;
      if (!r.metrics) {
        ++cell.errors;
        if (cell.first_error.empty()) cell.first_error = r.error;
        continue;
      }
      const Metrics& m = *r.metrics;
      success.push_back(m.full_success ? 1.0 : 0.0);
      completed.push_back(m.steps_completed_fraction);
      hsteps.push_back(m.human_steps_fraction);
      effort.push_back(m.human_effort_seconds);
      help.push_back(m.help_requests);
      if (m.initial_acceptance) initial.push_back(*m.initial_acceptance);
      if (m.post_negotiation_acceptance) post.push_back(*m.post_negotiation_acceptance);
      shifts.push_back(m.initiative_shifts);
    }
    cell.success = summarize(success);
    cell.steps_completed = summarize(completed);
    cell.human_steps = summarize(hsteps);
    cell.human_effort = summarize(effort);
    cell.help_requests = summarize(help);
    cell.initial_acceptance = summarize(initial);
    cell.post_negotiation = summarize(post);
    cell.initiative_shifts = summarize(shifts);
    if (!by_method.count(cell.method)) method_order.push_back(cell.method);
    auto& agg = by_method[cell.method];
    agg.first.insert(agg.first.end(), success.begin(), success.end());
    agg.second.insert(agg.second.end(), effort.begin(), effort.end());
    report.cells.push_back(std::move(cell));
  }
  for (const auto& m : method_order) {
    const auto& agg = by_method[m];
    report.scatter.push_back({m, summarize(agg.first).mean, summarize(agg.second).mean});
  }
  return report;
}

std::string SuiteReport::report_csv() const {
  std::string out =
      "scenario,method,mood,p_tilde,trials,errors,success_mean,success_sd,steps_completed_mean,"
      "steps_completed_sd,human_steps_mean,human_steps_sd,human_effort_mean,human_effort_sd,"
      "help_requests_mean,initial_acceptance_mean,post_negotiation_acceptance_mean,initiative_shifts_mean,"
      "error\n";
  for (const auto& c : cells) {
    out += csv_field(c.scenario) + "," + csv_field(c.method) + "," + std::string(human::to_string(c.human.mood)) +
           "," + num(c.human.p_tilde) + "," + std::to_string(c.trials) + "," + std::to_string(c.errors) + "," +
           summary_fields(c.success, true) + "," + summary_fields(c.steps_completed, true) + "," +
           summary_fields(c.human_steps, true) + "," + summary_fields(c.human_effort, true) + "," +
           summary_fields(c.help_requests, false) + "," + summary_fields(c.initial_acceptance, false) + "," +
           summary_fields(c.post_negotiation, false) + "," + summary_fields(c.initiative_shifts, false) + "," +
           csv_field(c.first_error) + "\n";
  }
  return out;
}

std::string SuiteReport::scatter_csv() const {
  std::string out = "method,success,effort\n";
  for (const auto& p : scatter) out += csv_field(p.method) + "," + num(p.success) + "," + num(p.effort) + "\n";
  return out;
}

std::string SuiteReport::trials_csv() const {
  std::string out =
      "scenario,method,mood,p_tilde,seed,success,termination,env_steps,steps_completed,human_steps,"
      "human_effort,help_requests,initiative_shifts,error\n";
  for (const auto& r : trials) {
    out += csv_field(r.scenario) + "," + csv_field(r.method) + "," + std::string(human::to_string(r.human.mood)) +
           "," + num(r.human.p_tilde) + "," + std::to_string(r.seed) + ",";
    if (r.metrics) {
      const auto& m = *r.metrics;
      out += std::string(m.full_success ? "1" : "0") + "," + std::string(to_string(m.termination)) + "," +
             std::to_string(m.env_steps) + "," + num(m.steps_completed_fraction) + "," +
             num(m.human_steps_fraction) + "," + num(m.human_effort_seconds) + "," +
             std::to_string(m.help_requests) + "," + std::to_string(m.initiative_shifts) + ",";
    } else {
      out += ",,,,,,,,";
    }
    out += csv_field(r.error) + "\n";
  }
  return out;
}

void SuiteReport::write(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& body) {
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << body;
  };
  put("report.csv", report_csv());
  put("scatter.csv", scatter_csv());
  put("trials.csv", trials_csv());
}

}  // namespace micobot::harness
