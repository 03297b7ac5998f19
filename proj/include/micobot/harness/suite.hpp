#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "micobot/harness/trial.hpp"

namespace micobot::harness {

/// methods x human settings x seeds, per scenario.
struct SuiteGrid {
  std::vector<std::string> scenarios = {"task-1"};
  std::vector<Method> methods;
  std::vector<human::SimulatedHumanParams> humans;
  std::vector<std::uint64_t> seeds;
  /// Applied to every trial (scenario, method, human and seed are replaced).
  TrialConfig base;

  std::size_t trial_count() const { return scenarios.size() * methods.size() * humans.size() * seeds.size(); }

  /// {"scenarios": [...], "methods": [...], "humans": [{"p_tilde", "mood"}...]
  ///  or "p_tilde": [...] with "moods": [...], "seeds": N | [...],
  ///  plus optional "alpha", "max_step_multiplier", "q_samples", "q_seed"}.
  /// Throws ConfigError.
  static SuiteGrid from_json(const nlohmann::json& j);
  static SuiteGrid load(const std::string& path);
};

struct TrialRow {
  std::string scenario;
  std::string method;
  human::SimulatedHumanParams human;
  std::uint64_t seed = 0;
  std::optional<Metrics> metrics;
  std::string error;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  int n = 0;
};

/// Mean and sample standard deviation (0 for fewer than two values).
Summary summarize(const std::vector<double>& values);

struct CellRow {
  std::string scenario;
  std::string method;
  human::SimulatedHumanParams human;
  int trials = 0;
  int errors = 0;
  std::string first_error;
  Summary success, steps_completed, human_steps, human_effort, help_requests, initial_acceptance,
      post_negotiation, initiative_shifts;
};

struct ScatterPoint {
  std::string method;
  double success = 0.0;
  double effort = 0.0;
};

struct SuiteReport {
  std::vector<CellRow> cells;
  std::vector<TrialRow> trials;
  std::vector<ScatterPoint> scatter;

  std::string report_csv() const;
  std::string scatter_csv() const;
  std::string trials_csv() const;
  /// Writes report.csv, scatter.csv and trials.csv into `dir` (created if needed).
  void write(const std::string& dir) const;
};

/// Runs every trial on up to `jobs` threads. recb:from:M takes p_c as M's mean
/// human step fraction in the same cell. Failing trials are recorded in their
/// cell; the suite continues. Output order depends only on the grid.
SuiteReport run_suite(const SuiteGrid& grid, int jobs = 1);

}  // namespace micobot::harness
