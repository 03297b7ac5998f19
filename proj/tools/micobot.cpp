// Command-line entry point: run, suite, replay, serve.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "micobot/harness/live.hpp"
#include "micobot/harness/suite.hpp"
#include "micobot/harness/trial.hpp"

#ifdef MICOBOT_HAVE_SERVER
#include "micobot/server/server.hpp"
#endif

using namespace micobot;
using namespace micobot::harness;

namespace {

struct RunArgs {
  std::string config;
  std::string scenario;
  std::string method;
  double human_p = 1.0;
  std::string mood;
  double alpha = 10.0;
  std::uint64_t seed = 0;
  std::string llm_endpoint;
  std::string script;
  std::string log;
  int q_samples = kDefaultQSamples;
};

TrialConfig build_config(const RunArgs& a, CLI::App& cmd) {
  TrialConfig c;
  if (!a.config.empty()) c = TrialConfig::load(a.config);
  if (cmd.count("--scenario")) c.scenario = a.scenario;
  if (cmd.count("--method")) c.method = Method::parse(a.method);
  if (cmd.count("--human-p")) c.human.params.p_tilde = a.human_p;
  if (cmd.count("--mood")) c.human.params.mood = human::parse_mood(a.mood);
  if (cmd.count("--alpha")) c.alpha = a.alpha;
  if (cmd.count("--seed")) c.seed = a.seed;
  if (cmd.count("--q-samples")) c.q_samples = a.q_samples;
  if (cmd.count("--script")) {
    c.human.kind = HumanSpec::Kind::Script;
    c.human.script = human::load_script(a.script);
  }
  if (cmd.count("--llm-endpoint")) {
    c.llm.enabled = true;
    c.llm.endpoint = a.llm_endpoint;
  }
  c.validate();
  return c;
}

void print_metrics(const Metrics& m) { std::cout << m.to_json().dump(2) << "\n"; }

#ifdef MICOBOT_HAVE_SERVER
server::SessionServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
#endif

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-initiative human-robot task allocation: trials, suites, replay and live sessions"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run one trial and print its metrics");
  run->add_option("--config", ra.config, "JSON config file with defaults")->check(CLI::ExistingFile);
  run->add_option("--scenario", ra.scenario, "Builtin scenario (task-1..task-3) or scenario file");
  run->add_option("--method", ra.method,
                  "micobot | random | recb:P | llm_proxy | h_init | r_init | no_phelp | no_hierarchy");
  run->add_option("--human-p", ra.human_p, "Simulated human acceptance probability")->check(CLI::Range(0.0, 1.0));
  run->add_option("--mood", ra.mood, "positive | negative");
  run->add_option("--alpha", ra.alpha, "Human effort factor");
  run->add_option("--seed", ra.seed, "Trial seed");
  run->add_option("--q-samples", ra.q_samples, "Robot rollouts per plan step for the Q table");
  run->add_option("--llm-endpoint", ra.llm_endpoint,
                  "Enable the language-model adapter at this chat-completions URL (credential from "
                  "MICOBOT_LLM_API_KEY)");
  run->add_option("--script", ra.script, "Scripted human instead of the simulated one")->check(CLI::ExistingFile);
  run->add_option("--log", ra.log, "Write the trial log (JSON lines) here; '-' for stdout");

  std::string grid_file;
  std::string out_dir = "suite-out";
  int jobs = 1;
  auto* suite = app.add_subcommand("suite", "Run a grid of trials and write report files");
  suite->add_option("--grid-file", grid_file, "JSON grid")->required()->check(CLI::ExistingFile);
  suite->add_option("--out-dir", out_dir, "Directory for report.csv, scatter.csv and trials.csv");
  suite->add_option("--jobs", jobs, "Parallel trials")->check(CLI::PositiveNumber);

  std::string replay_log;
  auto* rep = app.add_subcommand("replay", "Re-run a logged trial and compare it byte for byte");
  rep->add_option("--log", replay_log, "Trial log")->required()->check(CLI::ExistingFile);

  unsigned short port = 8080;
  std::string address = "127.0.0.1";
  std::string static_dir;
  std::string log_dir;
  std::string serve_config;
  int turn_timeout_ms = 120000;
  auto* serve = app.add_subcommand("serve", "Host live sessions for a human collaborator");
  serve->add_option("--port", port, "TCP port (0 picks one)");
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--static-dir", static_dir, "Client files to serve over HTTP");
  serve->add_option("--log-dir", log_dir, "Where finished session logs are written");
  serve->add_option("--config", serve_config, "JSON config with trial defaults")->check(CLI::ExistingFile);
  serve->add_option("--turn-timeout-ms", turn_timeout_ms, "Silence after this long counts as no reply")
      ->check(CLI::PositiveNumber);

  std::string scenario_name;
  auto* scen = app.add_subcommand("scenario", "Print a builtin scenario document, or a scenario file in normalized form");
  scen->add_option("name", scenario_name, "task-1 | task-2 | task-3 | path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const TrialConfig cfg = build_config(ra, *run);
      const TrialResult r = run_trial(cfg);
      if (ra.log == "-") {
        std::cout << r.log.serialize();
      } else if (!ra.log.empty()) {
        r.log.save(ra.log);
      }
      if (ra.log != "-") print_metrics(r.metrics);
      return 0;
    }
    if (*suite) {
      const SuiteGrid grid = SuiteGrid::load(grid_file);
      const SuiteReport report = run_suite(grid, jobs);
      report.write(out_dir);
      std::cout << report.report_csv();
      std::cerr << grid.trial_count() << " trials, reports in " << out_dir << "\n";
      return 0;
    }
    if (*rep) {
      std::ifstream in(replay_log, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      const ReplayResult r = replay(ss.str());
      if (r.identical) {
        std::cout << "identical\n";
        return 0;
      }
      std::cout << "differs at line " << r.first_difference << "\n";
      return 1;
    }
    if (*scen) {
      bool builtin = false;
      for (const auto& b : task::builtin_scenarios()) builtin = builtin || b.name == scenario_name;
      std::cout << (builtin ? task::builtin_document(scenario_name)
                            : task::serialize_scenario(task::resolve_scenario(scenario_name)));
      return 0;
    }
    if (*serve) {
#ifdef MICOBOT_HAVE_SERVER
      SessionProtocol::Options opts;
      if (!serve_config.empty()) opts.base = TrialConfig::load(serve_config);
      opts.base.human.kind = HumanSpec::Kind::Interactive;
      opts.base.human.turn_timeout_ms = turn_timeout_ms;
      opts.log_dir = log_dir;
      SessionProtocol protocol(opts);
      server::SessionServer srv(protocol, {address, port, static_dir});
      g_server = &srv;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving on " << address << ":" << srv.port() << " (websocket at /ws)\n";
      srv.run();
      protocol.shutdown();
      return 0;
#else
      std::cerr << "this build has no session server (configure with -DMICOBOT_BUILD_SERVER=ON)\n";
      return 2;
#endif
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
