// shepherd — batch runner for the shepherding simulator.
//
//   shepherd sweep   --plan plan.json [--threads 4] [--out dir]
//   shepherd compare --plan plan.json [--scenario S1,S2] [--trials 30]
//   shepherd library --plan plan.json --out data/behaviour_library.json
//   shepherd library --show data/behaviour_library.json --scenario S2 [--metric ms]
//   shepherd trial   --scenario S5 --tp 5 --seed 7 [--mode context_aware] [--out t.shtr]
//   shepherd replay  traces/ [more files...] [--threads 4]
//
// Exit codes: 0 success, 2 configuration error, 3 replay divergence.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shepherd/shepherd.hpp"

namespace fs = std::filesystem;
using namespace shepherd;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct Overrides {
  std::string plan;
  std::vector<std::string> scenarios;
  std::vector<int> tps;
  int trials = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string mode;
  std::string out;
  std::string metric;
  std::string library;
  bool traces = false;
};

void add_plan_flags(CLI::App* cmd, Overrides& o, bool with_tp = true) {
  cmd->add_option("--plan", o.plan, "Experiment plan (JSON)");
  cmd->add_option("--scenario", o.scenarios, "Scenarios, e.g. S1,S5")->delimiter(',');
  if (with_tp) cmd->add_option("--tp", o.tps, "Tactic pair ids, e.g. 4,5")->delimiter(',');
  cmd->add_option("--trials", o.trials, "Trials per cell");
  cmd->add_option("--seed", o.seed, "Base seed")->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--mode", o.mode, "reactive | context_aware | both");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--metric", o.metric, "Metric for best-TP tables (default ms)");
  cmd->add_option("--library", o.library, "Behaviour library file");
  cmd->add_flag("--traces", o.traces, "Write a trace file per trial");
}

ExperimentPlan resolve_plan(const Overrides& o) {
  ExperimentPlan p;
  if (!o.plan.empty()) {
    p = load_plan(o.plan);
  } else {
    p.scenarios = all_scenarios();
    p.tps = all_tps();
  }
  if (!o.scenarios.empty()) {
    p.scenarios.clear();
    for (const auto& s : o.scenarios) {
      try {
        p.scenarios.push_back(parse_scenario(s));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("--scenario " + s + ": " + e.what());
      }
    }
  }
  if (!o.tps.empty()) p.tps = o.tps;
  if (o.trials != 0) p.trials_per_cell = o.trials;
  if (o.seed_set) p.base_seed = o.seed;
  if (!o.mode.empty()) p.agent_mode = parse_plan_mode(o.mode);
  if (!o.out.empty()) p.output_dir = o.out;
  if (!o.metric.empty()) {
    metric_value(MetricsReport{}, o.metric);  // rejects unknown names
    p.metric = o.metric;
  }
  if (!o.library.empty()) p.library = o.library;
  if (o.traces) p.write_traces = true;
  p.validate();
  return p;
}

int cmd_sweep(const Overrides& o, int threads) {
  const auto plan = resolve_plan(o);
  const auto r = run_sweep(plan, threads);
  write_sweep(plan, r);
  std::cout << r.rows.size() << " trials -> " << plan.output_dir << "\n";
  return 0;
}

int cmd_compare(const Overrides& o, int threads) {
  const auto plan = resolve_plan(o);
  const auto r = run_comparison(plan, threads);
  write_comparison(plan, r);
  std::cout << r.with_context.size() << " + " << r.without_context.size() << " trials -> " << plan.output_dir
            << "\n";
  std::cout << r.tables.at("effectiveness");
  return 0;
}

int cmd_library_build(Overrides o, int threads) {
  fs::path target = o.out.empty() ? fs::path("behaviour_library.json") : fs::path(o.out);
  o.out.clear();
  o.mode = "reactive";
  auto plan = resolve_plan(o);
  const auto r = run_sweep(plan, threads);
  write_atomic(target, library_text(r.library));
  std::cout << "library from " << r.rows.size() << " trials -> " << target.string() << "\n";
  return 0;
}

int cmd_library_show(const std::string& path, const Overrides& o) {
  BehaviourLibrary lib;
  try {
    lib = load_library(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!o.metric.empty()) lib.primary_metric = o.metric;
  std::vector<std::string> keys;
  for (const auto& s : o.scenarios) keys.push_back(to_string(parse_scenario(s)));
  if (keys.empty())
    for (const auto& [k, _] : lib.records) keys.push_back(k);
  for (const auto& key : keys) {
    std::cout << key << " (" << lib.primary_metric << ")";
    if (const auto it = lib.cadence.find(key); it != lib.cadence.end())
      std::cout << "  cadence " << it->second.first << "/" << it->second.second;
    std::cout << "\n";
    try {
      for (const auto& e : lib.ranked(key))
        std::cout << "  TP" << e.tp << "\t" << fmt6(e.mean) << " +- " << fmt6(e.std) << "  n=" << e.n_trials << "\n";
    } catch (const std::out_of_range& e) {
      throw ConfigError(e.what());
    }
  }
  return 0;
}

int cmd_trial(const Overrides& o, const std::string& mode_text) {
  ExperimentPlan plan;
  if (!o.plan.empty()) plan = load_plan(o.plan);
  if (!o.library.empty()) plan.library = o.library;
  SimConfig cfg = plan.sim;
  cfg.scenario = o.scenarios.empty() ? Scenario::S5 : parse_scenario(o.scenarios.front());
  cfg.seed = o.seed;
  const int tp = o.tps.empty() ? plan.baseline_tp : o.tps.front();
  if (tp < 1 || tp > 25) throw ConfigError("--tp must lie in 1..25");
  const auto pm = mode_text.empty() ? PlanMode::Reactive : parse_plan_mode(mode_text);
  if (pm == PlanMode::Both) throw ConfigError("trial runs a single agent mode");
  const auto mode = pm == PlanMode::Reactive ? AgentMode::Reactive : AgentMode::ContextAware;
  const auto ctx = context_for_plan(plan, mode == AgentMode::ContextAware);
  const auto rec = run_trial(cfg, tp, mode, ctx ? &*ctx : nullptr);
  const auto m = compute_metrics(rec, plan.kmeans_k);
  nlohmann::json j;
  j["scenario"] = to_string(cfg.scenario);
  j["tp"] = tp;
  j["seed"] = cfg.seed;
  j["agent_mode"] = to_string(mode);
  for (const auto& name : metric_names()) {
    const double v = metric_value(m, name);
    j[name] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(fmt6(v));
  }
  std::cout << j.dump() << "\n";
  if (!o.out.empty()) {
    write_file(o.out, serialise(make_trace(trace_header(rec, ctx ? &*ctx : nullptr), rec)));
    std::cerr << "trace -> " << o.out << "\n";
  }
  return 0;
}

int cmd_replay(const std::vector<std::string>& inputs, int threads) {
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(in))
        if (e.path().extension() == ".shtr") found.push_back(e.path().string());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      files.push_back(in);
    } else {
      throw ConfigError("no such trace: " + in);
    }
  }
  if (files.empty()) throw ConfigError("no trace files to replay");

  std::vector<Trace> traces;
  for (const auto& f : files) {
    try {
      traces.push_back(parse_trace(read_file(f)));
    } catch (const TraceError& e) {
      throw ConfigError(f + ": " + e.what());
    }
  }
  Replayer replayer;
  std::vector<ReplayResult> results(traces.size());
  parallel_for(traces.size(), threads, [&](std::size_t i) { results[i] = replayer.replay(traces[i]); });

  int diverged = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto& r = results[i];
    if (r.verified) {
      std::cout << "ok        " << files[i] << " (" << r.stored_steps << " steps)\n";
    } else {
      ++diverged;
      std::cout << "DIVERGED  " << files[i] << " at step " << *r.divergence << " (stored " << r.stored_steps
                << ", replayed " << r.replayed_steps << ")\n";
    }
  }
  return diverged ? kExitDivergence : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shepherding swarm simulator and experiment harness"};
  app.require_subcommand(1);
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  Overrides sweep_o, compare_o, lib_o, trial_o;
  std::string lib_show, trial_mode;
  std::vector<std::string> replay_in;

  auto* sweep = app.add_subcommand("sweep", "Run every (scenario, tp, trial) cell of a plan");
  add_plan_flags(sweep, sweep_o);
  auto* compare = app.add_subcommand("compare", "With/without-context comparison tables");
  add_plan_flags(compare, compare_o, false);
  auto* library = app.add_subcommand("library", "Build or inspect a behaviour library");
  add_plan_flags(library, lib_o);
  library->add_option("--show", lib_show, "Print the rankings stored in a library file");
  auto* trial = app.add_subcommand("trial", "Run one trial and print its metrics");
  trial->add_option("--plan", trial_o.plan, "Plan supplying the simulation template");
  trial->add_option("--scenario", trial_o.scenarios, "Scenario (default S5)")->expected(1);
  trial->add_option("--tp", trial_o.tps, "Tactic pair (default 5)")->expected(1);
  trial->add_option("--seed", trial_o.seed, "Trial seed");
  trial->add_option("--mode", trial_mode, "reactive | context_aware");
  trial->add_option("--out", trial_o.out, "Write the trajectory trace here");
  trial->add_option("--library", trial_o.library, "Behaviour library file");
  auto* replay = app.add_subcommand("replay", "Re-simulate traces and verify them byte for byte");
  replay->add_option("traces", replay_in, "Trace files or directories")->required();

  for (auto* sub : {sweep, compare, library, trial, replay})
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sweep) return cmd_sweep(sweep_o, threads);
    if (*compare) return cmd_compare(compare_o, threads);
    if (*library) return lib_show.empty() ? cmd_library_build(lib_o, threads) : cmd_library_show(lib_show, lib_o);
    if (*trial) return cmd_trial(trial_o, trial_mode);
    if (*replay) return cmd_replay(replay_in, threads);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
