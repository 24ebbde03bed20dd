#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "shepherd/config_io.hpp"
#include "shepherd/context.hpp"
#include "shepherd/library_io.hpp"
#include "shepherd/metrics.hpp"
#include "shepherd/reactive.hpp"
#include "shepherd/stats.hpp"
#include "shepherd/trace.hpp"

namespace shepherd {

/// Raised for invalid plans, flags or missing inputs (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PlanMode : std::uint8_t { Reactive, ContextAware, Both };

inline PlanMode parse_plan_mode(const std::string& s) {
  if (s == "reactive") return PlanMode::Reactive;
  if (s == "context_aware" || s == "context") return PlanMode::ContextAware;
  if (s == "both") return PlanMode::Both;
  throw ConfigError("agent_mode must be reactive, context_aware or both (got \"" + s + "\")");
}

inline std::string to_string(PlanMode m) {
  switch (m) {
    case PlanMode::Reactive: return "reactive";
    case PlanMode::ContextAware: return "context_aware";
    case PlanMode::Both: return "both";
  }
  return "reactive";
}

struct ContextSettings {
  WindowConfig window{};
  ClassScoreRule class_rule = ClassScoreRule::Mean;
  std::vector<std::uint64_t> calibration_seeds{11, 12, 13, 14, 15, 16};
  int calibration_steps = 600;
};

struct ExperimentPlan {
  std::vector<Scenario> scenarios;
  std::vector<int> tps;
  int trials_per_cell = 30;
  std::uint64_t base_seed = 1;
  PlanMode agent_mode = PlanMode::Reactive;
  SimConfig sim{};
  std::string output_dir = "out";
  std::string library = "data/behaviour_library.json";
  int baseline_tp = 5;
  double alpha = 0.05;
  int kmeans_k = 2;
  std::string metric = "ms";  // metric for the best-TP and suitability tables
  bool write_traces = false;
  ContextSettings context{};

  void validate() const {
    if (scenarios.empty()) throw ConfigError("plan: scenarios must be non-empty");
    if (tps.empty()) throw ConfigError("plan: tps must be non-empty");
    for (int tp : tps)
      if (tp < 1 || tp > 25) throw ConfigError("plan: tp ids must lie in 1..25");
    if (trials_per_cell < 1) throw ConfigError("plan: trials_per_cell must be >= 1");
    if (baseline_tp < 1 || baseline_tp > 25) throw ConfigError("plan: baseline_tp must lie in 1..25");
    if (!(alpha > 0 && alpha < 1)) throw ConfigError("plan: alpha must lie in (0,1)");
    if (kmeans_k < 2) throw ConfigError("plan: kmeans_k must be >= 2");
    try {
      sim.validate();
      context.window.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("plan: ") + e.what());
    }
    if (context.calibration_seeds.empty() || context.calibration_steps < context.window.omega)
      throw ConfigError("plan: calibration needs seeds and at least one full window of steps");
  }
};

inline std::vector<int> all_tps() {
  std::vector<int> v(25);
  for (int i = 0; i < 25; ++i) v[static_cast<std::size_t>(i)] = i + 1;
  return v;
}

inline std::vector<Scenario> all_scenarios() {
  std::vector<Scenario> v;
  for (std::size_t s = 0; s < kNumScenarios; ++s) v.push_back(scenario_at(s));
  return v;
}

inline nlohmann::json plan_to_json(const ExperimentPlan& p) {
  nlohmann::json j;
  auto& sc = j["scenarios"] = nlohmann::json::array();
  for (auto s : p.scenarios) sc.push_back(to_string(s));
  j["tps"] = p.tps;
  j["trials_per_cell"] = p.trials_per_cell;
  j["base_seed"] = p.base_seed;
  j["agent_mode"] = to_string(p.agent_mode);
  j["sim"] = sim_to_json(p.sim);
  j["output_dir"] = p.output_dir;
  j["library"] = p.library;
  j["baseline_tp"] = p.baseline_tp;
  j["alpha"] = p.alpha;
  j["kmeans_k"] = p.kmeans_k;
  j["metric"] = p.metric;
  j["write_traces"] = p.write_traces;
  j["context"] = {{"omega", p.context.window.omega},
                  {"tau", p.context.window.tau},
                  {"class_rule", p.context.class_rule == ClassScoreRule::Mean ? "mean" : "sum"},
                  {"calibration_seeds", p.context.calibration_seeds},
                  {"calibration_steps", p.context.calibration_steps}};
  return j;
}

inline ContextSettings context_settings_from_json(const nlohmann::json& c) {
  ContextSettings s;
  s.window.omega = c.value("omega", s.window.omega);
  s.window.tau = c.value("tau", s.window.tau);
  const std::string rule = c.value("class_rule", std::string("mean"));
  if (rule == "mean") s.class_rule = ClassScoreRule::Mean;
  else if (rule == "sum") s.class_rule = ClassScoreRule::Sum;
  else throw ConfigError("context.class_rule must be \"mean\" or \"sum\"");
  if (c.contains("calibration_seeds")) s.calibration_seeds = c["calibration_seeds"].get<std::vector<std::uint64_t>>();
  s.calibration_steps = c.value("calibration_steps", s.calibration_steps);
  return s;
}

inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
  ExperimentPlan p;
  try {
    if (!j.is_object()) throw ConfigError("plan must be a JSON object");
    if (j.contains("scenarios"))
      for (const auto& s : j["scenarios"]) p.scenarios.push_back(parse_scenario(s.get<std::string>()));
    else
      p.scenarios = all_scenarios();
    p.tps = j.contains("tps") ? j["tps"].get<std::vector<int>>() : all_tps();
    p.trials_per_cell = j.value("trials_per_cell", p.trials_per_cell);
    p.base_seed = j.value("base_seed", p.base_seed);
    p.agent_mode = parse_plan_mode(j.value("agent_mode", std::string("reactive")));
    if (j.contains("sim")) p.sim = sim_from_json(j["sim"]);
    p.output_dir = j.value("output_dir", p.output_dir);
    p.library = j.value("library", p.library);
    p.baseline_tp = j.value("baseline_tp", p.baseline_tp);
    p.alpha = j.value("alpha", p.alpha);
    p.kmeans_k = j.value("kmeans_k", p.kmeans_k);
    p.metric = j.value("metric", p.metric);
    p.write_traces = j.value("write_traces", p.write_traces);
    if (j.contains("context")) p.context = context_settings_from_json(j["context"]);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
  p.validate();
  return p;
}

inline ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("plan file not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("plan " + path + " is not valid JSON: " + e.what());
  }
  return plan_from_json(j);
}

// ---------------------------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------------------------

/// Everything the context-aware agent needs, shared read-only across trials.
struct ContextResources {
  BehaviourLibrary library;
  ContextModel model;
  ContextOptions options;
  ContextSettings settings;
};

inline ContextResources prepare_context(BehaviourLibrary library, const SimConfig& sim,
                                        const ContextSettings& settings, double alpha) {
  library.validate();
  CalibrationConfig cal;
  cal.sim = sim;
  cal.window = settings.window;
  cal.seeds = settings.calibration_seeds;
  cal.steps = settings.calibration_steps;
  ContextResources r{std::move(library), calibrate_centroids(cal), {}, settings};
  r.options.window = settings.window;
  r.options.alpha = alpha;
  r.options.class_rule = settings.class_rule;
  return r;
}

/// Runs one trial until the flock reaches the goal or t_max. The reactive agent keeps `tp` at
/// unit cadence throughout; the context-aware agent starts from it and retunes after each window.
inline TrialRecord run_trial(const SimConfig& cfg, int tp, AgentMode mode, const ContextResources* ctx = nullptr) {
  if (mode == AgentMode::ContextAware && !ctx) throw ConfigError("context-aware trial needs a behaviour library");
  TrialRecord rec{cfg, mode, tp, {}};
  WorldState w = spawn_scenario(cfg);
  ControllerState ctrl;
  ctrl.tp = tactic_pair(tp);
  std::optional<ContextAgent> agent;
  if (mode == AgentMode::ContextAware) agent.emplace(ctx->model, ctx->library, cfg.constants, ctx->options);

  BehaviourKind last = BehaviourKind::Drive;
  for (;;) {
    if (agent) {
      if (const auto u = agent->observe(w, ctrl.tp)) {
        if (u->tp.id != ctrl.tp.id) ctrl.last_decision.reset();
        ctrl.tp = u->tp;
        ctrl.sigma_c2 = u->sigma_c2;
        ctrl.sigma_c3 = u->sigma_c3;
      }
    }
    TrialStep st;
    st.t = w.t;
    st.sheep.reserve(w.sheep.size());
    for (const auto& s : w.sheep) st.sheep.push_back(s.position);
    st.shepherd = w.shepherd_pos;
    st.tp_id = ctrl.tp.id;
    st.kind = last;
    if (is_mission_complete(w) || w.t >= cfg.t_max) {
      rec.steps.push_back(std::move(st));
      break;
    }
    auto [decision, next] = reactive_policy(w, std::move(ctrl), cfg.constants);
    ctrl = std::move(next);
    st.kind = last = decision.kind;
    rec.steps.push_back(std::move(st));
    w = step(w, decision.steering_point, cfg.constants);
  }
  return rec;
}

// ---------------------------------------------------------------------------------------------
// Traces and replay
// ---------------------------------------------------------------------------------------------

inline nlohmann::json trace_header(const TrialRecord& rec, const ContextResources* ctx) {
  nlohmann::json h;
  h["mode"] = to_string(rec.mode);
  h["scenario"] = to_string(rec.config.scenario);
  h["seed"] = rec.config.seed;
  h["tp"] = rec.tp_id;
  h["sim"] = sim_to_json(rec.config);
  if (rec.mode == AgentMode::ContextAware && ctx) {
    // Only the metrics the agent reads are embedded.
    BehaviourLibrary slim;
    slim.primary_metric = ctx->library.primary_metric;
    slim.tiebreak_metric = ctx->library.tiebreak_metric;
    slim.cadence = ctx->library.cadence;
    for (const auto& [key, metrics] : ctx->library.records)
      for (const auto& [metric, entries] : metrics)
        if (metric == slim.primary_metric || metric == slim.tiebreak_metric) slim.records[key][metric] = entries;
    h["context"] = {{"omega", ctx->settings.window.omega},
                    {"tau", ctx->settings.window.tau},
                    {"alpha", ctx->options.alpha},
                    {"class_rule", ctx->settings.class_rule == ClassScoreRule::Mean ? "mean" : "sum"},
                    {"calibration_seeds", ctx->settings.calibration_seeds},
                    {"calibration_steps", ctx->settings.calibration_steps},
                    {"library", library_to_json(slim)}};
  }
  return h;
}

struct ReplayResult {
  bool verified = false;
  std::optional<std::size_t> divergence;  // first differing step index
  std::size_t stored_steps = 0;
  std::size_t replayed_steps = 0;
};

/// Re-simulates a stored trace from its header and compares every step record byte for byte.
/// Context model calibrations are cached by their header text across calls.
class Replayer {
 public:
  ReplayResult replay(const Trace& trace) {
    const auto& h = trace.header;
    SimConfig cfg;
    AgentMode mode = AgentMode::Reactive;
    int tp = 5;
    const ContextResources* ctx = nullptr;
    try {
      cfg = sim_from_json(h.at("sim"));
      cfg.scenario = parse_scenario(h.at("scenario").get<std::string>());
      cfg.seed = h.at("seed").get<std::uint64_t>();
      tp = h.at("tp").get<int>();
      const auto m = h.at("mode").get<std::string>();
      if (m == "context_aware") mode = AgentMode::ContextAware;
      else if (m != "reactive") throw TraceError("unknown agent mode in trace: " + m);
      if (mode == AgentMode::ContextAware) ctx = &context_for(h.at("context"), cfg);
    } catch (const nlohmann::json::exception& e) {
      throw TraceError(std::string("trace header incomplete: ") + e.what());
    }
    const auto fresh = make_trace(h, run_trial(cfg, tp, mode, ctx));
    ReplayResult r;
    r.stored_steps = trace.steps.size();
    r.replayed_steps = fresh.steps.size();
    r.divergence = first_divergence(trace.steps, fresh.steps);
    r.verified = !r.divergence;
    return r;
  }

 private:
  const ContextResources& context_for(const nlohmann::json& c, const SimConfig& cfg) {
    const std::string key = c.dump() + sim_to_json(cfg).dump();
    std::lock_guard lock(mu_);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      ContextSettings s = context_settings_from_json(c);
      auto lib = library_from_json(c.at("library"));
      it = cache_.emplace(key, prepare_context(std::move(lib), cfg, s, c.at("alpha").get<double>())).first;
    }
    return it->second;
  }

  std::mutex mu_;
  std::map<std::string, ContextResources> cache_;
};

// ---------------------------------------------------------------------------------------------
// Parallel execution
// ---------------------------------------------------------------------------------------------

/// Runs fn(0..n-1) on up to `threads` workers pulling indices from a shared counter. The first
/// exception stops further work and is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<long long>(threads, 1, static_cast<long long>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  const auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------------------------
// Metric rows and CSV
// ---------------------------------------------------------------------------------------------

struct TrialRow {
  Scenario scenario = Scenario::S5;
  int tp = 5;
  int trial = 0;
  std::uint64_t seed = 0;
  AgentMode mode = AgentMode::Reactive;
  MetricsReport m;
};

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"ms",       "mcr",        "msp",        "mds",
                                              "dss",      "mss",        "mission_length",
                                              "switches", "sep_sum",    "influenced", "swarm_dist",
                                              "shepherd_dist", "mean_separated"};
  return names;
}

inline double metric_value(const MetricsReport& m, const std::string& name) {
  if (name == "ms") return m.ms;
  if (name == "mcr") return m.mcr;
  if (name == "msp") return m.msp;
  if (name == "mds") return m.mds;
  if (name == "dss") return m.dss;
  if (name == "mss") return m.mss;
  if (name == "mission_length") return m.mission_length;
  if (name == "switches") return m.switches;
  if (name == "sep_sum") return m.separated_sum_per_capita;
  if (name == "influenced") return m.influenced_count;
  if (name == "swarm_dist") return m.swarm_total_dist;
  if (name == "shepherd_dist") return m.shepherd_total_dist;
  if (name == "mean_separated") return m.mean_separated;
  throw ConfigError("unknown metric: " + name);
}

inline bool higher_is_better(const std::string& metric) {
  return metric == "ms" || metric == "msp" || metric == "mds" || metric == "mss" || metric == "influenced";
}

/// Six significant digits, '.' decimal point, independent of the process locale.
inline std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(6);
  os << v;
  return os.str();
}

inline const char* kMetricsCsvHeader =
    "scenario,tp,trial,seed,ms,mcr,msp,mds,dss,mss,mission_length,switches,sep_sum,influenced,"
    "swarm_dist,shepherd_dist,agent_mode\n";

inline std::string csv_row(const TrialRow& r) {
  const auto& m = r.m;
  std::string s = to_string(r.scenario) + "," + std::to_string(r.tp) + "," + std::to_string(r.trial) + "," +
                  std::to_string(r.seed);
  for (double v : {static_cast<double>(m.ms), m.mcr, m.msp, m.mds, m.dss, m.mss})
    s += "," + fmt6(v);
  s += "," + std::to_string(m.mission_length) + "," + std::to_string(m.switches);
  for (double v : {m.separated_sum_per_capita, m.influenced_count, m.swarm_total_dist, m.shepherd_total_dist})
    s += "," + fmt6(v);
  s += "," + to_string(r.mode) + "\n";
  return s;
}

inline std::string metrics_csv(const std::vector<TrialRow>& rows) {
  std::string out = kMetricsCsvHeader;
  for (const auto& r : rows) out += csv_row(r);
  return out;
}

/// Writes via a temporary sibling and rename, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<double> finite_only(const std::vector<double>& xs) {
  std::vector<double> out;
  for (double x : xs)
    if (std::isfinite(x)) out.push_back(x);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------------------------

inline const std::vector<std::string>& library_metrics() {
  static const std::vector<std::string> names{"ms",      "msp",     "mds",        "dss",
                                              "mss",     "mission_length", "switches",
                                              "sep_sum", "influenced", "swarm_dist", "shepherd_dist"};
  return names;
}

/// Library records per scenario, plus HET/HOM pools over whichever scenarios were swept, and
/// the default cadence for every key. Only reactive rows contribute.
inline BehaviourLibrary build_library(const std::vector<TrialRow>& rows, const std::string& primary = "ms") {
  BehaviourLibrary lib;
  lib.primary_metric = primary;
  std::map<std::string, std::map<int, std::vector<const TrialRow*>>> groups;
  for (const auto& r : rows) {
    if (r.mode != AgentMode::Reactive) continue;
    groups[to_string(r.scenario)][r.tp].push_back(&r);
    groups[is_heterogeneous(r.scenario) ? kHeterogeneousKey : kHomogeneousKey][r.tp].push_back(&r);
  }
  for (const auto& [key, by_tp] : groups) {
    for (const auto& metric : library_metrics()) {
      for (const auto& [tp, members] : by_tp) {
        std::vector<double> xs;
        for (const auto* r : members) xs.push_back(metric_value(r->m, metric));
        xs = finite_only(xs);
        if (xs.empty()) continue;
        const auto s = stats::summarise(xs);
        lib.add(key, metric, {tp, s.mean, s.std, s.n});
      }
    }
    lib.cadence[key] = kDefaultCadence;
  }
  return lib;
}

struct SweepResult {
  std::vector<TrialRow> rows;
  BehaviourLibrary library;
};

struct TrialTask {
  Scenario scenario;
  int tp;
  int trial;
  AgentMode mode;
  std::uint64_t seed;
};

inline std::uint64_t scenario_number(Scenario s) { return index_of(s) + 1; }

inline std::string trace_name(const TrialTask& t) {
  return to_string(t.scenario) + "_TP" + std::to_string(t.tp) + "_" +
         (t.mode == AgentMode::Reactive ? "R" : "C") + std::to_string(t.trial) + ".shtr";
}

inline TrialRow execute(const TrialTask& task, const ExperimentPlan& plan, const ContextResources* ctx,
                        const std::optional<std::filesystem::path>& trace_dir) {
  SimConfig cfg = plan.sim;
  cfg.scenario = task.scenario;
  cfg.seed = task.seed;
  const auto rec = run_trial(cfg, task.tp, task.mode, ctx);
  if (trace_dir) write_file((*trace_dir / trace_name(task)).string(), serialise(make_trace(trace_header(rec, ctx), rec)));
  return {task.scenario, task.tp, task.trial, task.seed, task.mode, compute_metrics(rec, plan.kmeans_k)};
}

inline std::vector<TrialRow> run_tasks(const std::vector<TrialTask>& tasks, const ExperimentPlan& plan,
                                       const ContextResources* ctx, int threads,
                                       const std::optional<std::filesystem::path>& trace_dir = std::nullopt) {
  if (trace_dir) std::filesystem::create_directories(*trace_dir);
  std::vector<TrialRow> rows(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t i) { rows[i] = execute(tasks[i], plan, ctx, trace_dir); });
  return rows;
}

/// Every (mode, scenario, tp, trial) cell of the plan in output order. Seeds depend only on the
/// cell, so any subset reproduces the same rows.
inline std::vector<TrialTask> sweep_tasks(const ExperimentPlan& plan) {
  std::vector<AgentMode> modes;
  if (plan.agent_mode != PlanMode::ContextAware) modes.push_back(AgentMode::Reactive);
  if (plan.agent_mode != PlanMode::Reactive) modes.push_back(AgentMode::ContextAware);
  std::vector<TrialTask> tasks;
  for (auto mode : modes)
    for (auto s : plan.scenarios)
      for (int tp : plan.tps)
        for (int k = 0; k < plan.trials_per_cell; ++k)
          tasks.push_back({s, tp, k, mode,
                           trial_seed(plan.base_seed, scenario_number(s), static_cast<std::uint64_t>(tp),
                                      static_cast<std::uint64_t>(k))});
  return tasks;
}

inline std::optional<ContextResources> context_for_plan(const ExperimentPlan& plan, bool needed) {
  if (!needed) return std::nullopt;
  BehaviourLibrary lib;
  try {
    lib = load_library(plan.library);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  try {
    return prepare_context(std::move(lib), plan.sim, plan.context, plan.alpha);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(plan.library + ": " + e.what());
  }
}

inline SweepResult run_sweep(const ExperimentPlan& plan, int threads) {
  plan.validate();
  const auto ctx = context_for_plan(plan, plan.agent_mode != PlanMode::Reactive);
  std::optional<std::filesystem::path> traces;
  if (plan.write_traces) traces = std::filesystem::path(plan.output_dir) / "traces";
  SweepResult r;
  r.rows = run_tasks(sweep_tasks(plan), plan, ctx ? &*ctx : nullptr, threads, traces);
  r.library = build_library(r.rows);
  return r;
}

inline stats::ResultsTable results_table(const std::vector<TrialRow>& rows, const std::string& metric) {
  stats::ResultsTable t;
  for (const auto& r : rows)
    if (r.mode == AgentMode::Reactive) t[{r.scenario, r.tp}].push_back(metric_value(r.m, metric));
  for (auto& [_, xs] : t) xs = finite_only(xs);
  std::erase_if(t, [](const auto& kv) { return kv.second.empty(); });
  return t;
}

/// Mean and std per (mode, scenario, tp) for every metric.
inline std::string summary_csv(const std::vector<TrialRow>& rows) {
  std::map<std::tuple<int, int, int>, std::vector<const TrialRow*>> cells;
  for (const auto& r : rows)
    cells[{static_cast<int>(r.mode), static_cast<int>(index_of(r.scenario)), r.tp}].push_back(&r);
  std::string out = "agent_mode,scenario,tp,n";
  for (const auto& m : metric_names()) out += "," + m + "_mean," + m + "_std";
  out += "\n";
  for (const auto& [key, members] : cells) {
    const auto& [mode, s, tp] = key;
    out += to_string(static_cast<AgentMode>(mode)) + "," + to_string(scenario_at(static_cast<std::size_t>(s))) +
           "," + std::to_string(tp) + "," + std::to_string(members.size());
    for (const auto& m : metric_names()) {
      std::vector<double> xs;
      for (const auto* r : members) xs.push_back(metric_value(r->m, m));
      xs = finite_only(xs);
      if (xs.empty()) {
        out += ",nan,nan";
        continue;
      }
      const auto sm = stats::summarise(xs);
      out += "," + fmt6(sm.mean) + "," + fmt6(sm.std);
    }
    out += "\n";
  }
  return out;
}

inline std::string best_tp_csv(const std::vector<TrialRow>& rows, const std::string& metric, double alpha) {
  std::string out = "scenario,metric,best_tp,best_mean,best_std,tp5_mean,tp5_std,significant\n";
  for (const auto& row : stats::best_tp_table(results_table(rows, metric), higher_is_better(metric), alpha)) {
    out += to_string(row.scenario) + "," + metric + "," + std::to_string(row.best_tp) + "," + fmt6(row.best.mean) +
           "," + fmt6(row.best.std) + ",";
    out += row.tp5.n > 0 ? fmt6(row.tp5.mean) + "," + fmt6(row.tp5.std) : std::string("nan,nan");
    out += std::string(",") + (row.significant ? "*" : "") + "\n";
  }
  return out;
}

inline std::string suitability_csv(const std::vector<TrialRow>& rows, const std::string& metric, double alpha) {
  const auto m = stats::suitability_matrix(results_table(rows, metric), higher_is_better(metric), alpha);
  std::string out = "tp";
  for (std::size_t s = 0; s < kNumScenarios; ++s) out += "," + to_string(scenario_at(s));
  out += "\n";
  for (std::size_t tp = 0; tp < m.size(); ++tp) {
    out += std::to_string(tp + 1);
    for (bool ok : m[tp]) out += ok ? ",1" : ",0";
    out += "\n";
  }
  return out;
}

inline void write_sweep(const ExperimentPlan& plan, const SweepResult& r) {
  const std::filesystem::path dir(plan.output_dir);
  write_atomic(dir / "metrics.csv", metrics_csv(r.rows));
  write_atomic(dir / "summary.csv", summary_csv(r.rows));
  if (plan.agent_mode != PlanMode::ContextAware) {
    write_atomic(dir / "best_tp.csv", best_tp_csv(r.rows, plan.metric, plan.alpha));
    write_atomic(dir / "suitability.csv", suitability_csv(r.rows, plan.metric, plan.alpha));
    write_atomic(dir / "behaviour_library.json", library_text(r.library));
  }
}

// ---------------------------------------------------------------------------------------------
// With/without-context comparison
// ---------------------------------------------------------------------------------------------

struct ComparisonColumn {
  std::string name;
  std::function<std::optional<double>(const MetricsReport&)> value;  // nullopt = not applicable
};

struct ComparisonTable {
  std::string name;
  std::vector<ComparisonColumn> columns;
};

inline std::vector<ComparisonTable> comparison_layout() {
  const auto col = [](std::string metric) {
    return ComparisonColumn{metric, [metric](const MetricsReport& m) -> std::optional<double> {
                              const double v = metric_value(m, metric);
                              if (!std::isfinite(v)) return std::nullopt;
                              return v;
                            }};
  };
  return {
      {"effectiveness",
       {col("ms"), col("mission_length"),
        {"mission_length_success",
         [](const MetricsReport& m) -> std::optional<double> {
           if (!m.ms) return std::nullopt;
           return m.mission_length;
         }},
        col("influenced")}},
      {"stability", {col("mean_separated"), col("mds"), col("dss"), col("mss")}},
      {"efficiency", {col("swarm_dist"), col("shepherd_dist"), col("msp"), col("mcr")}},
  };
}

/// One row per scenario in `scenarios` order plus an aggregate row "ALL" pooling every trial.
/// Cells are mean/std/n per arm, the two-sided Welch p and a '*' when p < alpha.
inline std::string comparison_csv(const ComparisonTable& table, const std::vector<Scenario>& scenarios,
                                  const std::vector<TrialRow>& with, const std::vector<TrialRow>& without,
                                  double alpha) {
  std::string out = "scenario";
  for (const auto& c : table.columns)
    for (const char* f : {"_with_mean", "_with_std", "_with_n", "_without_mean", "_without_std", "_without_n", "_p",
                          "_sig"})
      out += "," + c.name + f;
  out += "\n";
  const auto gather = [](const std::vector<TrialRow>& rows, const ComparisonColumn& c, std::optional<Scenario> s) {
    std::vector<double> xs;
    for (const auto& r : rows)
      if (!s || r.scenario == *s)
        if (const auto v = c.value(r.m)) xs.push_back(*v);
    return xs;
  };
  std::vector<std::optional<Scenario>> keys(scenarios.begin(), scenarios.end());
  keys.push_back(std::nullopt);
  for (const auto& key : keys) {
    out += key ? to_string(*key) : std::string("ALL");
    for (const auto& c : table.columns) {
      const auto a = gather(with, c, key);
      const auto b = gather(without, c, key);
      for (const auto* xs : {&a, &b}) {
        if (xs->empty()) {
          out += ",nan,nan,0";
        } else {
          const auto s = stats::summarise(*xs);
          out += "," + fmt6(s.mean) + "," + fmt6(s.std) + "," + std::to_string(s.n);
        }
      }
      if (a.size() >= 2 && b.size() >= 2) {
        const auto t = stats::welch_t_test(a, b, stats::Sided::Two);
        out += "," + fmt6(t.p) + (t.p < alpha ? ",*" : ",");
      } else {
        out += ",nan,";
      }
    }
    out += "\n";
  }
  return out;
}

struct ComparisonResult {
  std::vector<TrialRow> with_context;
  std::vector<TrialRow> without_context;
  std::map<std::string, std::string> tables;  // table name -> CSV text
};

/// Paired arms: trial k of a scenario uses the same seed (hence the same spawn) in both arms.
/// The baseline keeps plan.baseline_tp at unit cadence; the context-aware agent starts from it.
inline ComparisonResult run_comparison(const ExperimentPlan& plan, int threads) {
  plan.validate();
  const auto ctx = context_for_plan(plan, true);
  std::vector<TrialTask> tasks;
  for (auto mode : {AgentMode::ContextAware, AgentMode::Reactive})
    for (auto s : plan.scenarios)
      for (int k = 0; k < plan.trials_per_cell; ++k)
        tasks.push_back({s, plan.baseline_tp, k, mode,
                         trial_seed(plan.base_seed, scenario_number(s), 0, static_cast<std::uint64_t>(k))});
  std::optional<std::filesystem::path> traces;
  if (plan.write_traces) traces = std::filesystem::path(plan.output_dir) / "traces";
  auto rows = run_tasks(tasks, plan, &*ctx, threads, traces);
  ComparisonResult r;
  const auto half = rows.size() / 2;
  r.with_context.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(half));
  r.without_context.assign(rows.begin() + static_cast<std::ptrdiff_t>(half), rows.end());
  for (const auto& table : comparison_layout())
    r.tables[table.name] = comparison_csv(table, plan.scenarios, r.with_context, r.without_context, plan.alpha);
  return r;
}

inline void write_comparison(const ExperimentPlan& plan, const ComparisonResult& r) {
  const std::filesystem::path dir(plan.output_dir);
  std::vector<TrialRow> all = r.with_context;
  all.insert(all.end(), r.without_context.begin(), r.without_context.end());
  write_atomic(dir / "metrics.csv", metrics_csv(all));
  for (const auto& [name, text] : r.tables) write_atomic(dir / (name + ".csv"), text);
}

}  // namespace shepherd
