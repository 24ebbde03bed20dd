#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "shepherd/agent_types.hpp"
#include "shepherd/behaviour.hpp"
#include "shepherd/reactive.hpp"
#include "shepherd/stats.hpp"
#include "shepherd/world.hpp"

namespace shepherd {

// ---------------------------------------------------------------------------------------------
// Observation windows and markers
// ---------------------------------------------------------------------------------------------

struct WindowConfig {
  int omega = 60;     // window length in steps
  double tau = 0.75;  // overlap fraction between consecutive windows

  int stride() const { return static_cast<int>(std::lround(omega * (1.0 - tau))); }
  void validate() const {
    if (omega < 2) throw std::invalid_argument("window length must be >= 2");
    if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("window overlap must lie in [0,1)");
    if (stride() < 1) throw std::invalid_argument("window stride must be >= 1");
  }
};

/// One observed instant: sheep positions and shepherd position.
struct Frame {
  std::vector<Vec2> sheep;
  Vec2 shepherd;
};

inline Frame frame_of(const WorldState& w) {
  Frame f;
  f.sheep.reserve(w.sheep.size());
  for (const auto& s : w.sheep) f.sheep.push_back(s.position);
  f.shepherd = w.shepherd_pos;
  return f;
}

inline constexpr std::size_t kAgentFeatures = 5;
inline constexpr std::size_t kSwarmFeatures = 2 * kAgentFeatures + 2;

/// Trajectory summary of one sheep over a window.
struct MarkerVector {
  double mean_speed = 0.0;
  double mean_dist_lcm = 0.0;
  double mean_nn_dist = 0.0;
  double shepherd_response = 0.0;  // mean cosine of motion vs away-from-shepherd, in range only
  double net_displacement = 0.0;

  std::array<double, kAgentFeatures> as_array() const {
    return {mean_speed, mean_dist_lcm, mean_nn_dist, shepherd_response, net_displacement};
  }
  static MarkerVector from_array(const std::array<double, kAgentFeatures>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
};

inline MarkerVector compute_agent_markers(std::span<const Frame> window, std::size_t agent,
                                          const ModelConstants& c, int omega) {
  if (static_cast<int>(window.size()) != omega || omega < 2)
    throw std::invalid_argument("compute_agent_markers: window must span exactly omega steps");
  MarkerVector m;
  int responding = 0;
  for (std::size_t k = 0; k < window.size(); ++k) {
    const Frame& f = window[k];
    const Vec2 p = f.sheep.at(agent);
    m.mean_dist_lcm += distance(p, centre_of_mass(std::span<const Vec2>(f.sheep)));
    double nn = 0.0;
    bool any = false;
    for (std::size_t j = 0; j < f.sheep.size(); ++j) {
      if (j == agent) continue;
      const double d = distance(p, f.sheep[j]);
      if (!any || d < nn) nn = d;
      any = true;
    }
    m.mean_nn_dist += nn;
    if (k + 1 < window.size()) {
      const Vec2 move = window[k + 1].sheep.at(agent) - p;
      const double len = norm(move);
      m.mean_speed += len;
      const Vec2 away = p - f.shepherd;
      if (len > 0.0 && norm(away) > 0.0 && norm(away) <= c.r_shep_detect) {
        m.shepherd_response += dot(move, away) / (len * norm(away));
        ++responding;
      }
    }
  }
  const double frames = static_cast<double>(window.size());
  m.mean_speed /= frames - 1.0;
  m.mean_dist_lcm /= frames;
  m.mean_nn_dist /= frames;
  m.shepherd_response = responding > 0 ? std::clamp(m.shepherd_response / responding, -1.0, 1.0) : 0.0;
  m.net_displacement = distance(window.back().sheep.at(agent), window.front().sheep.at(agent));
  return m;
}

/// Swarm-level marker: per-feature mean and spread of the agent markers, then the mean flock
/// radius and mean centre-of-mass speed over the window.
inline std::array<double, kSwarmFeatures> swarm_markers(std::span<const MarkerVector> agents,
                                                        std::span<const Frame> window) {
  if (agents.empty() || window.size() < 2) throw std::invalid_argument("swarm_markers: empty input");
  std::array<double, kSwarmFeatures> out{};
  const double n = static_cast<double>(agents.size());
  for (const auto& a : agents) {
    const auto v = a.as_array();
    for (std::size_t f = 0; f < kAgentFeatures; ++f) out[f] += v[f] / n;
  }
  for (const auto& a : agents) {
    const auto v = a.as_array();
    for (std::size_t f = 0; f < kAgentFeatures; ++f)
      out[kAgentFeatures + f] += (v[f] - out[f]) * (v[f] - out[f]) / n;
  }
  for (std::size_t f = 0; f < kAgentFeatures; ++f) out[kAgentFeatures + f] = std::sqrt(out[kAgentFeatures + f]);

  double radius = 0.0;
  double com_speed = 0.0;
  Vec2 prev;
  for (std::size_t k = 0; k < window.size(); ++k) {
    const Vec2 com = centre_of_mass(std::span<const Vec2>(window[k].sheep));
    double r = 0.0;
    for (Vec2 p : window[k].sheep) r += distance(p, com);
    radius += r / static_cast<double>(window[k].sheep.size());
    if (k > 0) com_speed += distance(com, prev);
    prev = com;
  }
  out[2 * kAgentFeatures] = radius / static_cast<double>(window.size());
  out[2 * kAgentFeatures + 1] = com_speed / static_cast<double>(window.size() - 1);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Inverse-distance inference
// ---------------------------------------------------------------------------------------------

/// Normalised 1/d weights; an exact match (d == 0) takes all the mass, lowest index first.
inline std::vector<double> inverse_distance_weights(std::span<const double> d) {
  std::vector<double> w(d.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == 0.0) {
      w[i] = 1.0;
      return w;
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    w[i] = 1.0 / d[i];
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

template <std::size_t F>
double scaled_distance(const std::array<double, F>& a, const std::array<double, F>& b,
                       const std::array<double, F>& scale) {
  double s = 0.0;
  for (std::size_t f = 0; f < F; ++f) {
    const double z = (a[f] - b[f]) / scale[f];
    s += z * z;
  }
  return std::sqrt(s);
}

/// Nearest-centroid reference set: one centroid per class and a per-feature scale.
template <std::size_t F>
struct CentroidSet {
  std::vector<std::array<double, F>> centroids;
  std::array<double, F> scale{};

  std::vector<double> classify(const std::array<double, F>& x) const {
    std::vector<double> d;
    d.reserve(centroids.size());
    for (const auto& c : centroids) d.push_back(scaled_distance(x, c, scale));
    return inverse_distance_weights(d);
  }
};

using AgentCentroids = CentroidSet<kAgentFeatures>;
using SwarmReferences = CentroidSet<kSwarmFeatures>;

using AgentBelief = std::vector<double>;  // one probability per agent type

inline AgentBelief classify_agent(const MarkerVector& m, const AgentCentroids& centroids) {
  return centroids.classify(m.as_array());
}

/// Componentwise mean of agent beliefs (the empirical type distribution A*).
inline std::vector<double> empirical_distribution(std::span<const AgentBelief> beliefs) {
  if (beliefs.empty()) throw std::invalid_argument("empirical_distribution: no beliefs");
  std::vector<double> out(beliefs.front().size(), 0.0);
  for (const auto& b : beliefs) {
    if (b.size() != out.size()) throw std::invalid_argument("empirical_distribution: ragged beliefs");
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  }
  for (double& x : out) x /= static_cast<double>(beliefs.size());
  return out;
}

/// Likelihood of each scenario row given A*, by inverse Euclidean distance.
inline std::vector<double> scenario_likelihood(std::span<const double> a_star,
                                               std::span<const std::vector<double>> rows) {
  std::vector<double> d;
  d.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != a_star.size()) throw std::invalid_argument("scenario_likelihood: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) s += (row[i] - a_star[i]) * (row[i] - a_star[i]);
    d.push_back(std::sqrt(s));
  }
  return inverse_distance_weights(d);
}

inline const std::vector<std::vector<double>>& scenario_rows() {
  static const std::vector<std::vector<double>> rows = [] {
    std::vector<std::vector<double>> r;
    for (const auto& mix : kScenarioMix) r.emplace_back(mix.begin(), mix.end());
    return r;
  }();
  return rows;
}

inline std::vector<double> swarm_level_classification(std::span<const Frame> window, const ModelConstants& c,
                                                      int omega, const SwarmReferences& refs) {
  std::vector<MarkerVector> agents;
  for (std::size_t i = 0; i < window.front().sheep.size(); ++i)
    agents.push_back(compute_agent_markers(window, i, c, omega));
  return refs.classify(swarm_markers(agents, window));
}

/// Mean of the two likelihood vectors, renormalised.
inline std::vector<double> ensemble(std::span<const double> agent_path, std::span<const double> swarm_path) {
  if (agent_path.size() != swarm_path.size()) throw std::invalid_argument("ensemble: dimension mismatch");
  std::vector<double> out(agent_path.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.5 * (agent_path[i] + swarm_path[i]);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

struct EnsembleChoice {
  std::size_t best = 0;
  std::vector<double> scores;  // mean - variance per scenario over the history
};

/// argmax over scenarios of (mean - population variance) across windows; ties go low.
inline EnsembleChoice ensemble_select(std::span<const std::vector<double>> history) {
  if (history.empty()) throw std::invalid_argument("ensemble_select: empty history");
  const auto k = history.front().size();
  const double n = static_cast<double>(history.size());
  EnsembleChoice out;
  out.scores.assign(k, 0.0);
  for (std::size_t s = 0; s < k; ++s) {
    double mean = 0.0;
    for (const auto& h : history) mean += h.at(s);
    mean /= n;
    double var = 0.0;
    for (const auto& h : history) var += (h[s] - mean) * (h[s] - mean);
    var /= n;
    out.scores[s] = mean - var;
    if (out.scores[s] > out.scores[out.best]) out.best = s;
  }
  return out;
}

/// True iff the leading scenario's per-window likelihoods beat every rival under a one-sided
/// Welch test at alpha / (number of rivals).
inline bool significance_gate(std::span<const std::vector<double>> history, std::size_t best, double alpha) {
  if (history.size() < 2) return false;
  const auto k = history.front().size();
  if (k < 2) return false;
  const double level = alpha / static_cast<double>(k - 1);
  std::vector<double> lead;
  for (const auto& h : history) lead.push_back(h.at(best));
  for (std::size_t s = 0; s < k; ++s) {
    if (s == best) continue;
    std::vector<double> rival;
    for (const auto& h : history) rival.push_back(h[s]);
    if (!(stats::welch_t_test(lead, rival, stats::Sided::Greater).p < level)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------------------------
// Behaviour library
// ---------------------------------------------------------------------------------------------

struct LibraryEntry {
  int tp = 0;
  double mean = 0.0;
  double std = 0.0;
  int n_trials = 0;
};

inline const std::string kHeterogeneousKey = "HET";
inline const std::string kHomogeneousKey = "HOM";

enum class ClassScoreRule : std::uint8_t { Mean, Sum };

/// Per-scenario (and per scenario class) tactic-pair statistics from an offline sweep.
/// Keys are "S1".."S11", "HET" and "HOM"; metrics are named as in the metrics CSV.
class BehaviourLibrary {
 public:
  std::string primary_metric = "ms";
  std::string tiebreak_metric = "mission_length";  // lower is better
  std::map<std::string, std::map<std::string, std::vector<LibraryEntry>>> records;
  std::map<std::string, std::pair<int, int>> cadence;

  void add(const std::string& key, const std::string& metric, LibraryEntry e) {
    records[key][metric].push_back(e);
  }

  bool has(const std::string& key) const {
    const auto it = records.find(key);
    return it != records.end() && it->second.count(primary_metric) && !it->second.at(primary_metric).empty();
  }

  const std::vector<LibraryEntry>& entries(const std::string& key, const std::string& metric) const {
    const auto it = records.find(key);
    if (it == records.end()) throw std::out_of_range("behaviour library has no entry for " + key);
    const auto jt = it->second.find(metric);
    if (jt == it->second.end() || jt->second.empty())
      throw std::out_of_range("behaviour library has no " + metric + " records for " + key);
    return jt->second;
  }

  /// Tactic pairs ordered best first: primary metric descending, then tie-break metric
  /// ascending, then id.
  std::vector<LibraryEntry> ranked(const std::string& key) const {
    auto list = entries(key, primary_metric);
    std::map<int, double> tiebreak;
    const auto it = records.at(key).find(tiebreak_metric);
    if (it != records.at(key).end())
      for (const auto& e : it->second) tiebreak[e.tp] = e.mean;
    std::stable_sort(list.begin(), list.end(), [&](const LibraryEntry& a, const LibraryEntry& b) {
      if (a.mean != b.mean) return a.mean > b.mean;
      const double ta = tiebreak.count(a.tp) ? tiebreak[a.tp] : 0.0;
      const double tb = tiebreak.count(b.tp) ? tiebreak[b.tp] : 0.0;
      if (ta != tb) return ta < tb;
      return a.tp < b.tp;
    });
    return list;
  }

  int top(const std::string& key) const { return ranked(key).front().tp; }

  /// TPs whose primary-metric mean is not significantly below the top TP's.
  std::vector<int> best_set(const std::string& key, double alpha) const {
    const auto list = ranked(key);
    const auto& lead = list.front();
    std::vector<int> out{lead.tp};
    for (std::size_t i = 1; i < list.size(); ++i) {
      const auto& e = list[i];
      bool worse = e.mean < lead.mean;
      if (worse && e.n_trials >= 2 && lead.n_trials >= 2) {
        const stats::SampleSummary a{lead.n_trials, lead.mean, lead.std};
        const stats::SampleSummary b{e.n_trials, e.mean, e.std};
        worse = stats::welch_t_test(a, b, stats::Sided::Greater).p < alpha;
      }
      if (!worse) out.push_back(e.tp);
    }
    return out;
  }

  void validate() const {
    for (std::size_t s = 0; s < kNumScenarios; ++s)
      if (!has(to_string(scenario_at(s))))
        throw std::invalid_argument("behaviour library is missing scenario " + to_string(scenario_at(s)));
    if (!has(kHeterogeneousKey) || !has(kHomogeneousKey))
      throw std::invalid_argument("behaviour library is missing a scenario-class entry");
  }
};

inline bool is_tp_significant(const BehaviourLibrary& lib, const std::string& key, int tp, double alpha) {
  const auto set = lib.best_set(key, alpha);
  return std::find(set.begin(), set.end(), tp) != set.end();
}

/// Class scores over heterogeneous (S1-S4) and homogeneous (S5-S11) scenarios.
inline std::pair<double, double> class_scores(std::span<const double> scores, ClassScoreRule rule) {
  double he = 0.0, ho = 0.0;
  for (std::size_t s = 0; s < scores.size(); ++s) (s < 4 ? he : ho) += scores[s];
  if (rule == ClassScoreRule::Mean) {
    he /= 4.0;
    ho /= static_cast<double>(std::max<std::size_t>(1, scores.size() - 4));
  }
  return {he, ho};
}

inline TacticPair select_tactic_pair(Scenario best, bool significant, bool tp_significant,
                                     const TacticPair& current, const BehaviourLibrary& library,
                                     std::span<const double> scores,
                                     ClassScoreRule rule = ClassScoreRule::Mean) {
  if (significant) {
    if (tp_significant) return current;
    return tactic_pair(library.top(to_string(best)));
  }
  const auto [he, ho] = class_scores(scores, rule);
  return tactic_pair(library.top(he >= ho ? kHeterogeneousKey : kHomogeneousKey));
}

inline constexpr std::pair<int, int> kDefaultCadence{8, 4};

inline std::pair<int, int> behavior_cadence(std::optional<Scenario> best, const TacticPair& /*tp*/,
                                            const BehaviourLibrary& library) {
  if (!best) return {1, 1};  // baseline reactive agent
  const auto it = library.cadence.find(to_string(*best));
  return it != library.cadence.end() ? it->second : kDefaultCadence;
}

// ---------------------------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------------------------

struct ContextModel {
  AgentCentroids agents;
  SwarmReferences swarm;
};

struct CalibrationConfig {
  SimConfig sim{};  // scenario and seed are overwritten per run
  WindowConfig window{};
  std::vector<std::uint64_t> seeds{11, 12, 13, 14, 15, 16};
  int steps = 600;  // observation length of each calibration run
};

/// Homogeneous scenario for each agent type (A1 -> S6 ... A6 -> S11, A7 -> S5).
constexpr Scenario homogeneous_scenario(AgentType a) {
  return a == AgentType::A7 ? Scenario::S5 : scenario_at(index_of(a) + 5);
}

/// Runs one scripted observation run (baseline reactive shepherd, TP5 at unit cadence) and
/// calls visit(window) for every complete window.
template <typename Visit>
void scripted_windows(SimConfig sim, const WindowConfig& wc, int steps, Visit&& visit) {
  WorldState w = spawn_scenario(sim);
  ControllerState ctrl;
  std::deque<Frame> buf;
  const int stride = wc.stride();
  for (int t = 0; t <= steps && t < sim.t_max; ++t) {
    buf.push_back(frame_of(w));
    if (static_cast<int>(buf.size()) > wc.omega) buf.pop_front();
    if (static_cast<int>(buf.size()) == wc.omega && (t - (wc.omega - 1)) % stride == 0) {
      const std::vector<Frame> window(buf.begin(), buf.end());
      visit(std::span<const Frame>(window));
    }
    if (is_mission_complete(w)) break;
    auto [decision, next] = reactive_policy(w, std::move(ctrl), sim.constants);
    ctrl = std::move(next);
    w = step(w, decision.steering_point, sim.constants);
  }
}

template <std::size_t F>
std::array<double, F> safe_scale(const std::array<double, F>& var_sum, double count) {
  std::array<double, F> s{};
  for (std::size_t f = 0; f < F; ++f) {
    const double v = count > 1 ? var_sum[f] / (count - 1) : 0.0;
    s[f] = v > 1e-12 ? std::sqrt(v) : 1.0;
  }
  return s;
}

/// Per-type agent-marker centroids (from homogeneous runs) and per-scenario swarm-marker
/// references, with pooled within-class standard deviations as feature scales.
inline ContextModel calibrate_centroids(const CalibrationConfig& cfg) {
  cfg.window.validate();
  ContextModel model;
  const int omega = cfg.window.omega;

  std::array<std::vector<std::array<double, kAgentFeatures>>, kNumAgentTypes> agent_samples;
  std::array<std::vector<std::array<double, kSwarmFeatures>>, kNumScenarios> swarm_samples;

  for (std::size_t s = 0; s < kNumScenarios; ++s) {
    const Scenario scenario = scenario_at(s);
    for (std::uint64_t seed : cfg.seeds) {
      SimConfig sim = cfg.sim;
      sim.scenario = scenario;
      sim.seed = seed;
      scripted_windows(sim, cfg.window, cfg.steps, [&](std::span<const Frame> window) {
        std::vector<MarkerVector> markers;
        for (std::size_t i = 0; i < window.front().sheep.size(); ++i)
          markers.push_back(compute_agent_markers(window, i, sim.constants, omega));
        swarm_samples[s].push_back(swarm_markers(markers, window));
        if (!is_heterogeneous(scenario)) {
          std::size_t type = 0;
          for (std::size_t a = 0; a < kNumAgentTypes; ++a)
            if (mix_of(scenario)[a] == 1.0) type = a;
          for (const auto& m : markers) agent_samples[type].push_back(m.as_array());
        }
      });
    }
  }

  const auto fit = [](auto& samples, auto& set) {
    using Arr = typename std::decay_t<decltype(samples[0])>::value_type;
    constexpr std::size_t F = std::tuple_size_v<Arr>;
    Arr var_sum{};
    double count = 0.0;
    double groups = 0.0;
    set.centroids.clear();
    for (const auto& group : samples) {
      Arr mean{};
      for (const auto& x : group)
        for (std::size_t f = 0; f < F; ++f) mean[f] += x[f] / static_cast<double>(group.size());
      for (const auto& x : group)
        for (std::size_t f = 0; f < F; ++f) var_sum[f] += (x[f] - mean[f]) * (x[f] - mean[f]);
      count += static_cast<double>(group.size());
      groups += 1.0;
      set.centroids.push_back(mean);
    }
    set.scale = safe_scale(var_sum, count - groups + 1.0);
  };
  for (const auto& g : agent_samples)
    if (g.empty()) throw std::runtime_error("calibration produced no windows for an agent type");
  fit(agent_samples, model.agents);
  fit(swarm_samples, model.swarm);
  return model;
}

// ---------------------------------------------------------------------------------------------
// The context-aware agent
// ---------------------------------------------------------------------------------------------

struct ContextOptions {
  WindowConfig window{};
  double alpha = 0.05;
  ClassScoreRule class_rule = ClassScoreRule::Mean;
};

struct ContextUpdate {
  TacticPair tp;
  int sigma_c2 = 1;
  int sigma_c3 = 1;
  std::size_t scenario = 0;  // recognised scenario index
  bool significant = false;
};

/// Windowed scenario recognition and tactic-pair selection. Feed one world per step through
/// observe(); a ContextUpdate is returned whenever a window completes. Until then the caller
/// runs the baseline TP5 shepherd at unit cadence.
class ContextAgent {
 public:
  ContextAgent(const ContextModel& model, const BehaviourLibrary& library, ModelConstants constants,
               ContextOptions options = {})
      : model_(&model), library_(&library), constants_(constants), options_(options) {
    options_.window.validate();
  }

  std::optional<ContextUpdate> observe(const WorldState& world, const TacticPair& current) {
    buffer_.push_back(frame_of(world));
    const int omega = options_.window.omega;
    if (static_cast<int>(buffer_.size()) > omega) buffer_.pop_front();
    if (static_cast<int>(buffer_.size()) < omega) return std::nullopt;
    if ((world.t - (omega - 1)) % options_.window.stride() != 0) return std::nullopt;

    const std::vector<Frame> window(buffer_.begin(), buffer_.end());
    const std::span<const Frame> view(window);

    std::vector<MarkerVector> markers;
    std::vector<AgentBelief> beliefs;
    for (std::size_t i = 0; i < world.sheep.size(); ++i) {
      markers.push_back(compute_agent_markers(view, i, constants_, omega));
      beliefs.push_back(classify_agent(markers.back(), model_->agents));
    }
    const auto a_star = empirical_distribution(beliefs);
    const auto agent_path = scenario_likelihood(a_star, scenario_rows());
    const auto swarm_path = model_->swarm.classify(swarm_markers(markers, view));
    history_.push_back(ensemble(agent_path, swarm_path));

    const auto choice = ensemble_select(history_);
    const Scenario best = scenario_at(choice.best);
    const bool significant = significance_gate(history_, choice.best, options_.alpha);
    const bool tp_ok = significant && is_tp_significant(*library_, to_string(best), current.id, options_.alpha);

    ContextUpdate u;
    u.tp = select_tactic_pair(best, significant, tp_ok, current, *library_, choice.scores, options_.class_rule);
    std::tie(u.sigma_c2, u.sigma_c3) = behavior_cadence(best, u.tp, *library_);
    u.scenario = choice.best;
    u.significant = significant;
    return u;
  }

  const std::vector<std::vector<double>>& history() const { return history_; }

 private:
  const ContextModel* model_;
  const BehaviourLibrary* library_;
  ModelConstants constants_;
  ContextOptions options_;
  std::deque<Frame> buffer_;
  std::vector<std::vector<double>> history_;
};

}  // namespace shepherd
