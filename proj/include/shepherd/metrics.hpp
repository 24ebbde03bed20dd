#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shepherd/behaviour.hpp"
#include "shepherd/random.hpp"
#include "shepherd/world.hpp"

namespace shepherd {

enum class AgentMode : std::uint8_t { Reactive = 0, ContextAware = 1 };

inline std::string to_string(AgentMode m) { return m == AgentMode::Reactive ? "reactive" : "context_aware"; }

struct TrialStep {
  int t = 0;
  std::vector<Vec2> sheep;
  Vec2 shepherd;
  BehaviourKind kind = BehaviourKind::Drive;  // behaviour active from t to t+1
  int tp_id = 5;                              // tactic pair in force at t
};

/// Everything the metrics need: the config echo and one entry per step from t = 0.
struct TrialRecord {
  SimConfig config;
  AgentMode mode = AgentMode::Reactive;
  int tp_id = 5;  // fixed tactic pair (reactive) or initial one (context-aware)
  std::vector<TrialStep> steps;

  int final_t() const { return steps.empty() ? 0 : steps.back().t; }
};

struct MetricsReport {
  int ms = 0;
  double mcr = 0.0;
  double msp = 0.0;
  double mds = 0.0;
  double dss = 0.0;
  double mss = 0.0;
  int mission_length = 0;
  int switches = 0;
  double separated_sum_per_capita = 0.0;
  double mean_separated = 0.0;  // separated sheep per step
  double influenced_count = 0.0;
  double swarm_total_dist = 0.0;
  double shepherd_total_dist = 0.0;
  bool mcr_degenerate = false;  // centre of mass never moved; mcr is +inf
};

inline int chi1(BehaviourKind a, BehaviourKind b) { return a != b ? 1 : 0; }

inline int chi2(std::size_t agent, std::span<const std::size_t> cluster) {
  return std::find(cluster.begin(), cluster.end(), agent) == cluster.end() ? 1 : 0;
}

struct KMeansOptions {
  int max_iter = 100;
  double tol = 1e-6;
  int restarts = 20;
};

namespace detail {

inline double sq(double v) { return v * v; }
inline double sqdist(Vec2 a, Vec2 b) { return sq(a.x - b.x) + sq(a.y - b.y); }

inline std::vector<Vec2> kmeanspp_init(std::span<const Vec2> pts, int k, Rng& rng) {
  std::vector<Vec2> centres;
  centres.reserve(static_cast<std::size_t>(k));
  const auto n = pts.size();
  centres.push_back(pts[std::min<std::size_t>(n - 1, static_cast<std::size_t>(uniform01(rng) * n))]);
  std::vector<double> d2(n);
  while (static_cast<int>(centres.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Vec2 c : centres) best = std::min(best, sqdist(pts[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centres.push_back(centres.front());
      continue;
    }
    double u = uniform01(rng) * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (u < d2[i]) {
        pick = i;
        break;
      }
      u -= d2[i];
    }
    centres.push_back(pts[pick]);
  }
  return centres;
}

inline std::size_t nearest_centre(Vec2 p, const std::vector<Vec2>& centres) {
  std::size_t best = 0;
  double best_d = sqdist(p, centres[0]);
  for (std::size_t c = 1; c < centres.size(); ++c) {
    const double d = sqdist(p, centres[c]);
    if (d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

inline double wcss(std::span<const Vec2> pts, const std::vector<std::size_t>& label, int k) {
  std::vector<Vec2> sum(static_cast<std::size_t>(k));
  std::vector<int> cnt(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    sum[label[i]] += pts[i];
    ++cnt[label[i]];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto c = label[i];
    total += sqdist(pts[i], sum[c] / cnt[c]);
  }
  return total;
}

// Lloyd iterations followed by single-point Hartigan moves until neither improves.
inline std::vector<std::size_t> lloyd(std::span<const Vec2> pts, std::vector<Vec2> centres,
                                      const KMeansOptions& opt) {
  const auto n = pts.size();
  const auto k = centres.size();
  std::vector<std::size_t> label(n, 0);
  for (int it = 0; it < opt.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) label[i] = nearest_centre(pts[i], centres);
    std::vector<Vec2> sum(k);
    std::vector<int> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[label[i]] += pts[i];
      ++cnt[label[i]];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (cnt[c] == 0) continue;
      const Vec2 nc = sum[c] / cnt[c];
      shift = std::max(shift, distance(nc, centres[c]));
      centres[c] = nc;
    }
    if (shift < opt.tol) break;
  }
  for (std::size_t i = 0; i < n; ++i) label[i] = nearest_centre(pts[i], centres);

  std::vector<Vec2> sum(k);
  std::vector<int> cnt(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sum[label[i]] += pts[i];
    ++cnt[label[i]];
  }
  bool moved = true;
  for (int pass = 0; moved && pass < opt.max_iter; ++pass) {
    moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto from = label[i];
      if (cnt[from] <= 1) continue;
      const Vec2 mf = sum[from] / cnt[from];
      const double loss = cnt[from] * sqdist(pts[i], mf) / (cnt[from] - 1);
      std::size_t best = from;
      double best_gain = 1e-12;
      for (std::size_t to = 0; to < k; ++to) {
        if (to == from) continue;
        const double add = cnt[to] == 0 ? 0.0 : cnt[to] * sqdist(pts[i], sum[to] / cnt[to]) / (cnt[to] + 1);
        if (loss - add > best_gain) {
          best_gain = loss - add;
          best = to;
        }
      }
      if (best != from) {
        sum[from] -= pts[i];
        --cnt[from];
        sum[best] += pts[i];
        ++cnt[best];
        label[i] = best;
        moved = true;
      }
    }
  }
  return label;
}

}  // namespace detail

/// Seeded k-means (k-means++ seeding, Lloyd then Hartigan refinement, best of several restarts
/// by within-cluster sum of squares). Returns the labels, one per point.
inline std::vector<std::size_t> kmeans_labels(std::span<const Vec2> pts, int k, std::uint64_t seed,
                                              const KMeansOptions& opt = {}) {
  if (k < 1 || pts.size() < static_cast<std::size_t>(k))
    throw std::invalid_argument("kmeans: need at least k points");
  Rng rng(seed);
  std::vector<std::size_t> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    auto label = detail::lloyd(pts, detail::kmeanspp_init(pts, k, rng), opt);
    const double cost = detail::wcss(pts, label, k);
    if (cost < best_cost - 1e-12) {
      best_cost = cost;
      best = std::move(label);
    }
  }
  return best;
}

/// Members of the most populous k-means cluster; equal sizes go to the cluster holding the
/// lowest point index.
inline std::vector<std::size_t> largest_cluster(std::span<const Vec2> pts, int k, std::uint64_t seed,
                                                const KMeansOptions& opt = {}) {
  const auto label = kmeans_labels(pts, k, seed, opt);
  std::vector<int> cnt(static_cast<std::size_t>(k), 0);
  std::vector<std::size_t> first(static_cast<std::size_t>(k), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ++cnt[label[i]];
    first[label[i]] = std::min(first[label[i]], i);
  }
  std::size_t pick = 0;
  for (std::size_t c = 1; c < cnt.size(); ++c)
    if (cnt[c] > cnt[pick] || (cnt[c] == cnt[pick] && first[c] < first[pick])) pick = c;
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (label[i] == pick) members.push_back(i);
  return members;
}

inline int count_switches(std::span<const TrialStep> steps) {
  int s = 0;
  for (std::size_t t = 1; t < steps.size(); ++t) s += chi1(steps[t - 1].kind, steps[t].kind);
  return s;
}

/// Mean over recorded steps of the sheep within `radius` of the shepherd.
inline double influenced_count(const TrialRecord& trial, double radius) {
  if (trial.steps.empty()) return 0.0;
  double total = 0.0;
  for (const auto& st : trial.steps)
    for (Vec2 p : st.sheep) total += distance(p, st.shepherd) <= radius ? 1.0 : 0.0;
  return total / static_cast<double>(trial.steps.size());
}

/// Separated sheep (outside the largest cluster) at one step; the k-means seed derives from
/// the trial seed and the step index.
inline int separated_at(const TrialStep& st, int k, std::uint64_t trial_seed) {
  if (st.sheep.size() < static_cast<std::size_t>(k) || k < 2) return 0;
  const auto cluster = largest_cluster(st.sheep, k, splitmix64(trial_seed ^ static_cast<std::uint64_t>(st.t)));
  return static_cast<int>(st.sheep.size() - cluster.size());
}

inline MetricsReport compute_metrics(const TrialRecord& trial, int k = 2) {
  if (trial.steps.empty()) throw std::invalid_argument("compute_metrics: empty trial");
  const auto& steps = trial.steps;
  const auto n = steps.front().sheep.size();
  MetricsReport r;

  const Vec2 com0 = centre_of_mass(steps.front().sheep);
  const Vec2 comT = centre_of_mass(steps.back().sheep);
  const double to_goal = distance(comT, trial.config.goal);
  const double moved = distance(comT, com0);

  r.ms = to_goal <= trial.config.goal_radius ? 1 : 0;
  r.mission_length = r.ms ? trial.final_t() : trial.config.t_max;
  if (moved > 0.0) {
    r.mcr = to_goal / moved;
  } else {
    r.mcr = std::numeric_limits<double>::infinity();
    r.mcr_degenerate = true;
  }
  r.msp = r.mission_length > 0 ? moved / r.mission_length : 0.0;
  r.switches = count_switches(steps);

  long separated = 0;
  for (std::size_t t = 1; t < steps.size(); ++t) separated += separated_at(steps[t], k, trial.config.seed);
  r.separated_sum_per_capita = static_cast<double>(separated) / static_cast<double>(n);
  r.mean_separated =
      steps.size() > 1 ? static_cast<double>(separated) / static_cast<double>(steps.size() - 1) : 0.0;

  r.mds = r.ms / (1.0 + r.switches);
  r.dss = r.separated_sum_per_capita / (1.0 + r.switches);
  r.mss = r.ms / (1.0 + r.separated_sum_per_capita);

  r.influenced_count = influenced_count(trial, trial.config.constants.r_shep_detect);
  Vec2 prev = com0;
  for (std::size_t t = 1; t < steps.size(); ++t) {
    const Vec2 c = centre_of_mass(steps[t].sheep);
    r.swarm_total_dist += distance(c, prev);
    r.shepherd_total_dist += distance(steps[t].shepherd, steps[t - 1].shepherd);
    prev = c;
  }
  return r;
}

}  // namespace shepherd
