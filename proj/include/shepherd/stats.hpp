#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shepherd/agent_types.hpp"

namespace shepherd::stats {

struct SampleSummary {
  int n = 0;
  double mean = 0.0;
  double std = 0.0;  // n-1 denominator; 0 when n == 1
};

inline SampleSummary summarise(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("summarise: empty sample");
  SampleSummary s;
  s.n = static_cast<int>(xs.size());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / (s.n - 1));
  }
  return s;
}

/// Regularised incomplete beta I_x(a, b), modified Lentz continued fraction.
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const auto cf = [](double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
      const double m2 = 2.0 * m;
      double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
      d = 1.0 + num * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + num / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      h *= d * c;
      num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
      d = 1.0 + num * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + num / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < eps) break;
    }
    return h;
  };
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * cf(a, b, x) / a;
  return 1.0 - front * cf(b, a, 1.0 - x) / b;
}

/// P(T > t) for Student's t with df degrees of freedom.
inline double student_t_sf(double t, double df) {
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return t >= 0 ? tail : 1.0 - tail;
}

enum class Sided { Two, Greater, Less };  // alternative: mean(a) != / > / < mean(b)

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  bool degenerate = false;  // both samples constant
};

inline double p_from_t(double t, double df, Sided sided) {
  switch (sided) {
    case Sided::Two: return std::min(1.0, 2.0 * student_t_sf(std::abs(t), df));
    case Sided::Greater: return student_t_sf(t, df);
    case Sided::Less: return student_t_sf(-t, df);
  }
  return 1.0;
}

/// Welch's unequal-variance t-test from summary statistics.
inline TTestResult welch_t_test(const SampleSummary& a, const SampleSummary& b, Sided sided = Sided::Two) {
  if (a.n < 2 || b.n < 2) throw std::invalid_argument("welch_t_test: need at least two samples per arm");
  const double va = a.std * a.std / a.n;
  const double vb = b.std * b.std / b.n;
  TTestResult r;
  if (va + vb == 0.0) {
    r.degenerate = true;
    r.df = a.n + b.n - 2;
    if (a.mean == b.mean) {
      r.t = 0.0;
      r.p = 1.0;
      return r;
    }
    r.t = a.mean > b.mean ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    const bool agrees = sided == Sided::Two || (sided == Sided::Greater) == (a.mean > b.mean);
    r.p = agrees ? 0.0 : 1.0;
    return r;
  }
  r.t = (a.mean - b.mean) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (a.n - 1) + vb * vb / (b.n - 1));
  r.p = p_from_t(r.t, r.df, sided);
  return r;
}

inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b, Sided sided = Sided::Two) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t_test: need at least two samples per arm");
  return welch_t_test(summarise(a), summarise(b), sided);
}

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;
  bool undefined = false;  // zero variance in x or y
};

inline PearsonResult pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("pearson_r: need >= 3 paired samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  PearsonResult out;
  if (sxx == 0.0 || syy == 0.0) {
    out.undefined = true;
    out.r = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = n - 2.0;
  if (std::abs(out.r) >= 1.0) {
    out.p = 0.0;
  } else {
    const double t = out.r * std::sqrt(df / (1.0 - out.r * out.r));
    out.p = p_from_t(t, df, Sided::Two);
  }
  return out;
}

// --- tactic-pair comparisons ---------------------------------------------------------------

/// Samples of one metric per (scenario, tactic pair id).
using ResultsTable = std::map<std::pair<Scenario, int>, std::vector<double>>;

struct BestTpRow {
  Scenario scenario = Scenario::S1;
  int best_tp = 0;
  SampleSummary best;
  SampleSummary tp5;
  bool significant = false;  // two-sided Welch, best vs TP5
};

/// Best TP per scenario by mean (lowest id wins ties), with TP5 alongside.
inline std::vector<BestTpRow> best_tp_table(const ResultsTable& results, bool higher_is_better,
                                            double alpha = 0.05) {
  std::map<Scenario, std::vector<int>> by_scenario;
  for (const auto& [key, _] : results) by_scenario[key.first].push_back(key.second);

  std::vector<BestTpRow> rows;
  for (auto& [scenario, tps] : by_scenario) {
    std::sort(tps.begin(), tps.end());
    BestTpRow row;
    row.scenario = scenario;
    std::optional<double> best_mean;
    for (int tp : tps) {
      const auto s = summarise(results.at({scenario, tp}));
      const bool better = !best_mean || (higher_is_better ? s.mean > *best_mean : s.mean < *best_mean);
      if (better) {
        best_mean = s.mean;
        row.best_tp = tp;
        row.best = s;
      }
    }
    const auto it5 = results.find({scenario, 5});
    if (it5 != results.end()) {
      row.tp5 = summarise(it5->second);
      if (row.best_tp != 5 && row.best.n >= 2 && row.tp5.n >= 2)
        row.significant = welch_t_test(row.best, row.tp5, Sided::Two).p < alpha;
    }
    rows.push_back(row);
  }
  return rows;
}

/// suitable[tp-1][scenario] is false iff that TP is significantly worse than the scenario's best.
inline std::vector<std::array<bool, kNumScenarios>> suitability_matrix(const ResultsTable& results,
                                                                       bool higher_is_better,
                                                                       double alpha = 0.05) {
  std::vector<std::array<bool, kNumScenarios>> m(25);
  for (auto& row : m) row.fill(true);
  for (const auto& best : best_tp_table(results, higher_is_better, alpha)) {
    for (const auto& [key, samples] : results) {
      if (key.first != best.scenario || key.second == best.best_tp) continue;
      if (key.second < 1 || key.second > 25) continue;
      const auto s = summarise(samples);
      if (s.n < 2 || best.best.n < 2) continue;
      const bool worse = higher_is_better ? s.mean < best.best.mean : s.mean > best.best.mean;
      if (worse && welch_t_test(s, best.best, Sided::Two).p < alpha)
        m[static_cast<std::size_t>(key.second - 1)][index_of(key.first)] = false;
    }
  }
  return m;
}

}  // namespace shepherd::stats
