#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shepherd/vec2.hpp"
#include "shepherd/world.hpp"

namespace shepherd {

enum class DriveLabel : std::uint8_t { D1N, D25, D50, D75, D100 };
enum class CollectVariant : std::uint8_t { C2D, C2H, F2D, F2G, F2H };

struct DriveVariant {
  DriveLabel label = DriveLabel::D100;

  /// The fraction L in f(L*N). D1N depends on the flock size.
  double l_frac(int n) const {
    switch (label) {
      case DriveLabel::D1N: return 1.0 / n;
      case DriveLabel::D25: return 0.25;
      case DriveLabel::D50: return 0.50;
      case DriveLabel::D75: return 0.75;
      case DriveLabel::D100: return 1.00;
    }
    return 1.0;
  }
  friend bool operator==(DriveVariant, DriveVariant) = default;
};

struct TacticPair {
  int id = 5;
  DriveVariant drive;
  CollectVariant collect = CollectVariant::F2H;
  friend bool operator==(const TacticPair&, const TacticPair&) = default;
};

inline std::string to_string(DriveLabel d) {
  static constexpr std::array<const char*, 5> names{"D1N", "D25", "D50", "D75", "D100"};
  return names[static_cast<std::size_t>(d)];
}
inline std::string to_string(CollectVariant c) {
  static constexpr std::array<const char*, 5> names{"C2D", "C2H", "F2D", "F2G", "F2H"};
  return names[static_cast<std::size_t>(c)];
}

/// TP1..TP25 in table order: drive blocks D100, D50, D1N, D25, D75; collect cycles
/// C2D, C2H, F2D, F2G, F2H within each block. TP5 = {D100, F2H} is the reference shepherd.
inline const std::array<TacticPair, 25>& tactic_pair_catalog() {
  static const std::array<TacticPair, 25> catalog = [] {
    constexpr std::array<DriveLabel, 5> drives{DriveLabel::D100, DriveLabel::D50, DriveLabel::D1N,
                                               DriveLabel::D25, DriveLabel::D75};
    constexpr std::array<CollectVariant, 5> collects{CollectVariant::C2D, CollectVariant::C2H,
                                                     CollectVariant::F2D, CollectVariant::F2G,
                                                     CollectVariant::F2H};
    std::array<TacticPair, 25> out{};
    for (std::size_t d = 0; d < 5; ++d)
      for (std::size_t c = 0; c < 5; ++c) {
        const std::size_t k = d * 5 + c;
        out[k] = TacticPair{static_cast<int>(k + 1), DriveVariant{drives[d]}, collects[c]};
      }
    return out;
  }();
  return catalog;
}

inline const TacticPair& tactic_pair(int id) {
  if (id < 1 || id > 25) throw std::invalid_argument("tactic pair id must be in 1..25");
  return tactic_pair_catalog()[static_cast<std::size_t>(id - 1)];
}

enum class BehaviourKind : std::uint8_t { Drive = 1, Collect = 2 };

struct BehaviourDecision {
  BehaviourKind kind = BehaviourKind::Drive;
  Vec2 steering_point;
  std::optional<std::size_t> focal_agent;
  friend bool operator==(const BehaviourDecision&, const BehaviourDecision&) = default;
};

/// Raised when a steering point direction is undefined (zero-length offset).
struct DegenerateGeometry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Cohesion radius r * (l_frac * n)^(2/3).
inline double f_n(double r_pi_pi, int n, double l_frac) {
  if (!(r_pi_pi > 0) || n < 1 || !(l_frac > 0 && l_frac <= 1.0))
    throw std::invalid_argument("f_n: arguments out of range");
  return r_pi_pi * std::pow(l_frac * n, 2.0 / 3.0);
}

/// Point f behind the flock centre, on the far side from the goal.
inline Vec2 drive_point(Vec2 lcm, Vec2 goal, double f) {
  const Vec2 d = lcm - goal;
  const double n = norm(d);
  if (n == 0.0) throw DegenerateGeometry("drive_point: centre of mass coincides with goal");
  return lcm + d * (f / n);
}

/// Point r_pi_pi beyond the focal sheep, opposite the flock centre.
inline Vec2 collect_point(Vec2 target, Vec2 lcm, double r_pi_pi) {
  const Vec2 d = target - lcm;
  const double n = norm(d);
  if (n == 0.0) throw DegenerateGeometry("collect_point: focal sheep at centre of mass");
  return target + d * (r_pi_pi / n);
}

inline std::size_t select_focal(const WorldState& world, CollectVariant variant) {
  if (world.sheep.empty()) throw std::invalid_argument("select_focal: no sheep");
  const Vec2 com = centre_of_mass(std::span<const SheepState>(world.sheep));
  Vec2 ref;
  bool maximise = false;
  switch (variant) {
    case CollectVariant::C2D: ref = world.shepherd_pos; break;
    case CollectVariant::C2H: ref = com; break;
    case CollectVariant::F2D: ref = world.shepherd_pos; maximise = true; break;
    case CollectVariant::F2G: ref = world.goal; maximise = true; break;
    case CollectVariant::F2H: ref = com; maximise = true; break;
  }
  std::size_t best = 0;
  double best_d = distance(world.sheep[0].position, ref);
  for (std::size_t i = 1; i < world.sheep.size(); ++i) {
    const double d = distance(world.sheep[i].position, ref);
    if (maximise ? d > best_d : d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

// How the drive fraction L gates driving.
enum class DriveRule : std::uint8_t {
  Literal,   // every sheep within f(L*N) of the centre of mass
  Quantile,  // the ceil(L*N) sheep nearest the centre lie within f(N)
};

inline bool is_well_grouped(const WorldState& world, const TacticPair& tp, const ModelConstants& c,
                            DriveRule rule = DriveRule::Literal) {
  const int n = static_cast<int>(world.sheep.size());
  const Vec2 com = centre_of_mass(std::span<const SheepState>(world.sheep));
  const double l = tp.drive.l_frac(n);
  if (rule == DriveRule::Literal) {
    const double f = f_n(c.r_pi_pi, n, l);
    return std::all_of(world.sheep.begin(), world.sheep.end(),
                       [&](const SheepState& s) { return distance(s.position, com) <= f; });
  }
  std::vector<double> d;
  d.reserve(world.sheep.size());
  for (const auto& s : world.sheep) d.push_back(distance(s.position, com));
  std::sort(d.begin(), d.end());
  const auto k = static_cast<std::size_t>(std::clamp<double>(std::ceil(l * n - 1e-9), 1.0, n));
  return d[k - 1] <= f_n(c.r_pi_pi, n, 1.0);
}

/// Drive when the flock is well grouped under the tactic pair's drive fraction, else collect
/// the focal sheep. The drive fraction only gates the switch; the driving point always sits
/// f(N) behind the flock. A focal sheep exactly on the centre of mass falls back to driving.
inline BehaviourDecision select_behavior(const WorldState& world, const TacticPair& tp,
                                         const ModelConstants& c, DriveRule rule = DriveRule::Literal) {
  const int n = static_cast<int>(world.sheep.size());
  const Vec2 com = centre_of_mass(std::span<const SheepState>(world.sheep));
  const auto drive = [&] {
    return BehaviourDecision{BehaviourKind::Drive,
                             drive_point(com, world.goal, f_n(c.r_pi_pi, n, 1.0)),
                             std::nullopt};
  };
  if (is_well_grouped(world, tp, c, rule)) return drive();
  const std::size_t focal = select_focal(world, tp.collect);
  try {
    return BehaviourDecision{BehaviourKind::Collect,
                             collect_point(world.sheep[focal].position, com, c.r_pi_pi), focal};
  } catch (const DegenerateGeometry&) {
    return drive();
  }
}

}  // namespace shepherd
