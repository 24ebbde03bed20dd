#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "shepherd/agent_types.hpp"
#include "shepherd/random.hpp"
#include "shepherd/vec2.hpp"

namespace shepherd {

// Which sheep contribute to a sheep's local centre of mass.
enum class LcmMode : std::uint8_t {
  Radius,   // every other sheep within r_shep_detect
  Nearest,  // the lcm_neighbours nearest other sheep
};

struct ModelConstants {
  double r_pi_pi = 2.0;         // sheep-sheep interaction distance
  double r_shep_detect = 65.0;  // shepherd detection / influence radius
  double sheep_step_len = 1.0;
  double shepherd_step_len = 1.5;
  double inertia = 0.5;
  double noise_ang = 0.3;
  double graze_prob = 0.05;
  double stall_dist = 6.0;
  LcmMode lcm_mode = LcmMode::Radius;
  int lcm_neighbours = 19;

  void validate() const {
    if (!(r_pi_pi > 0 && r_shep_detect > 0 && sheep_step_len > 0 && shepherd_step_len > 0 &&
          stall_dist > 0))
      throw std::invalid_argument("model distances must be strictly positive");
    // Zero inertia or noise gives the deterministic force law used by symmetry checks.
    if (!(inertia >= 0 && noise_ang >= 0))
      throw std::invalid_argument("inertia and noise_ang must be non-negative");
    if (!(graze_prob >= 0.0 && graze_prob <= 1.0))
      throw std::invalid_argument("graze_prob must lie in [0,1]");
    if (lcm_mode == LcmMode::Nearest && lcm_neighbours < 1)
      throw std::invalid_argument("lcm_neighbours must be >= 1");
  }
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

struct SimConfig {
  int n_sheep = 20;
  Scenario scenario = Scenario::S5;
  std::uint64_t seed = 0;
  int t_max = 5149;
  ModelConstants constants{};
  double paddock_side = 150.0;
  Vec2 goal{7.5, 7.5};
  double goal_radius = 15.0;
  Rect init_region{75.0, 75.0, 150.0, 150.0};
  Vec2 shepherd_init{112.5, 7.5};

  void validate() const {
    if (n_sheep <= 0) throw std::invalid_argument("n_sheep must be positive");
    if (t_max <= 0) throw std::invalid_argument("t_max must be positive");
    if (!(goal_radius > 0)) throw std::invalid_argument("goal_radius must be positive");
    if (!(paddock_side > 0)) throw std::invalid_argument("paddock_side must be positive");
    constants.validate();
  }
};

struct SheepState {
  Vec2 position;
  Vec2 heading;  // zero until first movement
  AgentType type_id = AgentType::A7;
};

struct WorldState {
  int t = 0;
  int t_max = 0;
  std::vector<SheepState> sheep;
  Vec2 shepherd_pos;
  Vec2 shepherd_heading;
  Vec2 goal;
  double goal_radius = 0.0;
  double paddock_side = 0.0;
  Rng rng;

  std::size_t size() const { return sheep.size(); }
};

inline Vec2 clamp_to_paddock(Vec2 p, double side) {
  return {std::clamp(p.x, 0.0, side), std::clamp(p.y, 0.0, side)};
}

/// Per-type agent counts for a scenario: floor of each share, residue to the majority type.
inline std::array<int, kNumAgentTypes> scenario_counts(Scenario s, int n) {
  if (n <= 0) throw std::invalid_argument("n_sheep must be positive");
  const auto& mix = mix_of(s);
  double total = 0.0;
  std::size_t majority = 0;
  for (std::size_t i = 0; i < kNumAgentTypes; ++i) {
    total += mix[i];
    if (mix[i] > mix[majority]) majority = i;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("scenario proportions must sum to 1");

  std::array<int, kNumAgentTypes> counts{};
  int assigned = 0;
  for (std::size_t i = 0; i < kNumAgentTypes; ++i) {
    counts[i] = static_cast<int>(std::floor(mix[i] * n + 1e-9));
    assigned += counts[i];
  }
  const int residue = n - assigned;
  // Each represented type loses less than one agent to flooring.
  int represented = 0;
  for (double p : mix) represented += p > 0.0 ? 1 : 0;
  if (residue < 0 || residue >= std::max(represented, 1))
    throw std::invalid_argument("scenario shares cannot be realised for this n_sheep");
  counts[majority] += residue;
  return counts;
}

inline WorldState spawn_scenario(const SimConfig& config) {
  config.validate();
  const auto counts = scenario_counts(config.scenario, config.n_sheep);

  WorldState w;
  w.t = 0;
  w.t_max = config.t_max;
  w.goal = config.goal;
  w.goal_radius = config.goal_radius;
  w.paddock_side = config.paddock_side;
  w.shepherd_pos = config.shepherd_init;
  w.rng.seed(config.seed);
  w.sheep.reserve(static_cast<std::size_t>(config.n_sheep));
  for (std::size_t type = 0; type < kNumAgentTypes; ++type) {
    for (int k = 0; k < counts[type]; ++k) {
      SheepState s;
      s.type_id = agent_type_at(type);
      s.position.x = uniform(w.rng, config.init_region.x0, config.init_region.x1);
      s.position.y = uniform(w.rng, config.init_region.y0, config.init_region.y1);
      s.position = clamp_to_paddock(s.position, config.paddock_side);
      w.sheep.push_back(s);
    }
  }
  return w;
}

inline Vec2 local_centre_of_mass(const WorldState& world, std::span<const std::size_t> subset) {
  if (subset.empty()) throw std::invalid_argument("local_centre_of_mass: empty subset");
  Vec2 sum;
  for (std::size_t i : subset) sum += world.sheep.at(i).position;
  return sum / static_cast<double>(subset.size());
}

inline Vec2 centre_of_mass(std::span<const SheepState> sheep) {
  if (sheep.empty()) throw std::invalid_argument("centre_of_mass: no sheep");
  Vec2 sum;
  for (const auto& s : sheep) sum += s.position;
  return sum / static_cast<double>(sheep.size());
}

inline Vec2 centre_of_mass(std::span<const Vec2> points) {
  if (points.empty()) throw std::invalid_argument("centre_of_mass: no points");
  Vec2 sum;
  for (Vec2 p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

namespace detail {

inline Vec2 neighbour_centre(const WorldState& world, std::size_t i, const ModelConstants& c,
                             std::vector<std::pair<double, std::size_t>>& scratch) {
  const Vec2 self = world.sheep[i].position;
  Vec2 sum;
  int count = 0;
  if (c.lcm_mode == LcmMode::Radius) {
    for (std::size_t j = 0; j < world.sheep.size(); ++j) {
      if (j == i) continue;
      if (distance(self, world.sheep[j].position) <= c.r_shep_detect) {
        sum += world.sheep[j].position;
        ++count;
      }
    }
  } else {
    scratch.clear();
    for (std::size_t j = 0; j < world.sheep.size(); ++j)
      if (j != i) scratch.emplace_back(distance(self, world.sheep[j].position), j);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(c.lcm_neighbours), scratch.size());
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
    for (std::size_t m = 0; m < k; ++m) sum += world.sheep[scratch[m].second].position;
    count = static_cast<int>(k);
  }
  return count > 0 ? sum / count : self;
}

}  // namespace detail

/// Synchronous update of every sheep from the positions at time t. Advances world.rng.
/// Grazing sheep draw one uniform and, when they move, one direction; sheep in range of the
/// shepherd always draw one noise direction.
inline std::vector<SheepState> sheep_step(WorldState& world, const ModelConstants& c) {
  std::vector<SheepState> next = world.sheep;
  std::vector<std::pair<double, std::size_t>> scratch;
  for (std::size_t i = 0; i < world.sheep.size(); ++i) {
    const SheepState& s = world.sheep[i];
    const AgentTypeParams& p = params_of(s.type_id);
    const double step_len = c.sheep_step_len * p.speed_ratio;
    SheepState& out = next[i];

    if (distance(s.position, world.shepherd_pos) > c.r_shep_detect) {
      if (uniform01(world.rng) < c.graze_prob) {
        const Vec2 dir = random_unit(world.rng);
        out.position = clamp_to_paddock(s.position + step_len * dir, world.paddock_side);
        out.heading = dir;
      }
      continue;
    }

    const Vec2 attract = normalized(detail::neighbour_centre(world, i, c, scratch) - s.position);
    Vec2 repel;
    for (std::size_t j = 0; j < world.sheep.size(); ++j) {
      if (j == i) continue;
      const Vec2 away = s.position - world.sheep[j].position;
      const double d = norm(away);
      if (d > 0.0 && d < c.r_pi_pi) repel += away / d;
    }
    const Vec2 flee = normalized(s.position - world.shepherd_pos);
    const Vec2 noise = random_unit(world.rng);

    const Vec2 h = c.inertia * s.heading + p.w_lcm * attract + p.w_rep * repel + p.w_shep * flee +
                   c.noise_ang * noise;
    const Vec2 heading = normalized(h);
    out.heading = heading;
    out.position = clamp_to_paddock(s.position + step_len * heading, world.paddock_side);
  }
  return next;
}

inline double nearest_sheep_distance(const WorldState& world, Vec2 from) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : world.sheep) best = std::min(best, distance(s.position, from));
  return best;
}

inline Vec2 shepherd_step(const WorldState& world, Vec2 steering_point, const ModelConstants& c) {
  if (!is_finite(steering_point)) throw std::invalid_argument("shepherd_step: non-finite target");
  if (nearest_sheep_distance(world, world.shepherd_pos) < c.stall_dist) return world.shepherd_pos;
  const Vec2 delta = steering_point - world.shepherd_pos;
  const double d = norm(delta);
  const Vec2 next = d <= c.shepherd_step_len ? steering_point
                                             : world.shepherd_pos + delta * (c.shepherd_step_len / d);
  return clamp_to_paddock(next, world.paddock_side);
}

inline WorldState step(const WorldState& world, Vec2 steering_point, const ModelConstants& c) {
  if (world.t >= world.t_max) throw std::logic_error("step: t has reached t_max");
  WorldState next = world;
  next.sheep = sheep_step(next, c);
  const Vec2 shepherd = shepherd_step(next, steering_point, c);
  if (!(shepherd == next.shepherd_pos)) next.shepherd_heading = normalized(shepherd - next.shepherd_pos);
  next.shepherd_pos = shepherd;
  next.t = world.t + 1;
  return next;
}

inline bool is_mission_complete(const WorldState& world) {
  return distance(centre_of_mass(std::span<const SheepState>(world.sheep)), world.goal) <=
         world.goal_radius;
}

}  // namespace shepherd
