#pragma once

#include <optional>
#include <stdexcept>
#include <utility>

#include "shepherd/behaviour.hpp"

namespace shepherd {

struct ControllerState {
  TacticPair tp = tactic_pair(5);
  int sigma_c2 = 1;  // behaviour re-selection period (steps)
  int sigma_c3 = 1;  // steering point re-computation period (steps)
  DriveRule drive_rule = DriveRule::Literal;
  std::optional<BehaviourDecision> last_decision;
  int last_select_t = 0;
  int last_point_t = 0;

  void validate() const {
    if (sigma_c2 < 1 || sigma_c3 < 1) throw std::invalid_argument("cadence periods must be >= 1");
  }
};

/// Re-aim the held behaviour at the current flock without re-running the switch test.
/// A held collect keeps its focal sheep.
inline BehaviourDecision reaim(const WorldState& world, const BehaviourDecision& held,
                               const ModelConstants& c) {
  const int n = static_cast<int>(world.sheep.size());
  const Vec2 com = centre_of_mass(std::span<const SheepState>(world.sheep));
  const auto drive = [&] {
    return BehaviourDecision{BehaviourKind::Drive, drive_point(com, world.goal, f_n(c.r_pi_pi, n, 1.0)),
                             std::nullopt};
  };
  if (held.kind == BehaviourKind::Drive || !held.focal_agent) return drive();
  const std::size_t focal = *held.focal_agent;
  try {
    return {BehaviourKind::Collect, collect_point(world.sheep[focal].position, com, c.r_pi_pi), focal};
  } catch (const DegenerateGeometry&) {
    return drive();
  }
}

/// One control tick. Every sigma_c2 steps the drive/collect switch is re-evaluated (and both
/// timers reset); otherwise every sigma_c3 steps the held behaviour gets a fresh steering point;
/// otherwise the previous decision is reused verbatim.
inline std::pair<BehaviourDecision, ControllerState> reactive_policy(const WorldState& world,
                                                                     ControllerState state,
                                                                     const ModelConstants& c) {
  state.validate();
  if (!state.last_decision || world.t - state.last_select_t >= state.sigma_c2) {
    state.last_decision = select_behavior(world, state.tp, c, state.drive_rule);
    state.last_select_t = world.t;
    state.last_point_t = world.t;
  } else if (world.t - state.last_point_t >= state.sigma_c3) {
    state.last_decision = reaim(world, *state.last_decision, c);
    state.last_point_t = world.t;
  }
  BehaviourDecision out = *state.last_decision;
  return {out, std::move(state)};
}

}  // namespace shepherd
