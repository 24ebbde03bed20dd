#include <gtest/gtest.h>

#include "shepherd/harness.hpp"
#include "shepherd/reactive.hpp"

using namespace shepherd;

namespace {

WorldState scattered(std::uint64_t seed) {
  SimConfig cfg;
  cfg.scenario = Scenario::S2;
  cfg.seed = seed;
  return spawn_scenario(cfg);
}

}  // namespace

TEST(ReactivePolicy, UnitCadenceRecomputesEveryStep) {
  ModelConstants c;
  auto w = scattered(4);
  ControllerState st;
  for (int t = 0; t < 50; ++t) {
    auto [d, next] = reactive_policy(w, st, c);
    EXPECT_EQ(d, select_behavior(w, st.tp, c));
    EXPECT_EQ(next.last_select_t, w.t);
    st = next;
    w = step(w, d.steering_point, c);
  }
}

TEST(ReactivePolicy, SplitCadenceReaimsWithoutReselecting) {
  ModelConstants c;
  auto w = scattered(8);
  ControllerState st;
  st.sigma_c2 = 10;
  st.sigma_c3 = 5;
  auto [first, s1] = reactive_policy(w, st, c);
  for (int t = 0; t < 5; ++t) w = step(w, first.steering_point, c);
  // Five steps since both timers: behaviour kept, point refreshed.
  auto [held, s2] = reactive_policy(w, s1, c);
  EXPECT_EQ(held.kind, first.kind);
  EXPECT_EQ(held.focal_agent, first.focal_agent);
  EXPECT_EQ(held, reaim(w, first, c));
  EXPECT_EQ(s2.last_select_t, 0);
  EXPECT_EQ(s2.last_point_t, 5);
}

TEST(ReactivePolicy, HoldsDecisionBetweenTicks) {
  ModelConstants c;
  auto w = scattered(9);
  ControllerState st;
  st.sigma_c2 = 10;
  st.sigma_c3 = 10;
  auto [first, s1] = reactive_policy(w, st, c);
  for (int t = 0; t < 3; ++t) w = step(w, first.steering_point, c);
  auto [again, s2] = reactive_policy(w, s1, c);
  EXPECT_EQ(again, first);
  EXPECT_EQ(s2.last_select_t, s1.last_select_t);
  EXPECT_EQ(s2.last_point_t, s1.last_point_t);
}

TEST(ReactivePolicy, RejectsZeroCadence) {
  ModelConstants c;
  ControllerState st;
  st.sigma_c3 = 0;
  EXPECT_THROW(reactive_policy(scattered(1), st, c), std::invalid_argument);
}

TEST(ReactivePolicy, KindChangesOnlyOnSelectionTicks) {
  ModelConstants c;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto w = scattered(seed);
    ControllerState st;
    st.sigma_c2 = 7;
    st.sigma_c3 = 3;
    std::optional<BehaviourKind> prev;
    for (int t = 0; t < 300; ++t) {
      auto [d, next] = reactive_policy(w, st, c);
      if (prev && *prev != d.kind) {
        EXPECT_EQ(w.t % 7, 0) << "seed " << seed;
      }
      prev = d.kind;
      st = next;
      w = step(w, d.steering_point, c);
    }
  }
}

TEST(ReactivePolicy, UnitCadenceReproducesDirectAlgorithm) {
  // Oracle: the plain loop "select, then step" without any controller state.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SimConfig cfg;
    cfg.scenario = scenario_at(seed % kNumScenarios);
    cfg.seed = seed;
    cfg.t_max = 250;
    const auto rec = run_trial(cfg, 5, AgentMode::Reactive);
    auto w = spawn_scenario(cfg);
    for (std::size_t t = 0; t + 1 < rec.steps.size(); ++t) {
      const auto d = select_behavior(w, tactic_pair(5), cfg.constants);
      ASSERT_EQ(d.kind, rec.steps[t].kind) << "seed " << seed << " t " << t;
      w = step(w, d.steering_point, cfg.constants);
      ASSERT_EQ(w.shepherd_pos, rec.steps[t + 1].shepherd);
    }
  }
}
