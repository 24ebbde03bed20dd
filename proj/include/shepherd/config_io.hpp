#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "shepherd/world.hpp"

namespace shepherd {

inline nlohmann::json vec_json(Vec2 v) { return nlohmann::json::array({v.x, v.y}); }

inline Vec2 vec_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected a [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline nlohmann::json constants_to_json(const ModelConstants& c) {
  return {{"r_pi_pi", c.r_pi_pi},
          {"r_shep_detect", c.r_shep_detect},
          {"sheep_step_len", c.sheep_step_len},
          {"shepherd_step_len", c.shepherd_step_len},
          {"inertia", c.inertia},
          {"noise_ang", c.noise_ang},
          {"graze_prob", c.graze_prob},
          {"stall_dist", c.stall_dist},
          {"lcm_mode", c.lcm_mode == LcmMode::Radius ? "radius" : "nearest"},
          {"lcm_neighbours", c.lcm_neighbours}};
}

inline ModelConstants constants_from_json(const nlohmann::json& j) {
  ModelConstants c;
  c.r_pi_pi = j.value("r_pi_pi", c.r_pi_pi);
  c.r_shep_detect = j.value("r_shep_detect", c.r_shep_detect);
  c.sheep_step_len = j.value("sheep_step_len", c.sheep_step_len);
  c.shepherd_step_len = j.value("shepherd_step_len", c.shepherd_step_len);
  c.inertia = j.value("inertia", c.inertia);
  c.noise_ang = j.value("noise_ang", c.noise_ang);
  c.graze_prob = j.value("graze_prob", c.graze_prob);
  c.stall_dist = j.value("stall_dist", c.stall_dist);
  const std::string mode = j.value("lcm_mode", std::string("radius"));
  if (mode == "radius") c.lcm_mode = LcmMode::Radius;
  else if (mode == "nearest") c.lcm_mode = LcmMode::Nearest;
  else throw std::invalid_argument("lcm_mode must be \"radius\" or \"nearest\"");
  c.lcm_neighbours = j.value("lcm_neighbours", c.lcm_neighbours);
  c.validate();
  return c;
}

/// The scenario-independent part of a SimConfig (scenario and seed are per trial).
inline nlohmann::json sim_to_json(const SimConfig& s) {
  return {{"n_sheep", s.n_sheep},
          {"t_max", s.t_max},
          {"paddock_side", s.paddock_side},
          {"goal", vec_json(s.goal)},
          {"goal_radius", s.goal_radius},
          {"init_region", {s.init_region.x0, s.init_region.y0, s.init_region.x1, s.init_region.y1}},
          {"shepherd_init", vec_json(s.shepherd_init)},
          {"constants", constants_to_json(s.constants)}};
}

inline SimConfig sim_from_json(const nlohmann::json& j) {
  SimConfig s;
  s.n_sheep = j.value("n_sheep", s.n_sheep);
  s.t_max = j.value("t_max", s.t_max);
  s.paddock_side = j.value("paddock_side", s.paddock_side);
  if (j.contains("goal")) s.goal = vec_from(j["goal"]);
  s.goal_radius = j.value("goal_radius", s.goal_radius);
  if (j.contains("init_region")) {
    const auto& r = j["init_region"];
    if (!r.is_array() || r.size() != 4) throw std::invalid_argument("init_region must be [x0, y0, x1, y1]");
    s.init_region = {r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
  }
  if (j.contains("shepherd_init")) s.shepherd_init = vec_from(j["shepherd_init"]);
  if (j.contains("constants")) s.constants = constants_from_json(j["constants"]);
  s.validate();
  return s;
}

}  // namespace shepherd
