#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shepherd {

inline constexpr std::size_t kNumAgentTypes = 7;
inline constexpr std::size_t kNumScenarios = 11;

enum class AgentType : std::uint8_t { A1 = 0, A2, A3, A4, A5, A6, A7 };
enum class Scenario : std::uint8_t { S1 = 0, S2, S3, S4, S5, S6, S7, S8, S9, S10, S11 };

constexpr std::size_t index_of(AgentType a) { return static_cast<std::size_t>(a); }
constexpr std::size_t index_of(Scenario s) { return static_cast<std::size_t>(s); }
constexpr AgentType agent_type_at(std::size_t i) { return static_cast<AgentType>(i); }
constexpr Scenario scenario_at(std::size_t i) { return static_cast<Scenario>(i); }

struct AgentTypeParams {
  AgentType id;
  double w_lcm;        // attraction to local centre of mass
  double w_rep;        // sheep-sheep repulsion
  double w_shep;       // shepherd repulsion
  double speed_ratio;  // sheep speed relative to shepherd
};

// Behavioural weights of the seven sheep types. A7 is the classic flocking sheep.
inline constexpr std::array<AgentTypeParams, kNumAgentTypes> kAgentTypes{{
    {AgentType::A1, 0.50, 2.00, 0.50, 1.00},
    {AgentType::A2, 1.50, 2.00, 0.50, 0.50},
    {AgentType::A3, 0.50, 3.00, 1.00, 0.67},
    {AgentType::A4, 0.50, 2.00, 1.90, 0.67},
    {AgentType::A5, 1.05, 3.00, 1.00, 0.67},
    {AgentType::A6, 1.05, 1.50, 1.00, 0.50},
    {AgentType::A7, 1.05, 2.00, 1.00, 0.67},
}};

constexpr const AgentTypeParams& params_of(AgentType a) { return kAgentTypes[index_of(a)]; }

using TypeDistribution = std::array<double, kNumAgentTypes>;

// Type proportions per scenario. S1-S4 heterogeneous, S5-S11 homogeneous.
inline constexpr std::array<TypeDistribution, kNumScenarios> kScenarioMix{{
    {0.20, 0.00, 0.00, 0.00, 0.00, 0.00, 0.80},  // S1
    {0.00, 0.20, 0.20, 0.00, 0.00, 0.20, 0.40},  // S2
    {0.00, 0.00, 0.00, 0.80, 0.00, 0.00, 0.20},  // S3
    {0.20, 0.00, 0.00, 0.00, 0.20, 0.00, 0.60},  // S4
    {0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 1.00},  // S5
    {1.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00},  // S6
    {0.00, 1.00, 0.00, 0.00, 0.00, 0.00, 0.00},  // S7
    {0.00, 0.00, 1.00, 0.00, 0.00, 0.00, 0.00},  // S8
    {0.00, 0.00, 0.00, 1.00, 0.00, 0.00, 0.00},  // S9
    {0.00, 0.00, 0.00, 0.00, 1.00, 0.00, 0.00},  // S10
    {0.00, 0.00, 0.00, 0.00, 0.00, 1.00, 0.00},  // S11
}};

constexpr const TypeDistribution& mix_of(Scenario s) { return kScenarioMix[index_of(s)]; }
constexpr bool is_heterogeneous(Scenario s) { return index_of(s) < 4; }

inline std::string to_string(AgentType a) { return "A" + std::to_string(index_of(a) + 1); }
inline std::string to_string(Scenario s) { return "S" + std::to_string(index_of(s) + 1); }

inline Scenario parse_scenario(std::string_view text) {
  if (text.size() >= 2 && (text[0] == 'S' || text[0] == 's')) text.remove_prefix(1);
  int v = 0;
  for (char c : text) {
    if (c < '0' || c > '9') throw std::invalid_argument("bad scenario id");
    v = v * 10 + (c - '0');
  }
  if (text.empty() || v < 1 || v > static_cast<int>(kNumScenarios))
    throw std::invalid_argument("scenario id out of range S1..S11");
  return scenario_at(static_cast<std::size_t>(v - 1));
}

}  // namespace shepherd
