#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "shepherd/context.hpp"

namespace shepherd {

inline constexpr int kLibrarySchema = 1;

inline nlohmann::json library_to_json(const BehaviourLibrary& lib) {
  nlohmann::json j;
  j["schema"] = kLibrarySchema;
  j["primary_metric"] = lib.primary_metric;
  j["tiebreak_metric"] = lib.tiebreak_metric;
  auto& recs = j["records"] = nlohmann::json::array();
  for (const auto& [key, metrics] : lib.records)
    for (const auto& [metric, entries] : metrics)
      for (const auto& e : entries)
        recs.push_back({{"scenario", key}, {"tp", e.tp}, {"metric", metric}, {"mean", e.mean},
                        {"std", e.std}, {"n_trials", e.n_trials}});
  auto& cad = j["cadence"] = nlohmann::json::array();
  for (const auto& [key, c] : lib.cadence)
    cad.push_back({{"scenario", key}, {"sigma_c2", c.first}, {"sigma_c3", c.second}});
  return j;
}

inline BehaviourLibrary library_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", -1) != kLibrarySchema)
    throw std::invalid_argument("behaviour library: unsupported schema version");
  BehaviourLibrary lib;
  lib.primary_metric = j.value("primary_metric", lib.primary_metric);
  lib.tiebreak_metric = j.value("tiebreak_metric", lib.tiebreak_metric);
  for (const auto& r : j.at("records")) {
    LibraryEntry e{r.at("tp").get<int>(), r.at("mean").get<double>(), r.at("std").get<double>(),
                   r.at("n_trials").get<int>()};
    if (e.tp < 1 || e.tp > 25) throw std::invalid_argument("behaviour library: tp id out of range");
    lib.add(r.at("scenario").get<std::string>(), r.at("metric").get<std::string>(), e);
  }
  if (j.contains("cadence"))
    for (const auto& c : j.at("cadence")) {
      const int c2 = c.at("sigma_c2").get<int>();
      const int c3 = c.at("sigma_c3").get<int>();
      if (c2 < 1 || c3 < 1) throw std::invalid_argument("behaviour library: cadence must be >= 1");
      lib.cadence[c.at("scenario").get<std::string>()] = {c2, c3};
    }
  return lib;
}

/// Loads a library file; a missing or unreadable file names the path in the error.
inline BehaviourLibrary load_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("behaviour library not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("behaviour library " + path + " is not valid JSON: " + e.what());
  }
  return library_from_json(j);
}

inline std::string library_text(const BehaviourLibrary& lib) { return library_to_json(lib).dump(1) + "\n"; }

}  // namespace shepherd
