#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbbr/errors.hpp"
#include "fairbbr/sim.hpp"

namespace fairbbr {

// JSON scenario schema. Strict by design: unknown keys are rejected and
// every diagnostic names the offending field, so a typo'd key can never
// silently fall back to a default.
//
// {
//   "duration_s": 60, "seed": 1,
//   "algorithm": "bbr" | "coupled" | "coupled_ml",
//   "alpha_mode": "as_printed" | "per_subflow",
//   "rtt_prime": "max" | "min",
//   "w_window_s": 0,
//   "links": [{"id": "L1", "rate_bps": 1e6, "delay_ms": 50, "buffer_packets": 50}],
//   "flows": [{"id": "A", "path": ["L1"], "send_rate_mps": 100,
//              "message_bytes": 1250, "start_s": 0, "stop_s": 60,
//              "arrival": "poisson" | "uniform"}]
// }

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::string& where,
                                const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

template <typename T>
T require(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(where + "." + key + ": missing");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <typename T>
T optional_or(const json& obj, const std::string& where, const std::string& key,
              T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

}  // namespace detail

inline CcAlgorithm parse_algorithm(const std::string& s) {
  if (s == "bbr") return CcAlgorithm::Bbr;
  if (s == "coupled") return CcAlgorithm::Coupled;
  if (s == "coupled_ml") return CcAlgorithm::CoupledMl;
  throw ConfigError("algorithm: expected bbr|coupled|coupled_ml, got '" + s + "'");
}

inline AlphaMode parse_alpha_mode(const std::string& s) {
  if (s == "as_printed") return AlphaMode::SharedMax;
  if (s == "per_subflow") return AlphaMode::PerSubflow;
  throw ConfigError("alpha_mode: expected as_printed|per_subflow, got '" + s + "'");
}

inline RttPrimeMode parse_rtt_prime(const std::string& s) {
  if (s == "max") return RttPrimeMode::UseMax;
  if (s == "min") return RttPrimeMode::UseMin;
  throw ConfigError("rtt_prime: expected max|min, got '" + s + "'");
}

inline SimConfig parse_scenario(const nlohmann::json& j) {
  using detail::optional_or;
  using detail::reject_unknown_keys;
  using detail::require;

  if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
  reject_unknown_keys(j, "scenario",
                      {"duration_s", "seed", "algorithm", "alpha_mode", "rtt_prime",
                       "w_window_s", "links", "flows"});

  SimConfig cfg;
  cfg.duration_s = optional_or<double>(j, "scenario", "duration_s", 60.0);
  cfg.seed = optional_or<uint64_t>(j, "scenario", "seed", 1);
  cfg.algorithm =
      parse_algorithm(optional_or<std::string>(j, "scenario", "algorithm", "bbr"));
  cfg.coupled.alpha_mode =
      parse_alpha_mode(optional_or<std::string>(j, "scenario", "alpha_mode", "as_printed"));
  cfg.coupled.rtt_prime =
      parse_rtt_prime(optional_or<std::string>(j, "scenario", "rtt_prime", "max"));
  cfg.coupled.w_window_s = optional_or<double>(j, "scenario", "w_window_s", 0.0);

  if (!j.contains("links") || !j.at("links").is_array() || j.at("links").empty()) {
    throw ConfigError("links: at least one link is required");
  }
  size_t i = 0;
  for (const auto& lj : j.at("links")) {
    std::string where = "links[" + std::to_string(i) + "]";
    if (!lj.is_object()) throw ConfigError(where + ": expected an object");
    reject_unknown_keys(lj, where, {"id", "rate_bps", "delay_ms", "buffer_packets"});
    LinkConfig lc;
    lc.id = require<std::string>(lj, where, "id");
    lc.rate_bps = require<double>(lj, where, "rate_bps");
    lc.prop_delay_s = require<double>(lj, where, "delay_ms") * 1e-3;
    lc.buffer_packets = require<int64_t>(lj, where, "buffer_packets");
    if (lc.rate_bps <= 0) throw ConfigError(where + ".rate_bps: must be > 0");
    if (lc.prop_delay_s < 0) throw ConfigError(where + ".delay_ms: must be >= 0");
    if (lc.buffer_packets < 1) throw ConfigError(where + ".buffer_packets: must be >= 1");
    cfg.links.push_back(std::move(lc));
    ++i;
  }

  if (!j.contains("flows") || !j.at("flows").is_array() || j.at("flows").empty()) {
    throw ConfigError("flows: at least one flow is required");
  }
  i = 0;
  for (const auto& fj : j.at("flows")) {
    std::string where = "flows[" + std::to_string(i) + "]";
    if (!fj.is_object()) throw ConfigError(where + ": expected an object");
    reject_unknown_keys(fj, where,
                        {"id", "path", "send_rate_mps", "message_bytes", "start_s",
                         "stop_s", "arrival"});
    FlowConfig fc;
    fc.id = require<std::string>(fj, where, "id");
    fc.path = require<std::vector<std::string>>(fj, where, "path");
    fc.send_rate_mps = require<double>(fj, where, "send_rate_mps");
    fc.message_bytes = optional_or<int64_t>(fj, where, "message_bytes", 1250);
    fc.start_s = optional_or<double>(fj, where, "start_s", 0.0);
    fc.stop_s = optional_or<double>(fj, where, "stop_s", -1.0);
    std::string arrival = optional_or<std::string>(fj, where, "arrival", "poisson");
    if (arrival == "poisson") {
      fc.arrival = ArrivalProcess::Poisson;
    } else if (arrival == "uniform") {
      fc.arrival = ArrivalProcess::Uniform;
    } else {
      throw ConfigError(where + ".arrival: expected poisson|uniform, got '" + arrival +
                        "'");
    }
    if (fc.send_rate_mps < 0) throw ConfigError(where + ".send_rate_mps: must be >= 0");
    if (fc.message_bytes <= 0) throw ConfigError(where + ".message_bytes: must be > 0");
    if (fc.path.empty()) throw ConfigError(where + ".path: must not be empty");
    cfg.flows.push_back(std::move(fc));
    ++i;
  }
  return cfg;
}

inline SimConfig parse_scenario_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

inline nlohmann::json scenario_to_json(const SimConfig& cfg) {
  nlohmann::json j;
  j["duration_s"] = cfg.duration_s;
  j["seed"] = cfg.seed;
  j["algorithm"] = to_string(cfg.algorithm);
  j["alpha_mode"] =
      cfg.coupled.alpha_mode == AlphaMode::SharedMax ? "as_printed" : "per_subflow";
  j["rtt_prime"] = cfg.coupled.rtt_prime == RttPrimeMode::UseMax ? "max" : "min";
  j["w_window_s"] = cfg.coupled.w_window_s;
  j["links"] = nlohmann::json::array();
  for (const auto& l : cfg.links) {
    j["links"].push_back({{"id", l.id},
                          {"rate_bps", l.rate_bps},
                          {"delay_ms", l.prop_delay_s * 1e3},
                          {"buffer_packets", l.buffer_packets}});
  }
  j["flows"] = nlohmann::json::array();
  for (const auto& f : cfg.flows) {
    nlohmann::json fj = {
        {"id", f.id},
        {"path", f.path},
        {"send_rate_mps", f.send_rate_mps},
        {"message_bytes", f.message_bytes},
        {"start_s", f.start_s},
        {"arrival", f.arrival == ArrivalProcess::Poisson ? "poisson" : "uniform"}};
    if (f.stop_s >= 0) fj["stop_s"] = f.stop_s;
    j["flows"].push_back(std::move(fj));
  }
  return j;
}

}  // namespace fairbbr
