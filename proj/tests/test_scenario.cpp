#include "fairbbr/scenario.hpp"

#include <gtest/gtest.h>

#include <string>

namespace fairbbr {
namespace {

const char* kValid = R"({
  "duration_s": 30,
  "seed": 7,
  "algorithm": "coupled",
  "alpha_mode": "per_subflow",
  "rtt_prime": "min",
  "links": [{"id": "L1", "rate_bps": 2e6, "delay_ms": 25, "buffer_packets": 10}],
  "flows": [
    {"id": "A", "path": ["L1"], "send_rate_mps": 50, "arrival": "uniform"},
    {"id": "B", "path": ["L1"], "send_rate_mps": 60, "start_s": 1.5, "stop_s": 20}
  ]
})";

TEST(Scenario, ParsesAllFields) {
  SimConfig cfg = parse_scenario_text(kValid);
  EXPECT_DOUBLE_EQ(cfg.duration_s, 30);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.algorithm, CcAlgorithm::Coupled);
  EXPECT_EQ(cfg.coupled.alpha_mode, AlphaMode::PerSubflow);
  EXPECT_EQ(cfg.coupled.rtt_prime, RttPrimeMode::UseMin);
  ASSERT_EQ(cfg.links.size(), 1u);
  EXPECT_DOUBLE_EQ(cfg.links[0].rate_bps, 2e6);
  EXPECT_DOUBLE_EQ(cfg.links[0].prop_delay_s, 0.025);
  ASSERT_EQ(cfg.flows.size(), 2u);
  EXPECT_EQ(cfg.flows[0].arrival, ArrivalProcess::Uniform);
  EXPECT_EQ(cfg.flows[1].arrival, ArrivalProcess::Poisson);
  EXPECT_DOUBLE_EQ(cfg.flows[1].start_s, 1.5);
  EXPECT_DOUBLE_EQ(cfg.flows[1].stop_s, 20);
}

TEST(Scenario, DefaultsApply) {
  SimConfig cfg = parse_scenario_text(R"({
    "links": [{"id": "L", "rate_bps": 1e6, "delay_ms": 10, "buffer_packets": 5}],
    "flows": [{"id": "A", "path": ["L"], "send_rate_mps": 10}]
  })");
  EXPECT_DOUBLE_EQ(cfg.duration_s, 60);
  EXPECT_EQ(cfg.algorithm, CcAlgorithm::Bbr);
  EXPECT_EQ(cfg.coupled.alpha_mode, AlphaMode::SharedMax);
  EXPECT_EQ(cfg.coupled.rtt_prime, RttPrimeMode::UseMax);
  EXPECT_EQ(cfg.flows[0].message_bytes, 1250);
}

void expect_config_error(const std::string& text, const std::string& needle) {
  try {
    parse_scenario_text(text);
    FAIL() << "expected ConfigError mentioning '" << needle << "'";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos)
        << "actual: " << e.what();
  }
}

TEST(Scenario, UnknownKeysRejectedEverywhere) {
  expect_config_error(R"({"bogus": 1, "links": [], "flows": []})", "bogus");
  expect_config_error(R"({
    "links": [{"id": "L", "rate_bps": 1, "delay_ms": 1, "buffer_packets": 1, "oops": 2}],
    "flows": [{"id": "A", "path": ["L"], "send_rate_mps": 1}]
  })",
                      "oops");
  expect_config_error(R"({
    "links": [{"id": "L", "rate_bps": 1, "delay_ms": 1, "buffer_packets": 1}],
    "flows": [{"id": "A", "path": ["L"], "send_rate_mps": 1, "typo": true}]
  })",
                      "typo");
}

TEST(Scenario, ValidationNamesTheField) {
  expect_config_error(R"({
    "links": [{"id": "L", "rate_bps": -5, "delay_ms": 1, "buffer_packets": 1}],
    "flows": [{"id": "A", "path": ["L"], "send_rate_mps": 1}]
  })",
                      "links[0].rate_bps");
  expect_config_error(R"({
    "links": [{"id": "L", "delay_ms": 1, "buffer_packets": 1}],
    "flows": [{"id": "A", "path": ["L"], "send_rate_mps": 1}]
  })",
                      "links[0].rate_bps: missing");
  expect_config_error(R"({
    "links": [{"id": "L", "rate_bps": 1e6, "delay_ms": 1, "buffer_packets": 1}],
    "flows": [{"id": "A", "path": [], "send_rate_mps": 1}]
  })",
                      "flows[0].path");
  expect_config_error(R"({
    "links": [{"id": "L", "rate_bps": 1e6, "delay_ms": 1, "buffer_packets": 1}],
    "flows": [{"id": "A", "path": ["L"], "send_rate_mps": 1, "arrival": "bursty"}]
  })",
                      "flows[0].arrival");
  expect_config_error("not json at all", "invalid JSON");
  expect_config_error(R"({"algorithm": "reno",
    "links": [{"id": "L", "rate_bps": 1e6, "delay_ms": 1, "buffer_packets": 1}],
    "flows": [{"id": "A", "path": ["L"], "send_rate_mps": 1}]
  })",
                      "algorithm");
}

TEST(Scenario, JsonRoundTrip) {
  SimConfig cfg = parse_scenario_text(kValid);
  SimConfig back = parse_scenario(scenario_to_json(cfg));
  EXPECT_EQ(back.seed, cfg.seed);
  EXPECT_EQ(back.algorithm, cfg.algorithm);
  EXPECT_EQ(back.coupled.alpha_mode, cfg.coupled.alpha_mode);
  ASSERT_EQ(back.flows.size(), cfg.flows.size());
  EXPECT_DOUBLE_EQ(back.flows[1].stop_s, cfg.flows[1].stop_s);
  EXPECT_EQ(back.flows[0].arrival, cfg.flows[0].arrival);
}

}  // namespace
}  // namespace fairbbr
