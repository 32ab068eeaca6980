#pragma once

// Experiment configuration: a strict JSON document carrying the model, the
// cost and the run settings. See docs/config.md for the schema.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "mflqr/model.hpp"

namespace mflqr {

struct ExperimentConfig {
  SystemModel model;
  CostModel cost;
  int n = 1;
  // Simulation length. Equals cost.T for a finite horizon; the rollout
  // length for an infinite one.
  int T = 1;
  std::uint64_t seed = 0;
  int num_runs = 1;
  bool leaderless = false;
  bool consensus = true;
  int oracle_n = 3;
  std::string output_dir = "out";
  bool followers_csv = false;
  bool trace_json = false;
};

// Throws ConfigError carrying a JSON pointer to the offending key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Bundled leader + 100 follower example (T = 80, or infinite with beta = 1).
std::string example1_config_text(bool infinite = false);

}  // namespace mflqr
