#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vrqoe/agent.hpp"
#include "vrqoe/channel.hpp"
#include "vrqoe/env.hpp"

namespace vrqoe {

struct RunConfig {
  std::uint64_t seed = 1;
  std::string policy = "ps_cddpg";
  int slots = 100;             // T, slots per data sequence
  int checkpoint_every = 0;    // episodes between checkpoints; 0 = final only
  std::string trace_dir;       // empty = synthesize traces on the fly
};

// Complete experiment description. Defaults reproduce the reference
// evaluation parameters; a config file only needs the keys it overrides.
struct ExperimentConfig {
  SystemParams environment;
  ChannelParams channel;
  std::vector<std::array<double, 2>> user_positions;  // access point at origin
  AgentConfig agent;
  RunConfig run;

  void validate() const;
  // Channel params with distances resolved from the user positions.
  ChannelParams resolved_channel() const;
};

ExperimentConfig default_config();

// Strict loader: unknown keys are rejected, validation failures name the
// offending key path (for example "environment.t_max").
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

std::string config_to_json(const ExperimentConfig& config);
void write_config(const ExperimentConfig& config, const std::string& path);

}  // namespace vrqoe
