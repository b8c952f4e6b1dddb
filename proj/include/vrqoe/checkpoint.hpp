#pragma once

#include <memory>
#include <optional>
#include <string>

#include "vrqoe/agent.hpp"
#include "vrqoe/causal.hpp"
#include "vrqoe/config.hpp"

namespace vrqoe {

// Everything needed to resume or evaluate a training run: the resolved
// configuration, the agent (actor, critic, targets, optimizer state), the
// inference model of the causal variants, and the live RNG streams. The
// binary layout is bit-faithful: save(load(x)) == x.
struct Checkpoint {
  std::string config_json;
  std::string policy;
  int episode = 0;
  DdpgAgent agent;
  std::optional<InferenceModel> inference;
  std::string explore_rng;    // serialized engine states
  std::string replay_rng;
  std::string inference_rng;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vrqoe
