#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vrqoe/agent.hpp"
#include "vrqoe/baselines.hpp"
#include "vrqoe/checkpoint.hpp"
#include "vrqoe/config.hpp"
#include "vrqoe/metrics.hpp"

namespace vrqoe {

// Trace source described by the run config: a directory of trace files
// (cycled per episode) or seeded on-the-fly synthesis.
TraceProvider make_trace_provider(const ExperimentConfig& config);

// Deterministic test traces, seeded on a stream disjoint from training.
std::vector<SceneTrace> make_eval_traces(const ExperimentConfig& config, int count);

// Traces listed from a directory (*.jsonl, sorted by filename).
std::vector<SceneTrace> load_trace_dir(const std::string& dir);

std::string run_id_for(const std::string& policy, std::uint64_t seed);

struct TrainingArtifacts {
  std::string run_id;
  std::vector<EpisodeMetrics> episodes;
  std::shared_ptr<DdpgAgent> agent;
  std::shared_ptr<InferenceModel> inference;  // null for the plain variant
};

// Runs config.run.policy's training loop. When out_dir is non-empty the run
// writes the resolved config echo, a metrics CSV, checkpoints at the
// configured cadence, and a final checkpoint.
TrainingArtifacts run_training(const ExperimentConfig& config, const std::string& out_dir);

// Rebuilds a learned policy from a checkpoint file.
Policy policy_from_checkpoint(const std::string& path, ExperimentConfig* config_out = nullptr);

// Applies "section.key=value" onto the JSON form of a config and revalidates;
// unknown keys are rejected by the loader.
ExperimentConfig override_config(const ExperimentConfig& config, const std::string& key,
                                 double value);

}  // namespace vrqoe
