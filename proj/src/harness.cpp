#include "vrqoe/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace vrqoe {

namespace {
namespace fs = std::filesystem;

SceneBounds bounds_for(const ExperimentConfig& config) {
  SceneBounds bounds;
  bounds.max_x = config.environment.scene_m;
  bounds.max_y = config.environment.scene_m;
  return bounds;
}

std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  rng.save(out);
  return out.str();
}

void save_run_checkpoint(const ExperimentConfig& config, const std::string& path, int episode,
                         const DdpgAgent& agent, const InferenceModel* inference,
                         const TrainRngs& rngs) {
  Checkpoint ckpt;
  ckpt.config_json = config_to_json(config);
  ckpt.policy = config.run.policy;
  ckpt.episode = episode;
  ckpt.agent = agent;
  if (inference) ckpt.inference = *inference;
  ckpt.explore_rng = rng_state(rngs.explore);
  ckpt.replay_rng = rng_state(rngs.replay);
  ckpt.inference_rng = rng_state(rngs.inference);
  save_checkpoint(ckpt, path);
}
}  // namespace

TraceProvider make_trace_provider(const ExperimentConfig& config) {
  const int users = config.environment.users;
  const int slots = config.run.slots;
  const std::uint64_t seed = config.run.seed;
  if (config.run.trace_dir.empty()) {
    const SceneBounds bounds = bounds_for(config);
    return [users, slots, seed, bounds](int episode) {
      return synth_trace(users, slots, bounds, mix_seed(seed, seed_stream::kTrace, episode));
    };
  }
  auto pool = std::make_shared<std::vector<SceneTrace>>(load_trace_dir(config.run.trace_dir));
  for (const SceneTrace& t : *pool)
    if (t.users() != users)
      throw std::runtime_error("trace pool user count does not match environment.users");
  return [pool](int episode) {
    return (*pool)[static_cast<std::size_t>(episode) % pool->size()];
  };
}

std::vector<SceneTrace> make_eval_traces(const ExperimentConfig& config, int count) {
  const SceneBounds bounds = bounds_for(config);
  std::vector<SceneTrace> traces;
  traces.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    traces.push_back(synth_trace(config.environment.users, config.run.slots, bounds,
                                 mix_seed(config.run.seed, seed_stream::kEvalTrace, i)));
  return traces;
}

std::vector<SceneTrace> load_trace_dir(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
      files.push_back(entry.path());
  if (files.empty()) throw std::runtime_error("no .jsonl traces in " + dir);
  std::sort(files.begin(), files.end());
  std::vector<SceneTrace> traces;
  traces.reserve(files.size());
  for (const fs::path& f : files) traces.push_back(load_trace_file(f.string()));
  return traces;
}

std::string run_id_for(const std::string& policy, std::uint64_t seed) {
  return policy + "-s" + std::to_string(seed);
}

TrainingArtifacts run_training(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  const PolicyKind kind = policy_kind_from_string(config.run.policy);
  if (!policy_is_learned(kind))
    throw std::invalid_argument("run.policy: " + config.run.policy + " is not trainable");

  const int users = config.environment.users;
  const int sdim = state_dim(users);
  const int adim = action_dim(users);

  TrainingArtifacts artifacts;
  artifacts.run_id = run_id_for(config.run.policy, config.run.seed);
  AgentConfig agent_cfg = config.agent;
  agent_cfg.share_users = users;
  artifacts.agent = std::make_shared<DdpgAgent>(sdim, adim, agent_cfg, config.run.seed);

  if (kind == PolicyKind::PsCddpg || kind == PolicyKind::CaiDdpgFullstate) {
    std::vector<int> targets;
    if (kind == PolicyKind::PsCddpg) {
      targets = s2_indices(users);
    } else {
      targets.resize(static_cast<std::size_t>(sdim));
      for (int i = 0; i < sdim; ++i) targets[static_cast<std::size_t>(i)] = i;
    }
    std::vector<int> hidden(static_cast<std::size_t>(config.agent.inference_layers),
                            config.agent.inference_hidden);
    artifacts.inference = std::make_shared<InferenceModel>(
        sdim, adim, targets, hidden, config.agent.lr_inference, config.agent.variance_floor,
        mix_seed(config.run.seed, seed_stream::kNetwork, 2));
  }

  VrEnv env(config.environment, config.resolved_channel());
  ReplayBuffer replay(config.agent.replay_capacity);
  TraceProvider traces = make_trace_provider(config);
  TrainRngs rngs = TrainRngs::from_seed(config.run.seed);

  std::unique_ptr<CsvWriter> csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_config(config, (fs::path(out_dir) / "config_resolved.json").string());
    csv = std::make_unique<CsvWriter>((fs::path(out_dir) / "metrics.csv").string(), users);
  }

  TrainHooks hooks;
  hooks.on_episode = [&](const EpisodeMetrics& m) {
    if (csv) csv->write(row_from_episode(artifacts.run_id, config.run.policy, config.run.seed, m));
    if (!out_dir.empty() && config.run.checkpoint_every > 0 &&
        (m.episode + 1) % config.run.checkpoint_every == 0 &&
        m.episode + 1 < config.agent.episodes) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_ep%06d.bin", m.episode + 1);
      save_run_checkpoint(config, (fs::path(out_dir) / name).string(), m.episode + 1,
                          *artifacts.agent, artifacts.inference.get(), rngs);
    }
  };

  artifacts.episodes = train_agent(env, *artifacts.agent, artifacts.inference.get(), replay,
                                   traces, config.agent.episodes, config.run.seed, rngs, hooks);

  if (!out_dir.empty())
    save_run_checkpoint(config, (fs::path(out_dir) / "checkpoint_final.bin").string(),
                        config.agent.episodes, *artifacts.agent, artifacts.inference.get(), rngs);
  return artifacts;
}

Policy policy_from_checkpoint(const std::string& path, ExperimentConfig* config_out) {
  Checkpoint ckpt = load_checkpoint(path);
  if (config_out) *config_out = config_from_json_text(ckpt.config_json);
  auto agent = std::make_shared<DdpgAgent>(std::move(ckpt.agent));
  return Policy::learned(policy_kind_from_string(ckpt.policy), std::move(agent));
}

ExperimentConfig override_config(const ExperimentConfig& config, const std::string& key,
                                 double value) {
  const auto dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == key.size())
    throw std::invalid_argument("override key must look like section.key: " + key);
  nlohmann::json root = nlohmann::json::parse(config_to_json(config));
  const std::string section = key.substr(0, dot);
  const std::string field = key.substr(dot + 1);
  if (!root.contains(section)) throw std::invalid_argument("unknown key: " + key);
  if (!root.at(section).contains(field)) throw std::invalid_argument("unknown key: " + key);
  const nlohmann::json& old = root.at(section).at(field);
  if (old.is_number_integer() || old.is_number_unsigned())
    root[section][field] = static_cast<std::int64_t>(value);
  else if (old.is_number_float())
    root[section][field] = value;
  else
    throw std::invalid_argument("override key is not numeric: " + key);
  return config_from_json_text(root.dump());
}

}  // namespace vrqoe
