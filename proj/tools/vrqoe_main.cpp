// Command-line front end: trace generation and ingestion, training,
// evaluation, parameter sweeps, and metric aggregation.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vrqoe/baselines.hpp"
#include "vrqoe/harness.hpp"
#include "vrqoe/metrics.hpp"
#include "vrqoe/scene.hpp"

namespace fs = std::filesystem;
using namespace vrqoe;

namespace {

int log_level() {
  const char* env = std::getenv("VRQOE_LOG");
  if (!env) return 1;
  const std::string v(env);
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << msg << "\n";
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv, std::uint64_t fallback) {
  if (csv.empty()) return {fallback};
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
  return seeds;
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  if (values.empty()) throw std::invalid_argument("--values must list at least one number");
  return values;
}

ExperimentConfig load_or_default(const std::string& path) {
  if (path.empty()) return default_config();
  return load_config(path);
}

int cmd_gen_traces(const std::string& out, int count, int test_count, int users, int slots,
                   double scene_m, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("--count must be positive");
  if (test_count < 0 || test_count > count)
    throw std::invalid_argument("--test-count must lie in [0, count]");
  SceneBounds bounds;
  bounds.max_x = scene_m;
  bounds.max_y = scene_m;

  const int train_count = count - test_count;
  const auto write = [&](const fs::path& dir, int offset, int n) {
    fs::create_directories(dir);
    for (int i = 0; i < n; ++i) {
      const int index = offset + i;
      char name[32];
      std::snprintf(name, sizeof(name), "trace_%05d.jsonl", index);
      save_trace_file(synth_trace(users, slots, bounds, mix_seed(seed, seed_stream::kTrace, index)),
                      (dir / name).string());
    }
  };
  if (test_count > 0) {
    write(fs::path(out) / "train", 0, train_count);
    write(fs::path(out) / "test", train_count, test_count);
    info("wrote " + std::to_string(train_count) + " training and " + std::to_string(test_count) +
         " test traces under " + out);
  } else {
    write(out, 0, count);
    info("wrote " + std::to_string(count) + " traces under " + out);
  }
  return 0;
}

int cmd_ingest_bvh(const std::vector<std::string>& bvh_paths, const std::string& out, int users,
                   int slots, double scene_m, double scale, double slot_seconds,
                   std::uint64_t seed, const GazeJointNames& names) {
  std::vector<MotionClip> clips;
  clips.reserve(bvh_paths.size());
  for (const std::string& path : bvh_paths) clips.push_back(parse_bvh_file(path));
  SceneBounds bounds;
  bounds.max_x = scene_m;
  bounds.max_y = scene_m;
  const SceneTrace trace =
      trace_from_clips(clips, users, slots, bounds, names, scale, slot_seconds, seed);
  save_trace_file(trace, out);
  info("wrote " + std::to_string(trace.slot_count()) + " slots for " +
       std::to_string(trace.users()) + " users to " + out);
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out,
              const std::string& policy_override, std::int64_t seed_override,
              int episodes_override) {
  ExperimentConfig config = load_or_default(config_path);
  if (!policy_override.empty()) config.run.policy = policy_override;
  if (seed_override >= 0) config.run.seed = static_cast<std::uint64_t>(seed_override);
  if (episodes_override > 0) config.agent.episodes = episodes_override;
  config.validate();

  info("training " + config.run.policy + " for " + std::to_string(config.agent.episodes) +
       " episodes (seed " + std::to_string(config.run.seed) + ")");
  const TrainingArtifacts artifacts = run_training(config, out);
  const EpisodeMetrics& last = artifacts.episodes.back();
  info("final episode mean reward " + format_double(last.mean_reward) + ", success rate " +
       format_double(last.success_rate));
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& model_path,
             const std::string& traces_dir, const std::string& policy_name,
             const std::string& seeds_csv, int synth_count, const std::string& out) {
  ExperimentConfig config = load_or_default(config_path);

  Policy policy = Policy::original();
  if (policy_is_learned(policy_kind_from_string(policy_name))) {
    if (model_path.empty())
      throw std::invalid_argument("policy " + policy_name + " needs --model <checkpoint>");
    ExperimentConfig model_config;
    policy = policy_from_checkpoint(model_path, &model_config);
    if (config_path.empty()) config = model_config;  // evaluate in the training environment
  } else {
    policy = policy_from_name(policy_name);
  }

  std::vector<SceneTrace> traces;
  if (!traces_dir.empty()) {
    traces = load_trace_dir(traces_dir);
  } else {
    traces = make_eval_traces(config, synth_count);
    info("no --traces directory given, synthesized " + std::to_string(synth_count) +
         " evaluation traces");
  }

  const std::vector<std::uint64_t> seeds = parse_seeds(seeds_csv, config.run.seed);
  const EvalSummary summary =
      evaluate(policy, traces, config.environment, config.resolved_channel(), seeds);

  if (!out.empty()) {
    fs::create_directories(out);
    CsvWriter csv((fs::path(out) / ("eval_" + policy.name() + ".csv")).string(),
                  config.environment.users);
    int index = 0;
    for (const EvalRecord& rec : summary.records)
      csv.write(row_from_eval(run_id_for(policy.name(), rec.seed), policy.name(), index++, rec));
  }

  std::cout << "policy " << policy.name() << ": mean_reward=" << format_double(summary.reward.mean)
            << " mean_qoe=" << format_double(summary.qoe.mean)
            << " hfqoe=" << format_double(summary.hfqoe.mean)
            << " success=" << format_double(summary.success.mean) << " ("
            << summary.records.size() << " records)\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param, const std::string& values,
              const std::string& policies_csv, const std::string& model_path,
              const std::string& traces_dir, int synth_count, const std::string& seeds_csv,
              const std::string& out) {
  const ExperimentConfig base = load_or_default(config_path);

  std::vector<std::string> policy_names;
  {
    std::stringstream ss(policies_csv);
    std::string item;
    while (std::getline(ss, item, ',')) policy_names.push_back(item);
  }
  if (policy_names.empty()) throw std::invalid_argument("--policies must list at least one");

  std::shared_ptr<const DdpgAgent> agent;
  if (!model_path.empty()) {
    Checkpoint ckpt = load_checkpoint(model_path);
    agent = std::make_shared<DdpgAgent>(std::move(ckpt.agent));
  }

  fs::create_directories(out);
  CsvWriter csv((fs::path(out) / "sweep.csv").string(), base.environment.users);

  const std::vector<std::uint64_t> seeds = parse_seeds(seeds_csv, base.run.seed);
  for (double value : parse_values(values)) {
    const ExperimentConfig config = override_config(base, param, value);
    std::vector<SceneTrace> traces;
    if (!traces_dir.empty())
      traces = load_trace_dir(traces_dir);
    else
      traces = make_eval_traces(config, synth_count);
    for (const std::string& name : policy_names) {
      const Policy policy = policy_from_name(name, agent);
      for (std::uint64_t seed : seeds) {
        const EvalSummary summary =
            evaluate(policy, traces, config.environment, config.resolved_channel(), {seed});
        int index = 0;
        for (const EvalRecord& rec : summary.records) {
          MetricRow row = row_from_eval(run_id_for(policy.name(), seed), policy.name(), index++, rec);
          row.param = param;
          row.value = value;
          csv.write(row);
        }
        info(param + "=" + format_double(value) + " " + policy.name() + " seed " +
             std::to_string(seed) + ": reward " + format_double(summary.reward.mean));
      }
    }
  }
  return 0;
}

int cmd_summarize(const std::vector<std::string>& csv_paths, const std::string& out) {
  std::vector<MetricRow> rows;
  for (const std::string& path : csv_paths) {
    std::vector<MetricRow> part = read_metric_csv(path);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const std::string json = summary_to_json(summarize(rows));
  if (out.empty()) {
    std::cout << json;
  } else {
    std::ofstream file(out);
    if (!file) throw std::runtime_error("cannot open " + out);
    file << json;
    info("summary written to " + out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-user VR QoE simulator and causal-RL training workbench"};
  app.require_subcommand(1);

  // gen-traces
  std::string gt_out = "traces";
  int gt_count = 1, gt_test = 0, gt_users = 5, gt_slots = 100;
  double gt_scene = 10.0;
  std::uint64_t gt_seed = 1;
  auto* gen = app.add_subcommand("gen-traces", "Synthesize seeded scene traces");
  gen->add_option("--out", gt_out, "Output directory");
  gen->add_option("--count", gt_count, "Number of traces")->required();
  gen->add_option("--test-count", gt_test, "Last N traces go into a test/ split");
  gen->add_option("--users", gt_users, "Users per trace");
  gen->add_option("--slots", gt_slots, "Slots per trace");
  gen->add_option("--scene", gt_scene, "Scene edge length in metres");
  gen->add_option("--seed", gt_seed, "Master seed");

  // ingest-bvh
  std::vector<std::string> ib_files;
  std::string ib_out = "trace.jsonl";
  int ib_users = 5, ib_slots = 100;
  double ib_scene = 10.0, ib_scale = 0.001, ib_slot_seconds = 1.0;
  std::uint64_t ib_seed = 1;
  GazeJointNames ib_names;
  auto* ingest = app.add_subcommand("ingest-bvh", "Build a scene trace from motion-capture files");
  ingest->add_option("--bvh", ib_files, "BVH files (cycled across users)")->required();
  ingest->add_option("--out", ib_out, "Output trace file");
  ingest->add_option("--users", ib_users, "Users in the scene");
  ingest->add_option("--slots", ib_slots, "Slots to sample");
  ingest->add_option("--scene", ib_scene, "Scene edge length in metres");
  ingest->add_option("--scale", ib_scale, "Metres per BVH length unit");
  ingest->add_option("--slot-seconds", ib_slot_seconds, "Motion time per slot");
  ingest->add_option("--seed", ib_seed, "Seed for the placement augmentation");
  ingest->add_option("--head-joint", ib_names.head, "Head joint name");
  ingest->add_option("--left-shoulder-joint", ib_names.left_shoulder, "Left shoulder joint name");
  ingest->add_option("--right-shoulder-joint", ib_names.right_shoulder,
                     "Right shoulder joint name");

  // train
  std::string tr_config, tr_out = "runs/train", tr_policy;
  std::int64_t tr_seed = -1;
  int tr_episodes = 0;
  auto* train = app.add_subcommand("train", "Train a policy");
  train->add_option("--config", tr_config, "Config file (defaults when omitted)");
  train->add_option("--out", tr_out, "Run output directory");
  train->add_option("--policy", tr_policy, "ddpg | cai_ddpg_fullstate | ps_cddpg");
  train->add_option("--seed", tr_seed, "Master seed override");
  train->add_option("--episodes", tr_episodes, "Episode count override");

  // eval
  std::string ev_config, ev_model, ev_traces, ev_policy = "ps_cddpg", ev_seeds, ev_out;
  int ev_synth = 100;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a policy on test traces");
  eval_cmd->add_option("--config", ev_config, "Config file");
  eval_cmd->add_option("--model", ev_model, "Checkpoint for learned policies");
  eval_cmd->add_option("--traces", ev_traces, "Directory of .jsonl traces");
  eval_cmd->add_option("--policy", ev_policy, "Policy name");
  eval_cmd->add_option("--seeds", ev_seeds, "Comma-separated seeds");
  eval_cmd->add_option("--synth-count", ev_synth, "Synthesized traces when --traces is omitted");
  eval_cmd->add_option("--out", ev_out, "Directory for the evaluation CSV");

  // sweep
  std::string sw_config, sw_param, sw_values, sw_policies = "original,attention_only,fixed_50";
  std::string sw_model, sw_traces, sw_seeds, sw_out = "runs/sweep";
  int sw_synth = 50;
  auto* sweep = app.add_subcommand("sweep", "Evaluate policies over a parameter grid");
  sweep->add_option("--config", sw_config, "Config file");
  sweep->add_option("--param", sw_param, "Config key, e.g. environment.b_max")->required();
  sweep->add_option("--values", sw_values, "Comma-separated grid values")->required();
  sweep->add_option("--policies", sw_policies, "Comma-separated policy names");
  sweep->add_option("--model", sw_model, "Checkpoint for learned policies");
  sweep->add_option("--traces", sw_traces, "Directory of .jsonl traces");
  sweep->add_option("--synth-count", sw_synth, "Synthesized traces when --traces is omitted");
  sweep->add_option("--seeds", sw_seeds, "Comma-separated seeds");
  sweep->add_option("--out", sw_out, "Output directory");

  // summarize
  std::vector<std::string> su_csvs;
  std::string su_out;
  auto* summarize_cmd = app.add_subcommand("summarize", "Aggregate metric CSVs per policy");
  summarize_cmd->add_option("--csv", su_csvs, "Metric CSV files")->required();
  summarize_cmd->add_option("--out", su_out, "Summary JSON path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_traces(gt_out, gt_count, gt_test, gt_users, gt_slots, gt_scene, gt_seed);
    if (ingest->parsed())
      return cmd_ingest_bvh(ib_files, ib_out, ib_users, ib_slots, ib_scene, ib_scale,
                            ib_slot_seconds, ib_seed, ib_names);
    if (train->parsed()) return cmd_train(tr_config, tr_out, tr_policy, tr_seed, tr_episodes);
    if (eval_cmd->parsed())
      return cmd_eval(ev_config, ev_model, ev_traces, ev_policy, ev_seeds, ev_synth, ev_out);
    if (sweep->parsed())
      return cmd_sweep(sw_config, sw_param, sw_values, sw_policies, sw_model, sw_traces, sw_synth,
                       sw_seeds, sw_out);
    if (summarize_cmd->parsed()) return cmd_summarize(su_csvs, su_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
