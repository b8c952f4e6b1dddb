#include "vrqoe/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "vrqoe/baselines.hpp"

namespace vrqoe {

namespace {
using nlohmann::json;

class SectionReader {
 public:
  SectionReader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {}

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument(prefix_ + key + ": wrong type");
    }
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw std::invalid_argument("unknown key: " + prefix_ + item.key());
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

const json& section(const json& root, const char* name) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  if (!root.at(name).is_object())
    throw std::invalid_argument(std::string(name) + ": must be an object");
  return root.at(name);
}

SelectionMode selection_from_string(const std::string& s) {
  if (s == "weighted") return SelectionMode::Weighted;
  if (s == "argmax") return SelectionMode::Argmax;
  throw std::invalid_argument("agent.selection: must be \"weighted\" or \"argmax\"");
}
}  // namespace

void ExperimentConfig::validate() const {
  environment.validate();
  agent.validate();
  if (user_positions.empty())
    throw std::invalid_argument("channel.user_positions must not be empty");
  for (const auto& p : user_positions) {
    const double d = std::hypot(p[0], p[1]);
    if (!(d > channel.reference_m))
      throw std::invalid_argument(
          "channel.user_positions: every user must sit beyond the reference distance");
  }
  if (!(channel.reference_m > 0))
    throw std::invalid_argument("channel.d0 must be positive");
  if (channel.shadow_sigma_db < 0)
    throw std::invalid_argument("channel.shadow_sigma_db must be non-negative");
  if (run.slots < 1) throw std::invalid_argument("run.slots must be positive");
  if (run.checkpoint_every < 0)
    throw std::invalid_argument("run.checkpoint_every must be non-negative");
  policy_kind_from_string(run.policy);  // throws on unknown names
}

ChannelParams ExperimentConfig::resolved_channel() const {
  ChannelParams chan = channel;
  chan.user_distance_m = distances_from_positions(user_positions);
  return chan;
}

ExperimentConfig default_config() {
  ExperimentConfig config;
  config.user_positions = default_user_positions();
  return config;
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json root = json::object();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos) {
    try {
      root = json::parse(text);
    } catch (const json::exception& e) {
      throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
  }
  if (!root.is_object()) throw std::invalid_argument("config root must be a JSON object");

  ExperimentConfig config = default_config();

  {
    SectionReader env(section(root, "environment"), "environment.");
    env.get("users", config.environment.users);
    env.get("fps", config.environment.fps);
    env.get("frame_bytes", config.environment.frame_bytes);
    env.get("slot_seconds", config.environment.slot_seconds);
    env.get("compression", config.environment.compression);
    env.get("extract_cycles_per_bit", config.environment.extract_cycles_per_bit);
    env.get("reconstruct_cycles_per_bit", config.environment.reconstruct_cycles_per_bit);
    env.get("render_cycles_per_bit", config.environment.render_cycles_per_bit);
    env.get("t_max", config.environment.latency_budget_s);
    env.get("b_max", config.environment.total_bandwidth_hz);
    env.get("f_max", config.environment.total_server_hz);
    env.get("client_hz_min", config.environment.client_hz_min);
    env.get("client_hz_max", config.environment.client_hz_max);
    env.get("qoe_threshold", config.environment.qoe_threshold);
    env.get("hfqoe_threshold", config.environment.hfqoe_threshold);
    env.get("qoe_penalty", config.environment.qoe_penalty);
    env.get("fairness_penalty", config.environment.fairness_penalty);
    env.get("scene_m", config.environment.scene_m);
    env.finish();
  }
  {
    SectionReader chan(section(root, "channel"), "channel.");
    chan.get("d0", config.channel.reference_m);
    chan.get("pl_d0_db", config.channel.pl_reference_db);
    chan.get("pl_per_decade_db", config.channel.pl_per_decade_db);
    chan.get("shadow_sigma_db", config.channel.shadow_sigma_db);
    chan.get("tx_power_dbm", config.channel.tx_power_dbm);
    chan.get("noise_power_dbm", config.channel.noise_power_dbm);
    chan.get("user_positions", config.user_positions);
    chan.finish();
  }
  {
    SectionReader agent(section(root, "agent"), "agent.");
    agent.get("gamma", config.agent.discount);
    agent.get("tau", config.agent.tau);
    agent.get("lr_actor", config.agent.lr_actor);
    agent.get("lr_critic", config.agent.lr_critic);
    agent.get("lr_inference", config.agent.lr_inference);
    agent.get("batch_rl", config.agent.batch_rl);
    agent.get("batch_inference", config.agent.batch_inference);
    agent.get("epsilon", config.agent.epsilon);
    agent.get("plain_noise_epsilon", config.agent.plain_noise_epsilon);
    agent.get("capacity", config.agent.replay_capacity);
    agent.get("cai_warmup_steps", config.agent.cai_warmup_steps);
    agent.get("episodes", config.agent.episodes);
    agent.get("actor_hidden", config.agent.actor_hidden);
    agent.get("actor_layers", config.agent.actor_layers);
    agent.get("inference_hidden", config.agent.inference_hidden);
    agent.get("inference_layers", config.agent.inference_layers);
    agent.get("variance_floor", config.agent.variance_floor);
    agent.get("actor_center_penalty", config.agent.actor_center_penalty);
    agent.get("share_center_penalty", config.agent.share_center_penalty);
    std::string selection =
        config.agent.selection == SelectionMode::Weighted ? "weighted" : "argmax";
    agent.get("selection", selection);
    config.agent.selection = selection_from_string(selection);
    agent.finish();
  }
  {
    SectionReader cai(section(root, "cai"), "cai.");
    cai.get("candidates", config.agent.candidates);
    cai.get("kl_samples", config.agent.kl_samples);
    cai.get("noise_variance", config.agent.noise_variance);
    cai.finish();
  }
  {
    SectionReader run(section(root, "run"), "run.");
    run.get("seed", config.run.seed);
    run.get("policy", config.run.policy);
    run.get("slots", config.run.slots);
    run.get("checkpoint_every", config.run.checkpoint_every);
    run.get("trace_dir", config.run.trace_dir);
    run.finish();
  }
  for (const auto& item : root.items()) {
    static const std::set<std::string> known = {"environment", "channel", "agent", "cai", "run"};
    if (!known.count(item.key()))
      throw std::invalid_argument("unknown key: " + item.key());
  }

  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return config_from_json_text(text.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json root;
  root["environment"] = {
      {"users", c.environment.users},
      {"fps", c.environment.fps},
      {"frame_bytes", c.environment.frame_bytes},
      {"slot_seconds", c.environment.slot_seconds},
      {"compression", c.environment.compression},
      {"extract_cycles_per_bit", c.environment.extract_cycles_per_bit},
      {"reconstruct_cycles_per_bit", c.environment.reconstruct_cycles_per_bit},
      {"render_cycles_per_bit", c.environment.render_cycles_per_bit},
      {"t_max", c.environment.latency_budget_s},
      {"b_max", c.environment.total_bandwidth_hz},
      {"f_max", c.environment.total_server_hz},
      {"client_hz_min", c.environment.client_hz_min},
      {"client_hz_max", c.environment.client_hz_max},
      {"qoe_threshold", c.environment.qoe_threshold},
      {"hfqoe_threshold", c.environment.hfqoe_threshold},
      {"qoe_penalty", c.environment.qoe_penalty},
      {"fairness_penalty", c.environment.fairness_penalty},
      {"scene_m", c.environment.scene_m},
  };
  root["channel"] = {
      {"d0", c.channel.reference_m},
      {"pl_d0_db", c.channel.pl_reference_db},
      {"pl_per_decade_db", c.channel.pl_per_decade_db},
      {"shadow_sigma_db", c.channel.shadow_sigma_db},
      {"tx_power_dbm", c.channel.tx_power_dbm},
      {"noise_power_dbm", c.channel.noise_power_dbm},
      {"user_positions", c.user_positions},
  };
  root["agent"] = {
      {"gamma", c.agent.discount},
      {"tau", c.agent.tau},
      {"lr_actor", c.agent.lr_actor},
      {"lr_critic", c.agent.lr_critic},
      {"lr_inference", c.agent.lr_inference},
      {"batch_rl", c.agent.batch_rl},
      {"batch_inference", c.agent.batch_inference},
      {"epsilon", c.agent.epsilon},
      {"plain_noise_epsilon", c.agent.plain_noise_epsilon},
      {"capacity", c.agent.replay_capacity},
      {"cai_warmup_steps", c.agent.cai_warmup_steps},
      {"episodes", c.agent.episodes},
      {"actor_hidden", c.agent.actor_hidden},
      {"actor_layers", c.agent.actor_layers},
      {"inference_hidden", c.agent.inference_hidden},
      {"inference_layers", c.agent.inference_layers},
      {"variance_floor", c.agent.variance_floor},
      {"actor_center_penalty", c.agent.actor_center_penalty},
      {"share_center_penalty", c.agent.share_center_penalty},
      {"selection", c.agent.selection == SelectionMode::Weighted ? "weighted" : "argmax"},
  };
  root["cai"] = {
      {"candidates", c.agent.candidates},
      {"kl_samples", c.agent.kl_samples},
      {"noise_variance", c.agent.noise_variance},
  };
  root["run"] = {
      {"seed", c.run.seed},
      {"policy", c.run.policy},
      {"slots", c.run.slots},
      {"checkpoint_every", c.run.checkpoint_every},
      {"trace_dir", c.run.trace_dir},
  };
  return root.dump(2) + "\n";
}

void write_config(const ExperimentConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open config file for writing: " + path);
  out << config_to_json(config);
}

}  // namespace vrqoe
