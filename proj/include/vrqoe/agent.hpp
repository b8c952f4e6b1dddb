#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "vrqoe/causal.hpp"
#include "vrqoe/env.hpp"
#include "vrqoe/nn.hpp"
#include "vrqoe/rng.hpp"

namespace vrqoe {

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;  // raw actor-space action
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool terminal = false;
};

// Fixed-capacity FIFO replay memory; once full, the oldest entry is evicted.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Index 0 is the oldest stored transition.
  const Transition& at(std::size_t index) const;
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;  // slot the next push writes into
  std::vector<Transition> data_;
};

enum class SelectionMode { Weighted, Argmax };

struct AgentConfig {
  double discount = 0.99;   // gamma
  double tau = 0.01;        // target soft-update rate
  double lr_actor = 5e-5;
  double lr_critic = 6e-7;
  double lr_inference = 1e-4;
  int batch_rl = 64;         // |D^R|
  int batch_inference = 128; // |D^C|
  double epsilon = 0.4;      // exploration probability of the causal variants
  // Exploration probability of the plain-noise variant. Classic DDPG
  // perturbs every action, so the traditional setting is 1.
  double plain_noise_epsilon = 1.0;
  double noise_variance = 0.01;  // sigma_eta^2
  int candidates = 64;           // N noise candidates per exploration
  int kl_samples = 32;           // Monte-Carlo draws per dimension in the CAI score
  std::size_t replay_capacity = 5000;  // M
  int episodes = 10000;                // I_max
  // Environment steps of inference-model training before candidate scores
  // steer exploration; the model is trained before it is trusted.
  int cai_warmup_steps = 1000;
  int actor_hidden = 32;   // n_r, also the critic width
  int actor_layers = 4;
  int inference_hidden = 256;  // n_c
  int inference_layers = 3;
  SelectionMode selection = SelectionMode::Weighted;
  double variance_floor = 1e-6;
  // Number of users when the action follows the 6K resource layout; enables
  // the critic's share-normalized action view. Zero leaves actions raw.
  int share_users = 0;
  // Strength of the pull of raw actor outputs toward 1/2. The share map leaves
  // the output scale unconstrained; this anchors it away from saturation. The
  // share blocks get their own, typically stronger, pull: lopsided bandwidth
  // splits starve individual users long before the critic can price that.
  double actor_center_penalty = 0.05;
  double share_center_penalty = 0.5;

  void validate() const;
};

// Rank-based selection weights: candidates sorted by score descending (ties
// by index), rank 1 is best, and the weight (N - R) / sum(R) is renormalized
// to a proper distribution. The worst candidate always gets probability zero.
struct RankWeights {
  std::vector<int> rank;             // per candidate, 1-based
  std::vector<double> probability;   // per candidate, sums to 1
};
RankWeights rank_weights(const std::vector<double>& scores);
int sample_index(const std::vector<double>& probabilities, Rng& rng);

// The critic consumes the action the environment actually executes, not the
// unnormalized actor output: the first two blocks of `share_users` components
// (bandwidth, server cycles) become shares of their block sums, the keyframe
// components pass through. This removes the scale degeneracy of the raw
// parameterization from the Q landscape. share_users == 0 is the identity.
Eigen::MatrixXd critic_action_input(const Eigen::MatrixXd& raw, int share_users);
// Chain rule of critic_action_input: maps a gradient w.r.t. the shares back
// onto the raw actor outputs.
Eigen::MatrixXd critic_action_grad(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& shares,
                                   const Eigen::MatrixXd& share_grad, int share_users);

class DdpgAgent {
 public:
  DdpgAgent() = default;
  DdpgAgent(int state_dim, int action_dim, const AgentConfig& config, std::uint64_t seed);

  // Deterministic policy output, clamped to the open unit interval so the
  // downstream normalization always sees valid ratios.
  Eigen::VectorXd act(const Eigen::VectorXd& state) const;

  // Gated exploration. Without an inference model this is classic noise
  // exploration (one Gaussian perturbation, gated by plain_noise_epsilon);
  // with one, a batch of noisy candidates is scored by causal influence and
  // one is picked by rank weight (or argmax when configured), gated by
  // epsilon.
  // causal_ready gates the candidate scoring during the inference model's
  // warm-up; until then the causal variants fall back to a single
  // perturbation under the same epsilon.
  Eigen::VectorXd explore(const Eigen::VectorXd& state, const InferenceModel* inference,
                          Rng& rng, bool causal_ready = true) const;

  // Bootstrap targets y = r + gamma * Q^-(s', X^-(s')); terminal transitions
  // keep only the reward.
  Eigen::VectorXd critic_targets(const std::vector<const Transition*>& batch) const;

  struct TrainStats {
    bool skipped = true;  // replay below the warm-up size
    double critic_loss = 0.0;
    double actor_value = 0.0;  // mean Q(s, X(s)) before the update
  };
  TrainStats train_step(const ReplayBuffer& replay, Rng& rng);

  int state_dim() const { return actor_.input_dim(); }
  int action_dim() const { return actor_.output_dim(); }
  const AgentConfig& config() const { return cfg_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& target_actor() const { return target_actor_; }
  const Mlp& target_critic() const { return target_critic_; }

  void save(std::ostream& out) const;
  static DdpgAgent load(std::istream& in, const AgentConfig& config);

 private:
  AgentConfig cfg_;
  Mlp actor_, critic_, target_actor_, target_critic_;
  Adam opt_actor_, opt_critic_;
};

// Per-episode training metrics, one row per episode in the metrics CSV.
struct EpisodeMetrics {
  int episode = 0;
  double mean_reward = 0.0;
  double mean_qoe = 0.0;        // per user-slot
  double final_hfqoe = 1.0;     // horizon fairness at the episode end
  double success_rate = 0.0;    // user-slots delivered within the budget
  DelayBreakdown mean_delays;
  std::vector<double> user_qoe;  // per-user episode means
  double critic_loss = 0.0;      // mean over performed updates
  double inference_loss = 0.0;
};

// Source of one trace per episode (seeded synthesis or a file pool).
using TraceProvider = std::function<SceneTrace(int episode)>;

// The three random streams a training run consumes besides the per-episode
// environment seeds. Callers that checkpoint mid-run own these so the states
// can be serialized alongside the networks.
struct TrainRngs {
  Rng explore;
  Rng replay;
  Rng inference;

  static TrainRngs from_seed(std::uint64_t master_seed);
};

struct TrainHooks {
  // Called after each episode with that episode's metrics.
  std::function<void(const EpisodeMetrics&)> on_episode;
};

// Runs the training loop: per slot, explore -> env.step -> store transition ->
// one RL update -> one inference update (when a model is attached). The
// inference model of the causal variants trains on every transition with its
// own batch size.
std::vector<EpisodeMetrics> train_agent(VrEnv& env, DdpgAgent& agent, InferenceModel* inference,
                                        ReplayBuffer& replay, const TraceProvider& traces,
                                        int episodes, std::uint64_t master_seed, TrainRngs& rngs,
                                        const TrainHooks& hooks = {});
std::vector<EpisodeMetrics> train_agent(VrEnv& env, DdpgAgent& agent, InferenceModel* inference,
                                        ReplayBuffer& replay, const TraceProvider& traces,
                                        int episodes, std::uint64_t master_seed,
                                        const TrainHooks& hooks = {});

}  // namespace vrqoe
