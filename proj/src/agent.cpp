#include "vrqoe/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vrqoe {

namespace {
constexpr double kRawClip = 1e-6;  // keeps raw actions strictly inside (0, 1)

double clamp_unit(double x) { return std::clamp(x, kRawClip, 1.0 - kRawClip); }
}  // namespace

Eigen::MatrixXd critic_action_input(const Eigen::MatrixXd& raw, int share_users) {
  if (share_users == 0) return raw;
  const Eigen::Index users = share_users;
  if (raw.rows() < 2 * users)
    throw std::invalid_argument("critic_action_input: action too short for the share blocks");
  Eigen::MatrixXd out = raw;
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const double b_sum = raw.col(c).head(users).sum();
    const double f_sum = raw.col(c).segment(users, users).sum();
    out.col(c).head(users) /= b_sum;
    out.col(c).segment(users, users) /= f_sum;
  }
  return out;
}

Eigen::MatrixXd critic_action_grad(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& shares,
                                   const Eigen::MatrixXd& share_grad, int share_users) {
  if (share_users == 0) return share_grad;
  const Eigen::Index users = share_users;
  Eigen::MatrixXd grad = share_grad;
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    // y_i = x_i / S  =>  dL/dx_i = (g_i - sum_j g_j y_j) / S, per block.
    for (int block = 0; block < 2; ++block) {
      const Eigen::Index start = block * users;
      const double sum = raw.col(c).segment(start, users).sum();
      const double weighted =
          share_grad.col(c).segment(start, users).dot(shares.col(c).segment(start, users));
      for (Eigen::Index i = 0; i < users; ++i)
        grad(start + i, c) = (share_grad(start + i, c) - weighted) / sum;
    }
  }
  return grad;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  data_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t index) const {
  if (index >= data_.size()) throw std::out_of_range("ReplayBuffer::at");
  if (data_.size() < capacity_) return data_[index];
  return data_[(next_ + index) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng& rng) const {
  if (data_.empty()) throw std::logic_error("ReplayBuffer: cannot sample from an empty buffer");
  std::vector<std::size_t> idx(count);
  for (std::size_t& i : idx)
    i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(data_.size()) - 1));
  return idx;
}

void AgentConfig::validate() const {
  if (discount < 0.0 || discount > 1.0)
    throw std::invalid_argument("agent.gamma must lie in [0, 1]");
  if (!(tau > 0.0) || tau > 1.0) throw std::invalid_argument("agent.tau must lie in (0, 1]");
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("agent.epsilon must lie in [0, 1]");
  if (plain_noise_epsilon < 0.0 || plain_noise_epsilon > 1.0)
    throw std::invalid_argument("agent.plain_noise_epsilon must lie in [0, 1]");
  if (lr_actor <= 0.0 || lr_critic <= 0.0 || lr_inference <= 0.0)
    throw std::invalid_argument("agent learning rates must be positive");
  if (batch_rl < 1 || batch_inference < 1)
    throw std::invalid_argument("agent batch sizes must be positive");
  if (noise_variance < 0.0) throw std::invalid_argument("cai.noise_variance must be >= 0");
  if (candidates < 2) throw std::invalid_argument("cai.candidates must be at least 2");
  if (kl_samples < 1) throw std::invalid_argument("cai.kl_samples must be at least 1");
  if (replay_capacity == 0) throw std::invalid_argument("agent.capacity must be positive");
  if (episodes < 1) throw std::invalid_argument("agent.episodes must be positive");
  if (actor_hidden < 1 || actor_layers < 1 || inference_hidden < 1 || inference_layers < 1)
    throw std::invalid_argument("agent network sizes must be positive");
  if (!(variance_floor > 0.0))
    throw std::invalid_argument("agent.variance_floor must be positive");
}

RankWeights rank_weights(const std::vector<double>& scores) {
  const std::size_t n = scores.size();
  if (n < 2) throw std::invalid_argument("rank_weights: need at least two candidates");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RankWeights result;
  result.rank.resize(n);
  result.probability.resize(n);
  // sum over (N - R) for R = 1..N
  const double norm = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t i = order[pos];
    const int rank = static_cast<int>(pos) + 1;
    result.rank[i] = rank;
    result.probability[i] = (static_cast<double>(n) - rank) / norm;
  }
  return result;
}

int sample_index(const std::vector<double>& probabilities, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    cumulative += probabilities[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  if (last_positive < 0) throw std::invalid_argument("sample_index: no positive probability");
  return last_positive;  // guards against round-off at the top of the CDF
}

DdpgAgent::DdpgAgent(int state_dim, int action_dim, const AgentConfig& config, std::uint64_t seed)
    : cfg_(config) {
  cfg_.validate();
  std::vector<int> actor_widths{state_dim};
  std::vector<int> critic_widths{state_dim + action_dim};
  for (int l = 0; l < cfg_.actor_layers; ++l) {
    actor_widths.push_back(cfg_.actor_hidden);
    critic_widths.push_back(cfg_.actor_hidden);
  }
  actor_widths.push_back(action_dim);
  critic_widths.push_back(1);

  Rng actor_init(mix_seed(seed, seed_stream::kNetwork, 0));
  Rng critic_init(mix_seed(seed, seed_stream::kNetwork, 1));
  actor_ = Mlp(actor_widths, Activation::Sigmoid, actor_init);
  critic_ = Mlp(critic_widths, Activation::Identity, critic_init);
  target_actor_ = actor_;
  target_critic_ = critic_;
  opt_actor_ = Adam(actor_, cfg_.lr_actor);
  opt_critic_ = Adam(critic_, cfg_.lr_critic);
}

Eigen::VectorXd DdpgAgent::act(const Eigen::VectorXd& state) const {
  Eigen::VectorXd a = actor_.forward(state);
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = clamp_unit(a[i]);
  return a;
}

Eigen::VectorXd DdpgAgent::explore(const Eigen::VectorXd& state, const InferenceModel* inference,
                                   Rng& rng, bool causal_ready) const {
  const Eigen::VectorXd base = act(state);
  const double gate = inference ? cfg_.epsilon : cfg_.plain_noise_epsilon;
  if (rng.uniform() >= gate) return base;

  const double sigma = std::sqrt(cfg_.noise_variance);
  if (inference == nullptr || !causal_ready) {
    // Classic noise exploration: a single perturbed action.
    Eigen::VectorXd a = base;
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = clamp_unit(a[i] + sigma * rng.gaussian());
    return a;
  }

  std::vector<Eigen::VectorXd> candidates(static_cast<std::size_t>(cfg_.candidates));
  for (auto& c : candidates) {
    c = base;
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = clamp_unit(c[i] + sigma * rng.gaussian());
  }

  const std::vector<CaiEstimate> estimates =
      cai_scores(*inference, state, candidates, cfg_.kl_samples, rng);
  std::vector<double> scores(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) scores[i] = estimates[i].score;

  if (cfg_.selection == SelectionMode::Argmax) {
    const std::size_t best = static_cast<std::size_t>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
    return candidates[best];
  }
  const RankWeights weights = rank_weights(scores);
  return candidates[static_cast<std::size_t>(sample_index(weights.probability, rng))];
}

Eigen::VectorXd DdpgAgent::critic_targets(const std::vector<const Transition*>& batch) const {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd next_states(state_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) next_states.col(i) = batch[static_cast<std::size_t>(i)]->next_state;

  const Eigen::MatrixXd next_actions = target_actor_.forward(next_states);
  Eigen::MatrixXd critic_in(state_dim() + action_dim(), n);
  critic_in.topRows(state_dim()) = next_states;
  critic_in.bottomRows(action_dim()) = critic_action_input(next_actions, cfg_.share_users);
  const Eigen::MatrixXd next_q = target_critic_.forward(critic_in);

  Eigen::VectorXd targets(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[static_cast<std::size_t>(i)];
    targets[i] = t.reward + (t.terminal ? 0.0 : cfg_.discount * next_q(0, i));
  }
  return targets;
}

DdpgAgent::TrainStats DdpgAgent::train_step(const ReplayBuffer& replay, Rng& rng) {
  TrainStats stats;
  const std::size_t warmup =
      static_cast<std::size_t>(std::max(cfg_.batch_rl, cfg_.batch_inference));
  if (replay.size() < warmup) return stats;
  stats.skipped = false;

  const std::vector<std::size_t> idx =
      replay.sample_indices(static_cast<std::size_t>(cfg_.batch_rl), rng);
  std::vector<const Transition*> batch;
  batch.reserve(idx.size());
  for (std::size_t i : idx) batch.push_back(&replay.at(i));

  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd states(state_dim(), n);
  Eigen::MatrixXd actions(action_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    states.col(i) = batch[static_cast<std::size_t>(i)]->state;
    actions.col(i) = batch[static_cast<std::size_t>(i)]->action;
  }

  // Critic regression toward the bootstrap targets.
  const Eigen::VectorXd targets = critic_targets(batch);
  Eigen::MatrixXd critic_in(state_dim() + action_dim(), n);
  critic_in.topRows(state_dim()) = states;
  critic_in.bottomRows(action_dim()) = critic_action_input(actions, cfg_.share_users);
  const Eigen::MatrixXd q = critic_.forward_train(critic_in);
  Eigen::MatrixXd dq(1, n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double err = q(0, i) - targets[i];
    loss += err * err;
    dq(0, i) = 2.0 * err / static_cast<double>(n);
  }
  stats.critic_loss = loss / static_cast<double>(n);
  critic_.backward(dq);
  opt_critic_.step(critic_);

  // Deterministic policy gradient: ascend Q(s, X(s)) through the fresh critic.
  const Eigen::MatrixXd policy_actions = actor_.forward_train(states);
  const Eigen::MatrixXd policy_shares = critic_action_input(policy_actions, cfg_.share_users);
  Eigen::MatrixXd policy_in(state_dim() + action_dim(), n);
  policy_in.topRows(state_dim()) = states;
  policy_in.bottomRows(action_dim()) = policy_shares;
  const Eigen::MatrixXd policy_q = critic_.forward_train(policy_in);
  stats.actor_value = policy_q.row(0).mean();
  const Eigen::MatrixXd ascend =
      Eigen::MatrixXd::Constant(1, n, -1.0 / static_cast<double>(n));
  const Eigen::MatrixXd input_grad = critic_.backward(ascend);
  critic_.zero_grad();  // the critic only supplied gradients for the actor
  Eigen::MatrixXd actor_grad = critic_action_grad(policy_actions, policy_shares,
                                                  input_grad.bottomRows(action_dim()),
                                                  cfg_.share_users);
  const Eigen::MatrixXd centered = (policy_actions.array() - 0.5).matrix();
  const Eigen::Index share_rows = 2 * cfg_.share_users;
  actor_grad.bottomRows(actor_grad.rows() - share_rows) +=
      (2.0 * cfg_.actor_center_penalty / static_cast<double>(n)) *
      centered.bottomRows(actor_grad.rows() - share_rows);
  actor_grad.topRows(share_rows) += (2.0 * cfg_.share_center_penalty / static_cast<double>(n)) *
                                    centered.topRows(share_rows);
  actor_.backward(actor_grad);
  opt_actor_.step(actor_);

  soft_update(target_actor_, actor_, cfg_.tau);
  soft_update(target_critic_, critic_, cfg_.tau);
  return stats;
}

void DdpgAgent::save(std::ostream& out) const {
  actor_.save(out);
  critic_.save(out);
  target_actor_.save(out);
  target_critic_.save(out);
  opt_actor_.save(out);
  opt_critic_.save(out);
}

DdpgAgent DdpgAgent::load(std::istream& in, const AgentConfig& config) {
  DdpgAgent agent;
  agent.cfg_ = config;
  agent.actor_ = Mlp::load(in);
  agent.critic_ = Mlp::load(in);
  agent.target_actor_ = Mlp::load(in);
  agent.target_critic_ = Mlp::load(in);
  agent.opt_actor_ = Adam::load(in);
  agent.opt_critic_ = Adam::load(in);
  return agent;
}

TrainRngs TrainRngs::from_seed(std::uint64_t master_seed) {
  return TrainRngs{Rng(mix_seed(master_seed, seed_stream::kExplore)),
                   Rng(mix_seed(master_seed, seed_stream::kReplay)),
                   Rng(mix_seed(master_seed, seed_stream::kInference))};
}

std::vector<EpisodeMetrics> train_agent(VrEnv& env, DdpgAgent& agent, InferenceModel* inference,
                                        ReplayBuffer& replay, const TraceProvider& traces,
                                        int episodes, std::uint64_t master_seed,
                                        const TrainHooks& hooks) {
  TrainRngs rngs = TrainRngs::from_seed(master_seed);
  return train_agent(env, agent, inference, replay, traces, episodes, master_seed, rngs, hooks);
}

std::vector<EpisodeMetrics> train_agent(VrEnv& env, DdpgAgent& agent, InferenceModel* inference,
                                        ReplayBuffer& replay, const TraceProvider& traces,
                                        int episodes, std::uint64_t master_seed, TrainRngs& rngs,
                                        const TrainHooks& hooks) {
  if (episodes < 1) throw std::invalid_argument("train_agent: need at least one episode");

  Rng& explore_rng = rngs.explore;
  Rng& replay_rng = rngs.replay;
  Rng& inference_rng = rngs.inference;

  const int users = env.system().users;
  std::vector<EpisodeMetrics> metrics;
  metrics.reserve(static_cast<std::size_t>(episodes));

  long total_steps = 0;
  for (int episode = 0; episode < episodes; ++episode) {
    const SceneTrace trace = traces(episode);
    EnvState state = env.reset(trace, mix_seed(master_seed, seed_stream::kEnv, episode));

    EpisodeMetrics m;
    m.episode = episode;
    m.user_qoe.assign(static_cast<std::size_t>(users), 0.0);
    int slots = 0;
    int rl_updates = 0;
    int inference_updates = 0;
    int delivered = 0;

    while (!env.done()) {
      const bool causal_ready = total_steps >= agent.config().cai_warmup_steps;
      const Eigen::VectorXd action =
          agent.explore(state.features, inference, explore_rng, causal_ready);
      RawAction raw;
      raw.v.assign(action.data(), action.data() + action.size());
      VrEnv::StepResult result = env.step(raw);

      Transition t;
      t.state = state.features;
      t.action = action;
      t.reward = result.reward;
      t.next_state = result.state.features;
      t.terminal = result.done;
      replay.push(std::move(t));

      const DdpgAgent::TrainStats stats = agent.train_step(replay, replay_rng);
      if (!stats.skipped) {
        m.critic_loss += stats.critic_loss;
        ++rl_updates;
      }

      if (inference != nullptr) {
        const std::size_t batch = static_cast<std::size_t>(agent.config().batch_inference);
        if (replay.size() >= batch) {
          const std::vector<std::size_t> idx = replay.sample_indices(batch, inference_rng);
          Eigen::MatrixXd states(state.features.size(), static_cast<Eigen::Index>(batch));
          Eigen::MatrixXd actions(action.size(), static_cast<Eigen::Index>(batch));
          Eigen::MatrixXd targets(inference->target_dim(), static_cast<Eigen::Index>(batch));
          for (std::size_t i = 0; i < batch; ++i) {
            const Transition& sample = replay.at(idx[i]);
            states.col(static_cast<Eigen::Index>(i)) = sample.state;
            actions.col(static_cast<Eigen::Index>(i)) = sample.action;
            targets.col(static_cast<Eigen::Index>(i)) =
                inference->targets_from_state(sample.next_state);
          }
          m.inference_loss += inference->train_batch(states, actions, targets);
          ++inference_updates;
        }
      }

      m.mean_reward += result.reward;
      for (int k = 0; k < users; ++k) {
        const std::size_t i = static_cast<std::size_t>(k);
        m.user_qoe[i] += result.report.qoe[i];
        m.mean_delays.upload_s += result.report.delays[i].upload_s;
        m.mean_delays.extract_s += result.report.delays[i].extract_s;
        m.mean_delays.download_s += result.report.delays[i].download_s;
        m.mean_delays.reconstruct_s += result.report.delays[i].reconstruct_s;
        if (result.report.delivered[i]) ++delivered;
      }
      m.final_hfqoe = result.report.hfqoe;
      state = std::move(result.state);
      ++slots;
      ++total_steps;
    }

    const double user_slots = static_cast<double>(slots) * users;
    m.mean_reward /= slots;
    for (double& q : m.user_qoe) q /= slots;
    m.mean_qoe = std::accumulate(m.user_qoe.begin(), m.user_qoe.end(), 0.0) / users;
    m.success_rate = delivered / user_slots;
    m.mean_delays.upload_s /= user_slots;
    m.mean_delays.extract_s /= user_slots;
    m.mean_delays.download_s /= user_slots;
    m.mean_delays.reconstruct_s /= user_slots;
    if (rl_updates > 0) m.critic_loss /= rl_updates;
    if (inference_updates > 0) m.inference_loss /= inference_updates;

    if (hooks.on_episode) hooks.on_episode(m);
    metrics.push_back(std::move(m));
  }
  return metrics;
}

}  // namespace vrqoe
