#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

#include "vrqoe/nn.hpp"
#include "vrqoe/rng.hpp"

namespace vrqoe {

// Closed-form KL divergence between two univariate Gaussians.
double kl_gaussian(double mean_p, double var_p, double mean_q, double var_q);

// Probabilistic dynamics model: takes the full state and the raw action,
// predicts a diagonal Gaussian over the action-relevant next-state block.
// The full-state variant simply lists every state index as a target.
class InferenceModel {
 public:
  InferenceModel() = default;
  InferenceModel(int state_dim, int action_dim, std::vector<int> target_indices,
                 const std::vector<int>& hidden, double learning_rate, double variance_floor,
                 std::uint64_t seed);

  GaussianPrediction predict(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const;
  void predict_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                     Eigen::MatrixXd* mean, Eigen::MatrixXd* variance) const;

  // One NLL gradient step; returns the pre-step loss.
  double train_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                     const Eigen::MatrixXd& next_targets);

  Eigen::VectorXd targets_from_state(const Eigen::VectorXd& next_state) const;

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int target_dim() const { return static_cast<int>(targets_.size()); }
  const std::vector<int>& target_indices() const { return targets_; }
  double variance_floor() const { return floor_; }
  const Mlp& network() const { return net_; }
  Mlp& mutable_network() { return net_; }  // test hooks and hand-wired fixtures

  void save(std::ostream& out) const;
  static InferenceModel load(std::istream& in);

 private:
  Eigen::MatrixXd stack(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;

  int state_dim_ = 0;
  int action_dim_ = 0;
  std::vector<int> targets_;
  double floor_ = 1e-6;
  Mlp net_;
  Adam opt_;
};

// Gaussian negative log-likelihood of a batch under the model's prediction.
// Thin wrapper over the network-level loss so the quantity is also available
// without touching optimizer state.
double nll_loss(const GaussianPrediction& pred, const Eigen::VectorXd& target);

struct CaiEstimate {
  double score = 0.0;      // mean over target dims of the per-dim KL estimates
  double std_error = 0.0;  // Monte-Carlo standard error of the score
};

// Causal action influence of `action` at `state`: the per-dimension KL
// between the action-conditioned transition and the candidate-averaged
// mixture, estimated with `kl_samples` seeded draws per dimension.
CaiEstimate cai_score(const InferenceModel& model, const Eigen::VectorXd& state,
                      const Eigen::VectorXd& action,
                      const std::vector<Eigen::VectorXd>& candidates, int kl_samples, Rng& rng);

// Scores every candidate against the mixture formed by the whole candidate
// set. Equivalent to calling cai_score once per candidate with the shared
// set, but the candidate predictions are evaluated only once.
std::vector<CaiEstimate> cai_scores(const InferenceModel& model, const Eigen::VectorXd& state,
                                    const std::vector<Eigen::VectorXd>& candidates,
                                    int kl_samples, Rng& rng);

}  // namespace vrqoe
