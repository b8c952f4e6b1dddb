#include "vrqoe/causal.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace vrqoe {

namespace {

// KL estimate between one Gaussian component and a Gaussian mixture for a
// single dimension block. mix_mean/mix_var are dim x N; the target component
// is given per dimension. Draw order is dimension-major so the estimate is
// reproducible from the rng seed.
CaiEstimate mixture_kl_estimate(const Eigen::VectorXd& target_mean,
                                const Eigen::VectorXd& target_var,
                                const Eigen::MatrixXd& mix_mean, const Eigen::MatrixXd& mix_var,
                                int kl_samples, Rng& rng) {
  const Eigen::Index dims = target_mean.size();
  const Eigen::Index n = mix_mean.cols();
  const double log_n = std::log(static_cast<double>(n));

  double score = 0.0;
  double variance_sum = 0.0;
  std::vector<double> log_terms(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < dims; ++j) {
    const double mu = target_mean[j];
    const double sigma = std::sqrt(target_var[j]);
    double mean_acc = 0.0;
    double sq_acc = 0.0;
    for (int l = 0; l < kl_samples; ++l) {
      const double x = mu + sigma * rng.gaussian();
      const double log_p = gaussian_log_pdf(x, mu, target_var[j]);
      double max_term = -std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < n; ++c) {
        log_terms[static_cast<std::size_t>(c)] = gaussian_log_pdf(x, mix_mean(j, c), mix_var(j, c));
        max_term = std::max(max_term, log_terms[static_cast<std::size_t>(c)]);
      }
      double sum = 0.0;
      for (Eigen::Index c = 0; c < n; ++c)
        sum += std::exp(log_terms[static_cast<std::size_t>(c)] - max_term);
      const double log_mix = max_term + std::log(sum) - log_n;
      const double value = log_p - log_mix;
      mean_acc += value;
      sq_acc += value * value;
    }
    const double mean = mean_acc / kl_samples;
    score += mean;
    if (kl_samples > 1) {
      const double sample_var =
          std::max(0.0, (sq_acc - kl_samples * mean * mean) / (kl_samples - 1));
      variance_sum += sample_var / kl_samples;
    }
  }

  CaiEstimate estimate;
  estimate.score = score / static_cast<double>(dims);
  estimate.std_error = std::sqrt(variance_sum) / static_cast<double>(dims);
  return estimate;
}

}  // namespace

double kl_gaussian(double mean_p, double var_p, double mean_q, double var_q) {
  if (!(var_p > 0.0) || !(var_q > 0.0))
    throw std::invalid_argument("kl_gaussian: variances must be positive");
  const double diff = mean_p - mean_q;
  return 0.5 * std::log(var_q / var_p) + (var_p + diff * diff) / (2.0 * var_q) - 0.5;
}

InferenceModel::InferenceModel(int state_dim, int action_dim, std::vector<int> target_indices,
                               const std::vector<int>& hidden, double learning_rate,
                               double variance_floor, std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      targets_(std::move(target_indices)),
      floor_(variance_floor) {
  if (targets_.empty()) throw std::invalid_argument("InferenceModel: no target dimensions");
  for (int idx : targets_)
    if (idx < 0 || idx >= state_dim_)
      throw std::invalid_argument("InferenceModel: target index out of range");
  std::vector<int> widths;
  widths.push_back(state_dim_ + action_dim_);
  for (int h : hidden) widths.push_back(h);
  widths.push_back(2 * target_dim());
  Rng init(seed);
  net_ = Mlp(widths, Activation::Identity, init);
  opt_ = Adam(net_, learning_rate);
}

Eigen::MatrixXd InferenceModel::stack(const Eigen::MatrixXd& states,
                                      const Eigen::MatrixXd& actions) const {
  if (states.rows() != state_dim_ || actions.rows() != action_dim_ ||
      states.cols() != actions.cols())
    throw std::invalid_argument("InferenceModel: state/action shape mismatch");
  Eigen::MatrixXd input(state_dim_ + action_dim_, states.cols());
  input.topRows(state_dim_) = states;
  input.bottomRows(action_dim_) = actions;
  return input;
}

GaussianPrediction InferenceModel::predict(const Eigen::VectorXd& state,
                                           const Eigen::VectorXd& action) const {
  if (state.size() != state_dim_ || action.size() != action_dim_)
    throw std::invalid_argument("InferenceModel::predict: state/action shape mismatch");
  Eigen::VectorXd input(state_dim_ + action_dim_);
  input << state, action;
  return gaussian_split(net_.forward(input), floor_);
}

void InferenceModel::predict_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                   Eigen::MatrixXd* mean, Eigen::MatrixXd* variance) const {
  const Eigen::MatrixXd raw = net_.forward(stack(states, actions));
  gaussian_split(raw, floor_, mean, variance);
}

double InferenceModel::train_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                   const Eigen::MatrixXd& next_targets) {
  if (states.cols() == 0) throw std::invalid_argument("InferenceModel::train_batch: empty batch");
  const Eigen::MatrixXd raw = net_.forward_train(stack(states, actions));
  GaussianNll nll = gaussian_nll(raw, next_targets, floor_);
  net_.backward(nll.raw_grad);
  opt_.step(net_);
  return nll.loss;
}

Eigen::VectorXd InferenceModel::targets_from_state(const Eigen::VectorXd& next_state) const {
  Eigen::VectorXd out(target_dim());
  for (int j = 0; j < target_dim(); ++j)
    out[j] = next_state[targets_[static_cast<std::size_t>(j)]];
  return out;
}

void InferenceModel::save(std::ostream& out) const {
  const std::int64_t sd = state_dim_, ad = action_dim_, nt = static_cast<std::int64_t>(targets_.size());
  out.write(reinterpret_cast<const char*>(&sd), sizeof(sd));
  out.write(reinterpret_cast<const char*>(&ad), sizeof(ad));
  out.write(reinterpret_cast<const char*>(&floor_), sizeof(floor_));
  out.write(reinterpret_cast<const char*>(&nt), sizeof(nt));
  for (int idx : targets_) {
    const std::int64_t v = idx;
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  net_.save(out);
  opt_.save(out);
}

InferenceModel InferenceModel::load(std::istream& in) {
  InferenceModel model;
  std::int64_t sd = 0, ad = 0, nt = 0;
  in.read(reinterpret_cast<char*>(&sd), sizeof(sd));
  in.read(reinterpret_cast<char*>(&ad), sizeof(ad));
  in.read(reinterpret_cast<char*>(&model.floor_), sizeof(model.floor_));
  in.read(reinterpret_cast<char*>(&nt), sizeof(nt));
  if (!in || nt <= 0) throw std::runtime_error("inference checkpoint truncated");
  model.state_dim_ = static_cast<int>(sd);
  model.action_dim_ = static_cast<int>(ad);
  model.targets_.resize(static_cast<std::size_t>(nt));
  for (auto& idx : model.targets_) {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    idx = static_cast<int>(v);
  }
  model.net_ = Mlp::load(in);
  model.opt_ = Adam::load(in);
  return model;
}

double nll_loss(const GaussianPrediction& pred, const Eigen::VectorXd& target) {
  if (pred.mean.size() != target.size())
    throw std::invalid_argument("nll_loss: shape mismatch");
  if (!target.allFinite()) throw std::invalid_argument("nll_loss: non-finite target");
  double loss = 0.0;
  for (Eigen::Index j = 0; j < target.size(); ++j) {
    const double err = target[j] - pred.mean[j];
    loss += err * err / (2.0 * pred.variance[j]) + 0.5 * std::log(pred.variance[j]);
  }
  return loss / static_cast<double>(target.size());
}

CaiEstimate cai_score(const InferenceModel& model, const Eigen::VectorXd& state,
                      const Eigen::VectorXd& action,
                      const std::vector<Eigen::VectorXd>& candidates, int kl_samples, Rng& rng) {
  if (candidates.empty()) throw std::invalid_argument("cai_score: no candidate actions");
  if (kl_samples < 1) throw std::invalid_argument("cai_score: need at least one sample");

  const GaussianPrediction p = model.predict(state, action);
  Eigen::MatrixXd states(state.size(), candidates.size());
  Eigen::MatrixXd actions(action.size(), candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    states.col(static_cast<Eigen::Index>(i)) = state;
    actions.col(static_cast<Eigen::Index>(i)) = candidates[i];
  }
  Eigen::MatrixXd mix_mean, mix_var;
  model.predict_batch(states, actions, &mix_mean, &mix_var);
  return mixture_kl_estimate(p.mean, p.variance, mix_mean, mix_var, kl_samples, rng);
}

std::vector<CaiEstimate> cai_scores(const InferenceModel& model, const Eigen::VectorXd& state,
                                    const std::vector<Eigen::VectorXd>& candidates,
                                    int kl_samples, Rng& rng) {
  if (candidates.empty()) throw std::invalid_argument("cai_scores: no candidate actions");
  if (kl_samples < 1) throw std::invalid_argument("cai_scores: need at least one sample");

  Eigen::MatrixXd states(state.size(), candidates.size());
  Eigen::MatrixXd actions(candidates.front().size(), candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    states.col(static_cast<Eigen::Index>(i)) = state;
    actions.col(static_cast<Eigen::Index>(i)) = candidates[i];
  }
  Eigen::MatrixXd mix_mean, mix_var;
  model.predict_batch(states, actions, &mix_mean, &mix_var);

  std::vector<CaiEstimate> estimates;
  estimates.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Eigen::Index c = static_cast<Eigen::Index>(i);
    estimates.push_back(mixture_kl_estimate(mix_mean.col(c), mix_var.col(c), mix_mean, mix_var,
                                            kl_samples, rng));
  }
  return estimates;
}

}  // namespace vrqoe
