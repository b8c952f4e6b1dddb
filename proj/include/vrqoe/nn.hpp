#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

#include "vrqoe/rng.hpp"

namespace vrqoe {

enum class Activation { Identity, Sigmoid };

// Dense multilayer perceptron with rectifier hidden units. Samples are matrix
// columns. forward_train caches activations for one subsequent backward pass;
// backward accumulates parameter gradients and returns the input gradient so
// networks can be chained (critic into actor).
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> widths, Activation output_activation, Rng& init_rng);

  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int layer_count() const { return static_cast<int>(w_.size()); }
  Activation output_activation() const { return out_act_; }
  const std::vector<int>& widths() const { return widths_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::MatrixXd forward_train(const Eigen::MatrixXd& input);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& output_grad);
  void zero_grad();

  Eigen::MatrixXd& weight(int layer) { return w_[static_cast<std::size_t>(layer)]; }
  const Eigen::MatrixXd& weight(int layer) const { return w_[static_cast<std::size_t>(layer)]; }
  Eigen::VectorXd& bias(int layer) { return b_[static_cast<std::size_t>(layer)]; }
  const Eigen::VectorXd& bias(int layer) const { return b_[static_cast<std::size_t>(layer)]; }
  const Eigen::MatrixXd& weight_grad(int layer) const {
    return gw_[static_cast<std::size_t>(layer)];
  }
  const Eigen::VectorXd& bias_grad(int layer) const {
    return gb_[static_cast<std::size_t>(layer)];
  }

  std::size_t parameter_count() const;

  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);

 private:
  std::vector<int> widths_;
  Activation out_act_ = Activation::Identity;
  std::vector<Eigen::MatrixXd> w_, gw_;
  std::vector<Eigen::VectorXd> b_, gb_;
  std::vector<Eigen::MatrixXd> acts_;  // acts_[0] = input, then post-activation per layer
  std::vector<Eigen::MatrixXd> pre_;   // pre-activations per layer
};

// Adaptive-moment optimizer bound to one network's shapes. step() applies the
// accumulated gradients and clears them.
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, double learning_rate);

  void step(Mlp& net);
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  long steps() const { return t_; }

  void save(std::ostream& out) const;
  static Adam load(std::istream& in);

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> mw_, vw_;
  std::vector<Eigen::VectorXd> mb_, vb_;
};

// theta_target <- tau * theta + (1 - tau) * theta_target, elementwise.
void soft_update(Mlp& target, const Mlp& online, double tau);

struct GaussianPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

// Splits a 2m-dim raw head into mean (top half) and variance (bottom half,
// softplus plus floor so the density stays proper).
GaussianPrediction gaussian_split(const Eigen::VectorXd& raw, double variance_floor);
void gaussian_split(const Eigen::MatrixXd& raw, double variance_floor, Eigen::MatrixXd* mean,
                    Eigen::MatrixXd* variance);

// Mean over batch and dimensions of (t - mu)^2 / (2 sigma^2) + log(sigma^2)/2,
// with the gradient taken back through the softplus variance map.
struct GaussianNll {
  double loss = 0.0;
  Eigen::MatrixXd raw_grad;  // d loss / d raw head outputs
};
GaussianNll gaussian_nll(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& targets,
                         double variance_floor);

double softplus(double x);
double gaussian_log_pdf(double x, double mean, double variance);

}  // namespace vrqoe
