#include "vrqoe/nn.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace vrqoe {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454836;

void write_raw(std::ostream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void read_raw(std::istream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("network checkpoint truncated");
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  const std::int64_t rows = m.rows(), cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  write_raw(out, m.data(), static_cast<std::size_t>(m.size()));
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  std::int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || rows < 0 || cols < 0) throw std::runtime_error("network checkpoint truncated");
  Eigen::MatrixXd m(rows, cols);
  read_raw(in, m.data(), static_cast<std::size_t>(m.size()));
  return m;
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  const std::int64_t n = v.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  write_raw(out, v.data(), static_cast<std::size_t>(v.size()));
}

Eigen::VectorXd read_vector(std::istream& in) {
  std::int64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n < 0) throw std::runtime_error("network checkpoint truncated");
  Eigen::VectorXd v(n);
  read_raw(in, v.data(), static_cast<std::size_t>(v.size()));
  return v;
}
}  // namespace

Mlp::Mlp(std::vector<int> widths, Activation output_activation, Rng& init_rng)
    : widths_(std::move(widths)), out_act_(output_activation) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output");
  for (int w : widths_)
    if (w <= 0) throw std::invalid_argument("Mlp: layer widths must be positive");
  const std::size_t layers = widths_.size() - 1;
  w_.resize(layers);
  b_.resize(layers);
  gw_.resize(layers);
  gb_.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const int fan_in = widths_[l];
    const int fan_out = widths_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    w_[l].resize(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w_[l].size(); ++i)
      w_[l].data()[i] = init_rng.uniform(-bound, bound);
    b_[l].resize(fan_out);
    for (Eigen::Index i = 0; i < b_[l].size(); ++i)
      b_[l].data()[i] = init_rng.uniform(-bound, bound);
    gw_[l] = Eigen::MatrixXd::Zero(fan_out, fan_in);
    gb_[l] = Eigen::VectorXd::Zero(fan_out);
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  if (input.rows() != input_dim())
    throw std::invalid_argument("Mlp::forward: input has " + std::to_string(input.rows()) +
                                " rows, expected " + std::to_string(input_dim()));
  Eigen::MatrixXd x = input;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::MatrixXd z = (w_[l] * x).colwise() + b_[l];
    if (l + 1 < w_.size()) {
      x = z.cwiseMax(0.0);
    } else if (out_act_ == Activation::Sigmoid) {
      x = (1.0 + (-z.array()).exp()).inverse().matrix();
    } else {
      x = std::move(z);
    }
  }
  return x;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  return forward(Eigen::MatrixXd(input)).col(0);
}

Eigen::MatrixXd Mlp::forward_train(const Eigen::MatrixXd& input) {
  if (input.rows() != input_dim())
    throw std::invalid_argument("Mlp::forward_train: input width mismatch");
  const std::size_t layers = w_.size();
  acts_.assign(layers + 1, Eigen::MatrixXd());
  pre_.assign(layers, Eigen::MatrixXd());
  acts_[0] = input;
  for (std::size_t l = 0; l < layers; ++l) {
    pre_[l] = (w_[l] * acts_[l]).colwise() + b_[l];
    if (l + 1 < layers) {
      acts_[l + 1] = pre_[l].cwiseMax(0.0);
    } else if (out_act_ == Activation::Sigmoid) {
      acts_[l + 1] = (1.0 + (-pre_[l].array()).exp()).inverse().matrix();
    } else {
      acts_[l + 1] = pre_[l];
    }
  }
  return acts_[layers];
}

Eigen::MatrixXd Mlp::backward(const Eigen::MatrixXd& output_grad) {
  if (acts_.empty()) throw std::logic_error("Mlp::backward: no cached forward pass");
  const std::size_t layers = w_.size();
  Eigen::MatrixXd delta;  // gradient w.r.t. the pre-activation of the current layer
  if (out_act_ == Activation::Sigmoid) {
    const Eigen::ArrayXXd y = acts_[layers].array();
    delta = (output_grad.array() * y * (1.0 - y)).matrix();
  } else {
    delta = output_grad;
  }
  for (std::size_t l = layers; l-- > 0;) {
    gw_[l].noalias() += delta * acts_[l].transpose();
    gb_[l] += delta.rowwise().sum();
    if (l == 0) return w_[0].transpose() * delta;
    Eigen::MatrixXd upstream = w_[l].transpose() * delta;
    delta = (upstream.array() * (pre_[l - 1].array() > 0.0).cast<double>()).matrix();
  }
  return {};
}

void Mlp::zero_grad() {
  for (auto& g : gw_) g.setZero();
  for (auto& g : gb_) g.setZero();
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < w_.size(); ++l)
    n += static_cast<std::size_t>(w_[l].size() + b_[l].size());
  return n;
}

void Mlp::save(std::ostream& out) const {
  const std::int64_t n_widths = static_cast<std::int64_t>(widths_.size());
  out.write(reinterpret_cast<const char*>(&n_widths), sizeof(n_widths));
  for (int w : widths_) {
    const std::int64_t v = w;
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  const std::uint8_t act = out_act_ == Activation::Sigmoid ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&act), sizeof(act));
  for (std::size_t l = 0; l < w_.size(); ++l) {
    write_matrix(out, w_[l]);
    write_vector(out, b_[l]);
  }
}

Mlp Mlp::load(std::istream& in) {
  std::int64_t n_widths = 0;
  in.read(reinterpret_cast<char*>(&n_widths), sizeof(n_widths));
  if (!in || n_widths < 2) throw std::runtime_error("network checkpoint truncated");
  Mlp net;
  net.widths_.resize(static_cast<std::size_t>(n_widths));
  for (auto& w : net.widths_) {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    w = static_cast<int>(v);
  }
  std::uint8_t act = 0;
  in.read(reinterpret_cast<char*>(&act), sizeof(act));
  if (!in) throw std::runtime_error("network checkpoint truncated");
  net.out_act_ = act ? Activation::Sigmoid : Activation::Identity;
  const std::size_t layers = net.widths_.size() - 1;
  net.w_.resize(layers);
  net.b_.resize(layers);
  net.gw_.resize(layers);
  net.gb_.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    net.w_[l] = read_matrix(in);
    net.b_[l] = read_vector(in);
    net.gw_[l] = Eigen::MatrixXd::Zero(net.w_[l].rows(), net.w_[l].cols());
    net.gb_[l] = Eigen::VectorXd::Zero(net.b_[l].size());
  }
  return net;
}

Adam::Adam(const Mlp& net, double learning_rate) : lr_(learning_rate) {
  const int layers = net.layer_count();
  mw_.resize(static_cast<std::size_t>(layers));
  vw_.resize(static_cast<std::size_t>(layers));
  mb_.resize(static_cast<std::size_t>(layers));
  vb_.resize(static_cast<std::size_t>(layers));
  for (int l = 0; l < layers; ++l) {
    const std::size_t i = static_cast<std::size_t>(l);
    mw_[i] = Eigen::MatrixXd::Zero(net.weight(l).rows(), net.weight(l).cols());
    vw_[i] = mw_[i];
    mb_[i] = Eigen::VectorXd::Zero(net.bias(l).size());
    vb_[i] = mb_[i];
  }
}

void Adam::step(Mlp& net) {
  if (static_cast<int>(mw_.size()) != net.layer_count())
    throw std::invalid_argument("Adam::step: optimizer bound to a different architecture");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (int l = 0; l < net.layer_count(); ++l) {
    const std::size_t i = static_cast<std::size_t>(l);
    const Eigen::MatrixXd& gw = net.weight_grad(l);
    const Eigen::VectorXd& gb = net.bias_grad(l);
    if (!gw.allFinite() || !gb.allFinite())
      throw std::runtime_error("non-finite gradient in layer " + std::to_string(l));
    mw_[i] = beta1_ * mw_[i] + (1.0 - beta1_) * gw;
    vw_[i] = (beta2_ * vw_[i].array() + (1.0 - beta2_) * gw.array().square()).matrix();
    net.weight(l).array() -=
        lr_ * (mw_[i].array() / bc1) / ((vw_[i].array() / bc2).sqrt() + eps_);
    mb_[i] = beta1_ * mb_[i] + (1.0 - beta1_) * gb;
    vb_[i] = (beta2_ * vb_[i].array() + (1.0 - beta2_) * gb.array().square()).matrix();
    net.bias(l).array() -= lr_ * (mb_[i].array() / bc1) / ((vb_[i].array() / bc2).sqrt() + eps_);
  }
  net.zero_grad();
}

void Adam::save(std::ostream& out) const {
  out.write(reinterpret_cast<const char*>(&lr_), sizeof(lr_));
  out.write(reinterpret_cast<const char*>(&t_), sizeof(t_));
  const std::int64_t layers = static_cast<std::int64_t>(mw_.size());
  out.write(reinterpret_cast<const char*>(&layers), sizeof(layers));
  for (std::size_t l = 0; l < mw_.size(); ++l) {
    write_matrix(out, mw_[l]);
    write_matrix(out, vw_[l]);
    write_vector(out, mb_[l]);
    write_vector(out, vb_[l]);
  }
}

Adam Adam::load(std::istream& in) {
  Adam opt;
  in.read(reinterpret_cast<char*>(&opt.lr_), sizeof(opt.lr_));
  in.read(reinterpret_cast<char*>(&opt.t_), sizeof(opt.t_));
  std::int64_t layers = 0;
  in.read(reinterpret_cast<char*>(&layers), sizeof(layers));
  if (!in || layers < 0) throw std::runtime_error("optimizer checkpoint truncated");
  opt.mw_.resize(static_cast<std::size_t>(layers));
  opt.vw_.resize(static_cast<std::size_t>(layers));
  opt.mb_.resize(static_cast<std::size_t>(layers));
  opt.vb_.resize(static_cast<std::size_t>(layers));
  for (std::size_t l = 0; l < opt.mw_.size(); ++l) {
    opt.mw_[l] = read_matrix(in);
    opt.vw_[l] = read_matrix(in);
    opt.mb_[l] = read_vector(in);
    opt.vb_[l] = read_vector(in);
  }
  return opt;
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (target.widths() != online.widths())
    throw std::invalid_argument("soft_update: architecture mismatch");
  for (int l = 0; l < target.layer_count(); ++l) {
    target.weight(l) = tau * online.weight(l) + (1.0 - tau) * target.weight(l);
    target.bias(l) = tau * online.bias(l) + (1.0 - tau) * target.bias(l);
  }
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

GaussianPrediction gaussian_split(const Eigen::VectorXd& raw, double variance_floor) {
  if (raw.size() % 2 != 0)
    throw std::invalid_argument("gaussian_split: raw head must have even dimension");
  const Eigen::Index m = raw.size() / 2;
  GaussianPrediction pred;
  pred.mean = raw.head(m);
  pred.variance.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) pred.variance[j] = softplus(raw[m + j]) + variance_floor;
  return pred;
}

void gaussian_split(const Eigen::MatrixXd& raw, double variance_floor, Eigen::MatrixXd* mean,
                    Eigen::MatrixXd* variance) {
  if (raw.rows() % 2 != 0)
    throw std::invalid_argument("gaussian_split: raw head must have even dimension");
  const Eigen::Index m = raw.rows() / 2;
  *mean = raw.topRows(m);
  variance->resize(m, raw.cols());
  for (Eigen::Index c = 0; c < raw.cols(); ++c)
    for (Eigen::Index j = 0; j < m; ++j)
      (*variance)(j, c) = softplus(raw(m + j, c)) + variance_floor;
}

GaussianNll gaussian_nll(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& targets,
                         double variance_floor) {
  if (!targets.allFinite()) throw std::invalid_argument("gaussian_nll: non-finite target");
  const Eigen::Index m = raw.rows() / 2;
  if (targets.rows() != m || targets.cols() != raw.cols())
    throw std::invalid_argument("gaussian_nll: target shape mismatch");

  GaussianNll result;
  result.raw_grad = Eigen::MatrixXd::Zero(raw.rows(), raw.cols());
  const double scale = 1.0 / static_cast<double>(m * raw.cols());
  double loss = 0.0;
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double mu = raw(j, c);
      const double z = raw(m + j, c);
      const double var = softplus(z) + variance_floor;
      const double err = targets(j, c) - mu;
      loss += err * err / (2.0 * var) + 0.5 * std::log(var);
      const double dmu = -err / var;
      const double dvar = -err * err / (2.0 * var * var) + 0.5 / var;
      const double sig = 1.0 / (1.0 + std::exp(-z));  // d softplus / dz
      result.raw_grad(j, c) = scale * dmu;
      result.raw_grad(m + j, c) = scale * dvar * sig;
    }
  }
  result.loss = loss * scale;
  return result;
}

double gaussian_log_pdf(double x, double mean, double variance) {
  const double err = x - mean;
  return -0.5 * (kLogTwoPi + std::log(variance) + err * err / variance);
}

}  // namespace vrqoe
