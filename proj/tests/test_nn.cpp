#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "vrqoe/nn.hpp"
#include "vrqoe/rng.hpp"

using namespace vrqoe;

namespace {

// Scalar loss used by the finite-difference oracle: squared error against a
// fixed target batch.
double mse_loss(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd out = net.forward(x);
  return (out - y).squaredNorm() / static_cast<double>(y.size());
}

// Central finite differences over every weight and bias.
void check_gradients_against_fd(Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd out = net.forward_train(x);
  const Eigen::MatrixXd grad = 2.0 * (out - y) / static_cast<double>(y.size());
  net.backward(grad);

  const double h = 1e-6;
  for (int l = 0; l < net.layer_count(); ++l) {
    for (Eigen::Index i = 0; i < net.weight(l).size(); ++i) {
      double& w = net.weight(l).data()[i];
      const double saved = w;
      w = saved + h;
      const double up = mse_loss(net, x, y);
      w = saved - h;
      const double down = mse_loss(net, x, y);
      w = saved;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = net.weight_grad(l).data()[i];
      CHECK(analytic == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }
    for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) {
      double& b = net.bias(l).data()[i];
      const double saved = b;
      b = saved + h;
      const double up = mse_loss(net, x, y);
      b = saved - h;
      const double down = mse_loss(net, x, y);
      b = saved;
      const double fd = (up - down) / (2.0 * h);
      CHECK(net.bias_grad(l).data()[i] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }
  }
  net.zero_grad();
}

}  // namespace

TEST_CASE("forward trivials") {
  Rng rng(1);
  SUBCASE("zero parameters, identity output") {
    Mlp net({3, 4, 2}, Activation::Identity, rng);
    for (int l = 0; l < net.layer_count(); ++l) {
      net.weight(l).setZero();
      net.bias(l).setZero();
    }
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 1.7);
    const Eigen::VectorXd out = net.forward(x);
    CHECK(out.norm() == 0.0);
  }
  SUBCASE("zero parameters, sigmoid output") {
    Mlp net({3, 4, 2}, Activation::Sigmoid, rng);
    for (int l = 0; l < net.layer_count(); ++l) {
      net.weight(l).setZero();
      net.bias(l).setZero();
    }
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, -2.0);
    const Eigen::VectorXd out = net.forward(x);
    CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("single affine layer by hand") {
    Mlp net({1, 1}, Activation::Identity, rng);
    net.weight(0)(0, 0) = 2.0;
    net.bias(0)(0) = 1.0;
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 3.0);
    const Eigen::VectorXd out = net.forward(x);
    CHECK(out[0] == doctest::Approx(7.0).epsilon(1e-15));
  }
  SUBCASE("shape mismatch is rejected") {
    Mlp net({3, 2}, Activation::Identity, rng);
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
    CHECK_THROWS_AS(net.forward(x), std::invalid_argument);
  }
}

TEST_CASE("sigmoid outputs stay strictly inside the unit interval") {
  Rng rng(7);
  Mlp net({2, 8, 8, 3}, Activation::Sigmoid, rng);
  Rng draw(8);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd x(2);
    x << draw.uniform(-50, 50), draw.uniform(-50, 50);
    const Eigen::VectorXd out = net.forward(x);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      CHECK(out[i] > 0.0);
      CHECK(out[i] < 1.0);
    }
  }
}

TEST_CASE("backprop matches central finite differences over many seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Activation act = seed % 2 ? Activation::Sigmoid : Activation::Identity;
    Mlp net({4, 6, 5, 3}, act, rng);
    Eigen::MatrixXd x(4, 3);
    Eigen::MatrixXd y(3, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-1, 1);
    check_gradients_against_fd(net, x, y);
  }
}

TEST_CASE("gaussian nll gradients match finite differences") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    Rng rng(seed);
    Mlp net({3, 8, 4}, Activation::Identity, rng);  // two-dimensional gaussian head
    Eigen::MatrixXd x(3, 5);
    Eigen::MatrixXd target(2, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    for (Eigen::Index i = 0; i < target.size(); ++i) target.data()[i] = rng.uniform(-1, 1);
    const double floor = 1e-6;

    const Eigen::MatrixXd raw = net.forward_train(x);
    const GaussianNll nll = gaussian_nll(raw, target, floor);
    net.backward(nll.raw_grad);

    const auto loss_at = [&]() {
      return gaussian_nll(net.forward(x), target, floor).loss;
    };
    const double h = 1e-6;
    for (int l = 0; l < net.layer_count(); ++l) {
      for (Eigen::Index i = 0; i < net.weight(l).size(); ++i) {
        double& w = net.weight(l).data()[i];
        const double saved = w;
        w = saved + h;
        const double up = loss_at();
        w = saved - h;
        const double down = loss_at();
        w = saved;
        CHECK(net.weight_grad(l).data()[i] ==
              doctest::Approx((up - down) / (2 * h)).epsilon(1e-4).scale(1.0));
      }
    }
    net.zero_grad();
  }
}

TEST_CASE("nll closed-form points") {
  Eigen::MatrixXd raw(2, 1);
  // Choose the variance pre-activation so softplus(z) + floor = 1.
  const double floor = 1e-6;
  const double z = std::log(std::exp(1.0 - floor) - 1.0);
  raw << 0.7, z;
  Eigen::MatrixXd target(1, 1);
  target << 0.7;
  CHECK(gaussian_nll(raw, target, floor).loss == doctest::Approx(0.0).epsilon(1e-9));
  target << 1.7;  // one standard deviation away
  CHECK(gaussian_nll(raw, target, floor).loss == doctest::Approx(0.5).epsilon(1e-9));
  Eigen::MatrixXd bad(1, 1);
  bad << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(gaussian_nll(raw, bad, floor), std::invalid_argument);
}

TEST_CASE("variance head saturates at the floor") {
  Eigen::VectorXd raw(2);
  raw << 0.0, -1e6;  // pre-activation at the negative limit
  const GaussianPrediction pred = gaussian_split(raw, 1e-6);
  CHECK(pred.variance[0] == doctest::Approx(1e-6).epsilon(1e-12));
  raw << 0.0, 5.0;
  CHECK(gaussian_split(raw, 1e-6).variance[0] ==
        doctest::Approx(softplus(5.0) + 1e-6).epsilon(1e-12));
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  Rng rng(3);
  Mlp net({2, 4, 2}, Activation::Identity, rng);
  Adam opt(net, 1e-2);
  const Eigen::MatrixXd before = net.weight(0);
  net.forward_train(Eigen::MatrixXd::Zero(2, 1));
  net.backward(Eigen::MatrixXd::Zero(2, 1));
  opt.step(net);
  CHECK(net.weight(0).isApprox(before, 1e-15));
}

TEST_CASE("optimizer updates are deterministic") {
  const auto run = [] {
    Rng rng(11);
    Mlp net({3, 8, 2}, Activation::Identity, rng);
    Adam opt(net, 1e-3);
    Rng data(12);
    for (int step = 0; step < 20; ++step) {
      Eigen::MatrixXd x(3, 4), y(2, 4);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = data.uniform(-1, 1);
      for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = data.uniform(-1, 1);
      const Eigen::MatrixXd out = net.forward_train(x);
      net.backward(2.0 * (out - y) / static_cast<double>(y.size()));
      opt.step(net);
    }
    return net.weight(1);
  };
  CHECK(run().isApprox(run(), 0.0));
}

TEST_CASE("non-finite gradients raise with the layer index") {
  Rng rng(4);
  Mlp net({2, 3, 1}, Activation::Identity, rng);
  Adam opt(net, 1e-3);
  net.forward_train(Eigen::MatrixXd::Zero(2, 1));
  Eigen::MatrixXd bad(1, 1);
  bad << std::numeric_limits<double>::infinity();
  net.backward(bad);
  CHECK_THROWS_WITH_AS(opt.step(net), doctest::Contains("layer"), std::runtime_error);
}

TEST_CASE("soft update blends toward the online network") {
  Rng rng(5);
  Mlp online({2, 3, 1}, Activation::Identity, rng);
  Mlp target({2, 3, 1}, Activation::Identity, rng);

  SUBCASE("tau = 1 copies") {
    soft_update(target, online, 1.0);
    for (int l = 0; l < online.layer_count(); ++l)
      CHECK(target.weight(l).isApprox(online.weight(l), 0.0));
  }
  SUBCASE("tau = 0 freezes") {
    const Eigen::MatrixXd before = target.weight(0);
    soft_update(target, online, 0.0);
    CHECK(target.weight(0).isApprox(before, 0.0));
  }
  SUBCASE("tau = 0.01 from zero toward one") {
    for (int l = 0; l < online.layer_count(); ++l) {
      online.weight(l).setOnes();
      online.bias(l).setOnes();
      target.weight(l).setZero();
      target.bias(l).setZero();
    }
    soft_update(target, online, 0.01);
    CHECK(target.weight(0)(0, 0) == doctest::Approx(0.01).epsilon(1e-12));
  }
  SUBCASE("repeated updates contract toward the online parameters") {
    double previous = (target.weight(0) - online.weight(0)).norm();
    for (int i = 0; i < 50; ++i) {
      soft_update(target, online, 0.05);
      const double gap = (target.weight(0) - online.weight(0)).norm();
      CHECK(gap <= previous + 1e-15);
      previous = gap;
    }
  }
  SUBCASE("architecture mismatch throws") {
    Mlp other({2, 4, 1}, Activation::Identity, rng);
    CHECK_THROWS_AS(soft_update(other, online, 0.5), std::invalid_argument);
  }
}

TEST_CASE("network checkpoints are bit-faithful") {
  Rng rng(6);
  Mlp net({4, 16, 16, 3}, Activation::Sigmoid, rng);
  Adam opt(net, 2.5e-4);
  // Take a few steps so the optimizer state is non-trivial.
  Rng data(7);
  for (int step = 0; step < 5; ++step) {
    Eigen::MatrixXd x(4, 2), y(3, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = data.uniform(-1, 1);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = data.uniform(0.1, 0.9);
    net.backward(net.forward_train(x) - y);
    opt.step(net);
  }

  std::ostringstream saved;
  net.save(saved);
  opt.save(saved);
  std::istringstream in(saved.str());
  Mlp loaded = Mlp::load(in);
  Adam loaded_opt = Adam::load(in);

  std::ostringstream resaved;
  loaded.save(resaved);
  loaded_opt.save(resaved);
  CHECK(saved.str() == resaved.str());

  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  CHECK(loaded.forward(x).isApprox(net.forward(x), 0.0));
}
