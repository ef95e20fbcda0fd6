#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pbac/numerics.hpp"

using namespace pbac;

TEST_CASE("crelu definition") {
  Eigen::VectorXd x(2);
  x << 1.0, -2.0;
  const Eigen::VectorXd y = crelu(x);
  REQUIRE(y.size() == 4);
  CHECK(y(0) == 1.0);
  CHECK(y(1) == 0.0);
  CHECK(y(2) == 0.0);
  CHECK(y(3) == 2.0);

  CHECK(crelu(Eigen::VectorXd::Zero(2)).isZero());

  Eigen::VectorXd single(1);
  single << 3.5;
  const Eigen::VectorXd ys = crelu(single);
  CHECK(ys(0) == 3.5);
  CHECK(ys(1) == 0.0);
}

TEST_CASE("crelu split reconstructs the input and is nonnegative") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd x(5);
  for (int i = 0; i < 5; ++i) x(i) = gauss(rng);
  const Eigen::VectorXd y = crelu(x);
  CHECK((y.array() >= 0.0).all());
  CHECK((y.head(5) - y.tail(5) - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("layer_norm hand values") {
  const Eigen::VectorXd ones3 = Eigen::VectorXd::Ones(3);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(3, 4.2);
  CHECK(layer_norm(c, ones3, Eigen::VectorXd::Zero(3)).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd x(2);
  x << 1.0, -1.0;
  const Eigen::VectorXd ones2 = Eigen::VectorXd::Ones(2);
  const Eigen::VectorXd y = layer_norm(x, ones2, Eigen::VectorXd::Zero(2), 0.0);
  CHECK(y(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(y(1) == doctest::Approx(-1.0).epsilon(1e-12));

  const Eigen::VectorXd z =
      layer_norm(x, Eigen::VectorXd::Constant(2, 2.0), ones2, 0.0);
  CHECK(z(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(z(1) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("layer_norm output is standardized") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd x(7);
  for (int i = 0; i < 7; ++i) x(i) = gauss(rng);
  const Eigen::VectorXd y =
      layer_norm(x, Eigen::VectorXd::Ones(7), Eigen::VectorXd::Zero(7), 0.0);
  CHECK(std::abs(y.mean()) < 1e-10);
  CHECK(std::abs(y.squaredNorm() / 7.0 - 1.0) < 1e-10);  // population variance
}

namespace {

MlpParams single_linear(double w, double b, Activation act) {
  MlpParams p;
  p.activation = act;
  DenseLayer l;
  l.weight = Eigen::MatrixXd::Constant(1, 1, w);
  l.bias = Eigen::VectorXd::Constant(1, b);
  l.ln_gain = Eigen::VectorXd::Ones(1);
  l.ln_shift = Eigen::VectorXd::Zero(1);
  p.layers.push_back(l);
  return p;
}

}  // namespace

TEST_CASE("mlp_forward affine and constant cases") {
  const MlpParams lin = single_linear(2.0, 1.0, Activation::Identity);
  const Eigen::MatrixXd out = mlp_forward(lin, Eigen::MatrixXd::Constant(1, 1, 3.0));
  CHECK(out(0, 0) == doctest::Approx(7.0).epsilon(1e-15));

  const MlpParams constant = single_linear(0.0, -1.5, Activation::Identity);
  for (double v : {-3.0, 0.0, 8.0}) {
    const Eigen::MatrixXd y = mlp_forward(constant, Eigen::MatrixXd::Constant(1, 1, v));
    CHECK(y(0, 0) == -1.5);
  }
}

TEST_CASE("mlp_forward matches a straight-line re-implementation") {
  // Two layers, all weights 0.1, bias 0, input of ones.
  MlpParams p;
  p.activation = Activation::CReLU;
  DenseLayer l1;
  l1.weight = Eigen::MatrixXd::Constant(3, 2, 0.1);
  l1.bias = Eigen::VectorXd::Zero(3);
  l1.ln_gain = Eigen::VectorXd::Ones(3);
  l1.ln_shift = Eigen::VectorXd::Zero(3);
  DenseLayer l2;
  l2.weight = Eigen::MatrixXd::Constant(1, 6, 0.1);
  l2.bias = Eigen::VectorXd::Zero(1);
  l2.ln_gain = Eigen::VectorXd::Ones(1);
  l2.ln_shift = Eigen::VectorXd::Zero(1);
  p.layers = {l1, l2};

  const Eigen::MatrixXd input = Eigen::MatrixXd::Ones(1, 2);
  const Eigen::MatrixXd got = mlp_forward(p, input);

  const Eigen::VectorXd z = l1.weight * input.transpose() + l1.bias;
  const Eigen::VectorXd h = crelu(layer_norm(z, l1.ln_gain, l1.ln_shift));
  const double want = (l2.weight * h + l2.bias)(0);
  CHECK(got(0, 0) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("mlp_backward bias gradient of a linear layer is the output gradient") {
  const MlpParams lin = single_linear(2.0, 1.0, Activation::Identity);
  MlpCache cache;
  mlp_forward(lin, Eigen::MatrixXd::Constant(1, 1, 3.0), &cache);
  MlpGrads grads = zero_grads_like(lin);
  mlp_backward(lin, cache, Eigen::MatrixXd::Constant(1, 1, 0.7), grads);
  CHECK(grads.layers[0].bias(0) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("mlp_backward gradient of a constant network is zero") {
  const MlpParams constant = single_linear(0.0, 5.0, Activation::Identity);
  MlpCache cache;
  mlp_forward(constant, Eigen::MatrixXd::Constant(1, 1, 2.0), &cache);
  MlpGrads grads = zero_grads_like(constant);
  const Eigen::MatrixXd dx =
      mlp_backward(constant, cache, Eigen::MatrixXd::Ones(1, 1), grads);
  CHECK(dx(0, 0) == 0.0);
  CHECK(grads.layers[0].weight(0, 0) == doctest::Approx(2.0));  // d(wx+b)/dw = x
}

TEST_CASE("mlp gradients match central finite differences") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> width(2, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int in = width(rng), hid = width(rng), out = width(rng);
    const bool deep = trial % 2 == 0;
    const std::vector<int> dims =
        deep ? std::vector<int>{in, hid, hid, out} : std::vector<int>{in, hid, out};
    MlpParams p = make_mlp(dims, Activation::CReLU, rng);
    Eigen::MatrixXd input(2, in);
    for (int i = 0; i < input.size(); ++i) input(i / in, i % in) = gauss(rng);
    Eigen::MatrixXd probe(2, out);
    for (int i = 0; i < probe.size(); ++i) probe(i / out, i % out) = gauss(rng);

    auto loss = [&] { return (mlp_forward(p, input).array() * probe.array()).sum(); };
    MlpCache cache;
    mlp_forward(p, input, &cache);
    MlpGrads grads = zero_grads_like(p);
    mlp_backward(p, cache, probe, grads);

    constexpr double h = 1e-5;
    auto check_block = [&](double* param, const double* grad, long count) {
      for (long i = 0; i < count; ++i) {
        const double saved = param[i];
        param[i] = saved + h;
        const double up = loss();
        param[i] = saved - h;
        const double down = loss();
        param[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double rel =
            std::abs(grad[i] - fd) / std::max({1.0, std::abs(fd), std::abs(grad[i])});
        worst = std::max(worst, rel);
      }
    };
    for (size_t li = 0; li < p.layers.size(); ++li) {
      auto& pl = p.layers[li];
      const auto& gl = grads.layers[li];
      check_block(pl.weight.data(), gl.weight.data(), pl.weight.size());
      check_block(pl.bias.data(), gl.bias.data(), pl.bias.size());
      check_block(pl.ln_gain.data(), gl.ln_gain.data(), pl.ln_gain.size());
      check_block(pl.ln_shift.data(), gl.ln_shift.data(), pl.ln_shift.size());
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("adam first step magnitude and invariants") {
  MlpParams p = single_linear(1.0, 0.0, Activation::Identity);
  AdamState state = make_adam(p, 1e-3);
  MlpGrads g = zero_grads_like(p);
  g.layers[0].weight(0, 0) = 0.1;
  adam_step(p, g, state);
  CHECK(p.layers[0].weight(0, 0) - 1.0 == doctest::Approx(-9.99999e-4).epsilon(1e-5));
  CHECK(state.step_count == 1);
  const double delta1 = p.layers[0].weight(0, 0) - 1.0;

  // Second identical gradient: bias correction keeps the magnitude stable.
  const double before = p.layers[0].weight(0, 0);
  adam_step(p, g, state);
  const double delta2 = p.layers[0].weight(0, 0) - before;
  CHECK(std::abs(std::abs(delta2) - std::abs(delta1)) < 1e-6);
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
  MlpParams p = single_linear(1.0, 0.5, Activation::Identity);
  AdamState state = make_adam(p, 1e-3);
  const MlpGrads g = zero_grads_like(p);
  adam_step(p, g, state);
  CHECK(p.layers[0].weight(0, 0) == 1.0);
  CHECK(p.layers[0].bias(0) == 0.5);
}

TEST_CASE("adam rejects non-finite gradients") {
  MlpParams p = single_linear(1.0, 0.5, Activation::Identity);
  AdamState state = make_adam(p, 1e-3);
  MlpGrads g = zero_grads_like(p);
  g.layers[0].weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(p, g, state), NumericError);
  CHECK(p.layers[0].weight(0, 0) == 1.0);
}

TEST_CASE("polyak update endpoints and table value") {
  MlpParams target = single_linear(0.0, 0.0, Activation::Identity);
  const MlpParams online = single_linear(2.0, 2.0, Activation::Identity);

  MlpParams t0 = target;
  polyak_update(t0, online, 0.0);
  CHECK(t0.layers[0].weight(0, 0) == 0.0);

  MlpParams t1 = target;
  polyak_update(t1, online, 1.0);
  CHECK(t1.layers[0].weight(0, 0) == 2.0);

  polyak_update(target, online, 0.005);
  CHECK(target.layers[0].weight(0, 0) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("polyak convergence is geometric") {
  MlpParams target = single_linear(0.0, 0.0, Activation::Identity);
  const MlpParams online = single_linear(1.0, 1.0, Activation::Identity);
  const double tau = 0.1;
  for (int t = 1; t <= 50; ++t) {
    polyak_update(target, online, tau);
    const double expected = 1.0 - std::pow(1.0 - tau, t);
    CHECK(std::abs(target.layers[0].weight(0, 0) - expected) < 1e-12);
  }
}

TEST_CASE("make_mlp respects crelu width doubling and init scale") {
  std::mt19937_64 rng(4);
  const MlpParams p = make_mlp({3, 4, 2}, Activation::CReLU, rng);
  REQUIRE(p.layers.size() == 2);
  CHECK(p.layers[0].weight.rows() == 4);
  CHECK(p.layers[0].weight.cols() == 3);
  CHECK(p.layers[1].weight.cols() == 8);  // crelu doubles the hidden width
  CHECK(p.layers[1].weight.rows() == 2);
  CHECK(p.layers[0].weight.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 3.0));
  CHECK((p.layers[0].ln_gain.array() == 1.0).all());
  CHECK(p.layers[0].ln_shift.isZero());
}
