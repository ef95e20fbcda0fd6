#pragma once

#include <Eigen/Dense>
#include <random>
#include <stdexcept>
#include <vector>

namespace pbac {

// Signals a non-finite value encountered during training math.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Activation { CReLU, Identity };

// One dense layer with its layer-norm affine parameters.
struct DenseLayer {
  Eigen::MatrixXd weight;    // out x in
  Eigen::VectorXd bias;      // out
  Eigen::VectorXd ln_gain;   // out
  Eigen::VectorXd ln_shift;  // out
};

// Fixed-shape MLP: every hidden layer is linear -> layer-norm -> activation,
// the final layer is linear only.
struct MlpParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::CReLU;

  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }
};

using MlpGrads = MlpParams;  // same shapes, holds gradients

// crelu(x) = [max(x,0), max(-x,0)], doubling the width.
Eigen::VectorXd crelu(const Eigen::VectorXd& x);

// Row-wise layer normalization with population variance.
Eigen::VectorXd layer_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& gain,
                           const Eigen::VectorXd& shift, double eps = 1e-5);

constexpr double kLayerNormEps = 1e-5;

struct LayerCache {
  Eigen::MatrixXd input;    // n x in
  Eigen::MatrixXd x_hat;    // n x out, normalized pre-activation (hidden only)
  Eigen::VectorXd inv_std;  // n       (hidden only)
  Eigen::MatrixXd ln_out;   // n x out, post layer-norm (hidden only)
};

struct MlpCache {
  std::vector<LayerCache> layers;
  int batch = 0;
};

// Batched forward pass, rows are samples. `activate_final` applies the hidden
// block (layer-norm + activation) to the last layer too, used by actor trunks.
Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& input,
                            MlpCache* cache = nullptr, bool activate_final = false);

// Exact reverse-mode gradients of the forward map. Returns the gradient with
// respect to the input batch; parameter gradients are accumulated into `grads`
// (which must be zero-initialized or hold a running sum).
Eigen::MatrixXd mlp_backward(const MlpParams& params, const MlpCache& cache,
                             const Eigen::MatrixXd& grad_output, MlpGrads& grads,
                             bool activate_final = false);

MlpGrads zero_grads_like(const MlpParams& params);

// Uniform +-sqrt(1/fan_in) weights and biases, unit gain, zero shift.
MlpParams make_mlp(const std::vector<int>& dims, Activation act, std::mt19937_64& rng);

struct AdamState {
  MlpParams first_moment;   // same shapes as the parameters, zero-initialized
  MlpParams second_moment;
  long step_count = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const MlpParams& params, double lr);

// Bias-corrected Adam update. Throws NumericError on non-finite gradients
// without touching the parameters.
void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state);

// target <- (1 - tau) * target + tau * online
void polyak_update(MlpParams& target, const MlpParams& online, double tau);

}  // namespace pbac
