#include "pbac/numerics.hpp"

#include <cmath>

namespace pbac {

Eigen::VectorXd crelu(const Eigen::VectorXd& x) {
  const auto d = x.size();
  Eigen::VectorXd out(2 * d);
  out.head(d) = x.cwiseMax(0.0);
  out.tail(d) = (-x).cwiseMax(0.0);
  return out;
}

Eigen::VectorXd layer_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& gain,
                           const Eigen::VectorXd& shift, double eps) {
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  const double inv_std = 1.0 / std::sqrt(var + eps);
  return (gain.array() * (x.array() - mean) * inv_std + shift.array()).matrix();
}

namespace {

// Row-wise layer norm over a batch; fills x_hat/inv_std for the backward pass.
Eigen::MatrixXd batch_layer_norm(const Eigen::MatrixXd& z, const DenseLayer& layer,
                                 Eigen::MatrixXd* x_hat, Eigen::VectorXd* inv_std) {
  const auto n = z.rows();
  const auto d = z.cols();
  Eigen::VectorXd mean = z.rowwise().mean();
  Eigen::MatrixXd centered = z.colwise() - mean;
  Eigen::VectorXd var = centered.array().square().rowwise().mean();
  Eigen::VectorXd istd = (var.array() + kLayerNormEps).rsqrt();
  Eigen::MatrixXd xh = centered.array().colwise() * istd.array();
  Eigen::MatrixXd out(n, d);
  out = (xh.array().rowwise() * layer.ln_gain.transpose().array()).rowwise() +
        layer.ln_shift.transpose().array();
  if (x_hat) *x_hat = std::move(xh);
  if (inv_std) *inv_std = std::move(istd);
  return out;
}

Eigen::MatrixXd batch_crelu(const Eigen::MatrixXd& y) {
  Eigen::MatrixXd out(y.rows(), 2 * y.cols());
  out.leftCols(y.cols()) = y.cwiseMax(0.0);
  out.rightCols(y.cols()) = (-y).cwiseMax(0.0);
  return out;
}

}  // namespace

Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& input,
                            MlpCache* cache, bool activate_final) {
  const int n_layers = static_cast<int>(params.layers.size());
  if (input.cols() != params.input_dim())
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  if (cache) {
    cache->layers.assign(n_layers, {});
    cache->batch = static_cast<int>(input.rows());
  }
  Eigen::MatrixXd x = input;
  for (int l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = params.layers[l];
    const bool hidden = (l + 1 < n_layers) || activate_final;
    LayerCache* lc = cache ? &cache->layers[l] : nullptr;
    if (lc) lc->input = x;
    Eigen::MatrixXd z = (x * layer.weight.transpose()).rowwise() + layer.bias.transpose();
    if (!hidden) {
      x = std::move(z);
      continue;
    }
    Eigen::MatrixXd y = batch_layer_norm(z, layer, lc ? &lc->x_hat : nullptr,
                                         lc ? &lc->inv_std : nullptr);
    if (lc) lc->ln_out = y;
    x = (params.activation == Activation::CReLU) ? batch_crelu(y) : std::move(y);
  }
  return x;
}

Eigen::MatrixXd mlp_backward(const MlpParams& params, const MlpCache& cache,
                             const Eigen::MatrixXd& grad_output, MlpGrads& grads,
                             bool activate_final) {
  const int n_layers = static_cast<int>(params.layers.size());
  if (cache.layers.size() != static_cast<size_t>(n_layers) ||
      grad_output.rows() != cache.batch)
    throw std::invalid_argument("mlp_backward: stale cache");
  Eigen::MatrixXd dx = grad_output;
  for (int l = n_layers - 1; l >= 0; --l) {
    const DenseLayer& layer = params.layers[l];
    const LayerCache& lc = cache.layers[l];
    const bool hidden = (l + 1 < n_layers) || activate_final;
    Eigen::MatrixXd dz;
    if (hidden) {
      Eigen::MatrixXd dy;
      if (params.activation == Activation::CReLU) {
        const auto d = layer.weight.rows();
        dy = dx.leftCols(d).cwiseProduct((lc.ln_out.array() > 0.0).cast<double>().matrix()) -
             dx.rightCols(d).cwiseProduct((lc.ln_out.array() < 0.0).cast<double>().matrix());
      } else {
        dy = dx;
      }
      grads.layers[l].ln_gain += dy.cwiseProduct(lc.x_hat).colwise().sum().transpose();
      grads.layers[l].ln_shift += dy.colwise().sum().transpose();
      Eigen::MatrixXd dxhat = dy.array().rowwise() * layer.ln_gain.transpose().array();
      Eigen::VectorXd mean_dxhat = dxhat.rowwise().mean();
      Eigen::VectorXd mean_dxhat_xhat = dxhat.cwiseProduct(lc.x_hat).rowwise().mean();
      dz = ((dxhat.colwise() - mean_dxhat) -
            (lc.x_hat.array().colwise() * mean_dxhat_xhat.array()).matrix())
               .array()
               .colwise() *
           lc.inv_std.array();
    } else {
      dz = dx;
    }
    grads.layers[l].weight += dz.transpose() * lc.input;
    grads.layers[l].bias += dz.colwise().sum().transpose();
    dx = dz * layer.weight;
  }
  return dx;
}

MlpGrads zero_grads_like(const MlpParams& params) {
  MlpGrads g;
  g.activation = params.activation;
  g.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) {
    DenseLayer z;
    z.weight = Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols());
    z.bias = Eigen::VectorXd::Zero(layer.bias.size());
    z.ln_gain = Eigen::VectorXd::Zero(layer.ln_gain.size());
    z.ln_shift = Eigen::VectorXd::Zero(layer.ln_shift.size());
    g.layers.push_back(std::move(z));
  }
  return g;
}

MlpParams make_mlp(const std::vector<int>& dims, Activation act, std::mt19937_64& rng) {
  if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least one layer");
  MlpParams p;
  p.activation = act;
  const int width_factor = (act == Activation::CReLU) ? 2 : 1;
  int in = dims[0];
  for (size_t l = 1; l < dims.size(); ++l) {
    const int out = dims[l];
    DenseLayer layer;
    const double bound = std::sqrt(1.0 / in);
    std::uniform_real_distribution<double> u(-bound, bound);
    layer.weight = Eigen::MatrixXd::NullaryExpr(out, in, [&] { return u(rng); });
    layer.bias = Eigen::VectorXd::NullaryExpr(out, [&] { return u(rng); });
    layer.ln_gain = Eigen::VectorXd::Ones(out);
    layer.ln_shift = Eigen::VectorXd::Zero(out);
    p.layers.push_back(std::move(layer));
    in = (l + 1 < dims.size()) ? out * width_factor : out;
  }
  return p;
}

AdamState make_adam(const MlpParams& params, double lr) {
  AdamState s;
  s.first_moment = zero_grads_like(params);
  s.second_moment = zero_grads_like(params);
  s.lr = lr;
  return s;
}

namespace {

template <typename Fn>
void for_each_block(MlpParams& a, const MlpParams& b, MlpParams& c, MlpParams& d, Fn fn) {
  for (size_t l = 0; l < a.layers.size(); ++l) {
    auto each = [&](auto& pa, const auto& pb, auto& pc, auto& pd) {
      fn(pa.data(), pb.data(), pc.data(), pd.data(), pa.size());
    };
    each(a.layers[l].weight, b.layers[l].weight, c.layers[l].weight, d.layers[l].weight);
    each(a.layers[l].bias, b.layers[l].bias, c.layers[l].bias, d.layers[l].bias);
    each(a.layers[l].ln_gain, b.layers[l].ln_gain, c.layers[l].ln_gain, d.layers[l].ln_gain);
    each(a.layers[l].ln_shift, b.layers[l].ln_shift, c.layers[l].ln_shift, d.layers[l].ln_shift);
  }
}

bool all_finite(const MlpParams& g) {
  for (const auto& layer : g.layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite() ||
        !layer.ln_gain.allFinite() || !layer.ln_shift.allFinite())
      return false;
  }
  return true;
}

}  // namespace

void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state) {
  if (!all_finite(grads)) throw NumericError("adam_step: non-finite gradient");
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for_each_block(params, grads, state.first_moment, state.second_moment,
                 [&](double* p, const double* g, double* m, double* v, std::ptrdiff_t n) {
                   for (std::ptrdiff_t i = 0; i < n; ++i) {
                     m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
                     v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
                     const double mhat = m[i] / bc1;
                     const double vhat = v[i] / bc2;
                     p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
                   }
                 });
}

void polyak_update(MlpParams& target, const MlpParams& online, double tau) {
  for (size_t l = 0; l < target.layers.size(); ++l) {
    auto mix = [tau](auto& t, const auto& o) { t = (1.0 - tau) * t + tau * o; };
    mix(target.layers[l].weight, online.layers[l].weight);
    mix(target.layers[l].bias, online.layers[l].bias);
    mix(target.layers[l].ln_gain, online.layers[l].ln_gain);
    mix(target.layers[l].ln_shift, online.layers[l].ln_shift);
  }
}

}  // namespace pbac
