#include "pbac/actor.hpp"

#include <cmath>

namespace pbac {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)
}

ActorNet make_actor(int obs_dim, int action_dim, int hidden, int K, bool deterministic,
                    std::mt19937_64& rng) {
  ActorNet actor;
  actor.action_dim = action_dim;
  actor.deterministic = deterministic;
  actor.trunk = make_mlp({obs_dim, hidden, hidden}, Activation::CReLU, rng);
  const int trunk_out = 2 * hidden;  // CReLU doubles the trunk output
  const int head_out = deterministic ? action_dim : 2 * action_dim;
  for (int k = 0; k < K; ++k)
    actor.heads.push_back(make_mlp({trunk_out, head_out}, Activation::CReLU, rng));
  return actor;
}

SquashedSample sample_action(const ActorNet& actor, int head, const Observation& s,
                             std::mt19937_64& rng, bool deterministic_eval) {
  const Eigen::MatrixXd feat = mlp_forward(actor.trunk, s.transpose(), nullptr, true);
  const Eigen::MatrixXd out = mlp_forward(actor.heads[head], feat);
  const int da = actor.action_dim;
  SquashedSample sample;
  sample.action.resize(da);
  if (actor.deterministic) {
    for (int j = 0; j < da; ++j) sample.action(j) = std::tanh(out(0, j));
    sample.log_prob = 0.0;
    return sample;
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  double logp = 0.0;
  for (int j = 0; j < da; ++j) {
    const double mean = out(0, j);
    const double log_std = std::clamp(out(0, da + j), kLogStdMin, kLogStdMax);
    const double std_dev = std::exp(log_std);
    const double eps = deterministic_eval ? 0.0 : gauss(rng);
    const double u = mean + std_dev * eps;
    const double t = std::tanh(u);
    sample.action(j) = t;
    logp += -0.5 * eps * eps - log_std - kHalfLog2Pi - std::log(1.0 - t * t + kTanhEps);
  }
  sample.log_prob = logp;
  return sample;
}

double actor_loss(const ActorNet& actor, const CriticEnsemble& critics,
                  const Eigen::MatrixXd& s_batch, double alpha, std::mt19937_64& rng,
                  MlpGrads* trunk_grads, std::vector<MlpGrads>* head_grads,
                  Eigen::VectorXd* logprobs_out) {
  const int n = static_cast<int>(s_batch.rows());
  const int K = static_cast<int>(actor.heads.size());
  const int da = actor.action_dim;
  const int ds = static_cast<int>(s_batch.cols());
  const double inv_nk = 1.0 / (static_cast<double>(n) * K);
  const bool want_grads = trunk_grads != nullptr;

  MlpCache trunk_cache;
  const Eigen::MatrixXd feat =
      mlp_forward(actor.trunk, s_batch, want_grads ? &trunk_cache : nullptr, true);
  Eigen::MatrixXd dfeat = Eigen::MatrixXd::Zero(feat.rows(), feat.cols());
  if (want_grads) {
    head_grads->clear();
    for (int k = 0; k < K; ++k) head_grads->push_back(zero_grads_like(actor.heads[k]));
  }
  if (logprobs_out) logprobs_out->resize(n * K);

  std::normal_distribution<double> gauss(0.0, 1.0);
  double loss = 0.0;
  for (int k = 0; k < K; ++k) {
    MlpCache head_cache;
    const Eigen::MatrixXd out =
        mlp_forward(actor.heads[k], feat, want_grads ? &head_cache : nullptr);
    Eigen::MatrixXd mean = out.leftCols(da);
    Eigen::MatrixXd log_std_raw = out.rightCols(da);
    Eigen::MatrixXd eps(n, da);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < da; ++j) eps(i, j) = gauss(rng);

    Eigen::MatrixXd actions(n, da), tanh_u(n, da), std_dev(n, da);
    Eigen::VectorXd logp = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < da; ++j) {
        const double ls = std::clamp(log_std_raw(i, j), kLogStdMin, kLogStdMax);
        const double sd = std::exp(ls);
        const double u = mean(i, j) + sd * eps(i, j);
        const double t = std::tanh(u);
        std_dev(i, j) = sd;
        tanh_u(i, j) = t;
        actions(i, j) = t;
        logp(i) += -0.5 * eps(i, j) * eps(i, j) - ls - kHalfLog2Pi -
                   std::log(1.0 - t * t + kTanhEps);
      }
      if (logprobs_out) (*logprobs_out)(k * n + i) = logp(i);
    }

    Eigen::MatrixXd sa(n, ds + da);
    sa << s_batch, actions;
    MlpCache critic_cache;
    const Eigen::MatrixXd v =
        mlp_forward(critics.members[k], sa, want_grads ? &critic_cache : nullptr);
    loss += inv_nk * (alpha * logp.sum() - v.sum());

    if (!want_grads) continue;
    // Gradient through the frozen critic into the actions.
    MlpGrads critic_scratch = zero_grads_like(critics.members[k]);
    const Eigen::MatrixXd dsa = mlp_backward(
        critics.members[k], critic_cache,
        Eigen::MatrixXd::Constant(n, 1, -inv_nk), critic_scratch);
    const Eigen::MatrixXd da_grad = dsa.rightCols(da);

    Eigen::MatrixXd dout = Eigen::MatrixXd::Zero(n, 2 * da);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < da; ++j) {
        const double t = tanh_u(i, j);
        const double c = 1.0 - t * t;
        const double du = da_grad(i, j) * c +
                          inv_nk * alpha * (2.0 * t * c / (c + kTanhEps));
        dout(i, j) = du;
        const bool clamped = log_std_raw(i, j) < kLogStdMin || log_std_raw(i, j) > kLogStdMax;
        if (!clamped)
          dout(i, da + j) = du * std_dev(i, j) * eps(i, j) - inv_nk * alpha;
      }
    }
    dfeat += mlp_backward(actor.heads[k], head_cache, dout, (*head_grads)[k]);
  }
  if (want_grads) {
    *trunk_grads = zero_grads_like(actor.trunk);
    mlp_backward(actor.trunk, trunk_cache, dfeat, *trunk_grads, true);
  }
  return loss;
}

double actor_loss_deterministic(const ActorNet& actor, const CriticEnsemble& critics,
                                const std::vector<MlpParams>& priors, double beta,
                                const Eigen::MatrixXd& s_batch, MlpGrads* trunk_grads,
                                std::vector<MlpGrads>* head_grads) {
  const int n = static_cast<int>(s_batch.rows());
  const int K = static_cast<int>(actor.heads.size());
  const int da = actor.action_dim;
  const int ds = static_cast<int>(s_batch.cols());
  const double inv_nk = 1.0 / (static_cast<double>(n) * K);
  const bool want_grads = trunk_grads != nullptr;

  MlpCache trunk_cache;
  const Eigen::MatrixXd feat =
      mlp_forward(actor.trunk, s_batch, want_grads ? &trunk_cache : nullptr, true);
  Eigen::MatrixXd dfeat = Eigen::MatrixXd::Zero(feat.rows(), feat.cols());
  if (want_grads) {
    head_grads->clear();
    for (int k = 0; k < K; ++k) head_grads->push_back(zero_grads_like(actor.heads[k]));
  }

  double loss = 0.0;
  for (int k = 0; k < K; ++k) {
    MlpCache head_cache;
    const Eigen::MatrixXd raw =
        mlp_forward(actor.heads[k], feat, want_grads ? &head_cache : nullptr);
    const Eigen::MatrixXd actions = raw.array().tanh();
    Eigen::MatrixXd sa(n, ds + da);
    sa << s_batch, actions;
    MlpCache critic_cache, prior_cache;
    const Eigen::MatrixXd v =
        mlp_forward(critics.members[k], sa, want_grads ? &critic_cache : nullptr);
    double vsum = v.sum();
    if (beta != 0.0)
      vsum += beta * mlp_forward(priors[k], sa, want_grads ? &prior_cache : nullptr).sum();
    loss -= inv_nk * vsum;

    if (!want_grads) continue;
    MlpGrads scratch = zero_grads_like(critics.members[k]);
    Eigen::MatrixXd dsa = mlp_backward(critics.members[k], critic_cache,
                                       Eigen::MatrixXd::Constant(n, 1, -inv_nk), scratch);
    if (beta != 0.0) {
      MlpGrads pscratch = zero_grads_like(priors[k]);
      dsa += mlp_backward(priors[k], prior_cache,
                          Eigen::MatrixXd::Constant(n, 1, -inv_nk * beta), pscratch);
    }
    const Eigen::MatrixXd draw_out =
        dsa.rightCols(da).cwiseProduct((1.0 - actions.array().square()).matrix());
    dfeat += mlp_backward(actor.heads[k], head_cache, draw_out, (*head_grads)[k]);
  }
  if (want_grads) {
    *trunk_grads = zero_grads_like(actor.trunk);
    mlp_backward(actor.trunk, trunk_cache, dfeat, *trunk_grads, true);
  }
  return loss;
}

void alpha_update(EntropyTuner& tuner, const Eigen::VectorXd& batch_logprobs) {
  const double mean_excess = (batch_logprobs.array() + tuner.target_entropy).mean();
  const double grad = -tuner.alpha() * mean_excess;
  tuner.log_alpha -= tuner.lr * grad;
}

int select_head(BehaviorSelector& selector, std::mt19937_64& rng) {
  if (selector.step_counter % selector.psr == 0) {
    std::uniform_int_distribution<int> pick(0, selector.K - 1);
    selector.active_head = pick(rng);
  }
  selector.step_counter += 1;
  return selector.active_head;
}

}  // namespace pbac
