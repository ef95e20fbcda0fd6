#include "pbac/critic.hpp"

#include <cmath>

namespace pbac {

CriticEnsemble make_critic_ensemble(int obs_dim, int action_dim, int hidden, int K,
                                    double gamma, double tau, double lr,
                                    std::mt19937_64& rng) {
  CriticEnsemble ens;
  ens.K = K;
  ens.gamma = gamma;
  ens.tau = tau;
  const std::vector<int> dims{obs_dim + action_dim, hidden, hidden, 1};
  for (int k = 0; k < K; ++k) {
    ens.members.push_back(make_mlp(dims, Activation::CReLU, rng));
    ens.targets.push_back(ens.members.back());
    ens.adam.push_back(make_adam(ens.members.back(), lr));
  }
  return ens;
}

namespace {

Eigen::MatrixXd join_sa(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
  Eigen::MatrixXd sa(s.rows(), s.cols() + a.cols());
  sa << s, a;
  return sa;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("pbac_loss: non-finite ") + what);
}

}  // namespace

Eigen::MatrixXd ensemble_values(const CriticEnsemble& ens, const Eigen::MatrixXd& s_batch,
                                const Eigen::MatrixXd& a_batch, bool use_targets,
                                std::vector<MlpCache>* caches) {
  if (s_batch.rows() != a_batch.rows())
    throw std::invalid_argument("ensemble_values: batch dimension mismatch");
  const Eigen::MatrixXd sa = join_sa(s_batch, a_batch);
  const auto& nets = use_targets ? ens.targets : ens.members;
  Eigen::MatrixXd values(sa.rows(), ens.K);
  if (caches) caches->assign(ens.K, {});
  for (int k = 0; k < ens.K; ++k) {
    values.col(k) = mlp_forward(nets[k], sa, caches ? &(*caches)[k] : nullptr);
  }
  return values;
}

std::optional<PosteriorMoments> masked_moments(const Eigen::VectorXd& values_row,
                                               const Eigen::VectorXd& target_row,
                                               const Eigen::VectorXd& mask_row,
                                               double floor) {
  const double m = mask_row.sum();
  if (m < 0.5) return std::nullopt;
  PosteriorMoments out;
  out.mu = mask_row.dot(values_row) / m;
  out.prior_mu = mask_row.dot(target_row) / m;
  if (m < 1.5) {
    out.sigma_sq = floor;
  } else {
    const double ss =
        (mask_row.array() * (values_row.array() - out.mu).square()).sum() / (m - 1.0);
    out.sigma_sq = std::max(ss, floor);
  }
  return out;
}

CriticLossBreakdown pbac_loss(const CriticEnsemble& ens, const Minibatch& batch,
                              const BootstrapMask& mask, const Eigen::MatrixXd& next_actions,
                              const Eigen::VectorXd& next_logprobs, double alpha,
                              const PriorConfig& prior,
                              std::vector<MlpGrads>* member_grads) {
  const int n = batch.size();
  const int K = ens.K;
  const double gamma = ens.gamma;
  const double sigma0_sq = prior.sigma0_sq;

  std::vector<MlpCache> caches;
  const Eigen::MatrixXd values =
      ensemble_values(ens, batch.s, batch.a, false, member_grads ? &caches : nullptr);
  const Eigen::MatrixXd target_values =
      ensemble_values(ens, batch.s_next, next_actions, true);

  // Per-datapoint masked moments; skipped rows contribute nothing.
  Eigen::VectorXd mu(n), sigma_sq(n), prior_mu(n), survivors(n);
  std::vector<bool> active(n);
  for (int i = 0; i < n; ++i) {
    auto mm = masked_moments(values.row(i), target_values.row(i), mask.row(i));
    active[i] = mm.has_value();
    if (mm) {
      mu(i) = mm->mu;
      sigma_sq(i) = mm->sigma_sq;
      prior_mu(i) = mm->prior_mu;
      survivors(i) = mask.row(i).sum();
    }
  }

  CriticLossBreakdown out;
  Eigen::MatrixXd dvalues = Eigen::MatrixXd::Zero(n, K);
  const double inv_nk = 1.0 / (static_cast<double>(n) * K);
  const double coh_scale = 1.0 / (2.0 * gamma * gamma * sigma0_sq);
  const double prop_coeff = (2.0 * gamma * gamma + 1.0) / (2.0 * n);

  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < n; ++i) {
      if (!active[i] || mask(i, k) == 0.0) continue;
      const double cont = gamma * (1.0 - batch.done(i));
      const double soft_next = -alpha * next_logprobs(i);
      const double y_ik = batch.r(i) + cont * (target_values(i, k) + soft_next);
      const double d_res = y_ik - values(i, k);
      out.diversity += inv_nk * d_res * d_res;
      const double c_target = batch.r(i) + cont * (prior_mu(i) + soft_next);
      const double c_res = c_target - values(i, k);
      out.coherence += inv_nk * c_res * c_res * coh_scale;
      if (member_grads) {
        dvalues(i, k) += -2.0 * inv_nk * d_res;
        dvalues(i, k) += -2.0 * inv_nk * c_res * coh_scale;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!active[i]) continue;
    out.propagation -= prop_coeff * std::log(sigma_sq(i));
    if (member_grads && survivors(i) > 1.5 && sigma_sq(i) > kVarianceFloor) {
      // d/dX_k log sigma^2 = 2 b_ik (X_k - mu) / ((m-1) sigma^2)
      const double scale = -prop_coeff * 2.0 / ((survivors(i) - 1.0) * sigma_sq(i));
      for (int k = 0; k < K; ++k) {
        if (mask(i, k) == 0.0) continue;
        dvalues(i, k) += scale * (values(i, k) - mu(i));
      }
    }
  }
  out.total = out.diversity + out.coherence + out.propagation;
  check_finite(out.total, "loss");

  if (member_grads) {
    member_grads->clear();
    for (int k = 0; k < K; ++k) {
      MlpGrads g = zero_grads_like(ens.members[k]);
      mlp_backward(ens.members[k], caches[k], dvalues.col(k), g);
      member_grads->push_back(std::move(g));
    }
  }
  return out;
}

double kl_term(const Minibatch& batch, const CriticEnsemble& ens,
               const Eigen::MatrixXd& next_actions, const PriorConfig& prior) {
  const int n = batch.size();
  const int K = ens.K;
  const double gamma = ens.gamma;
  const Eigen::MatrixXd values = ensemble_values(ens, batch.s, batch.a, false);
  const Eigen::MatrixXd target_values = ensemble_values(ens, batch.s_next, next_actions, true);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(K);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto mm = masked_moments(values.row(i), target_values.row(i), ones);
    const double cont = gamma * (1.0 - batch.done(i));
    double quad = 0.0;
    for (int k = 0; k < K; ++k) {
      const double res = batch.r(i) + cont * mm->prior_mu - values(i, k);
      quad += res * res;
    }
    acc += (quad / (gamma * gamma * prior.sigma0_sq) - K * std::log(mm->sigma_sq)) / (2.0 * K);
  }
  return acc / n;
}

double bootdqnp_loss(const CriticEnsemble& ens, const std::vector<MlpParams>& priors,
                     double beta, const Minibatch& batch, const BootstrapMask& mask,
                     const Eigen::MatrixXd& next_actions,
                     std::vector<MlpGrads>* member_grads) {
  const int n = batch.size();
  const int K = ens.K;
  const double gamma = ens.gamma;
  std::vector<MlpCache> caches;
  Eigen::MatrixXd values =
      ensemble_values(ens, batch.s, batch.a, false, member_grads ? &caches : nullptr);
  Eigen::MatrixXd target_values = ensemble_values(ens, batch.s_next, next_actions, true);
  if (beta != 0.0) {
    const Eigen::MatrixXd sa = [&] {
      Eigen::MatrixXd m(batch.s.rows(), batch.s.cols() + batch.a.cols());
      m << batch.s, batch.a;
      return m;
    }();
    const Eigen::MatrixXd sa_next = [&] {
      Eigen::MatrixXd m(batch.s_next.rows(), batch.s_next.cols() + next_actions.cols());
      m << batch.s_next, next_actions;
      return m;
    }();
    for (int k = 0; k < K; ++k) {
      values.col(k) += beta * mlp_forward(priors[k], sa);
      target_values.col(k) += beta * mlp_forward(priors[k], sa_next);
    }
  }
  double loss = 0.0;
  Eigen::MatrixXd dvalues = Eigen::MatrixXd::Zero(n, K);
  const double inv_nk = 1.0 / (static_cast<double>(n) * K);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < n; ++i) {
      if (mask(i, k) == 0.0) continue;
      const double res = batch.r(i) + gamma * (1.0 - batch.done(i)) * target_values(i, k) -
                         values(i, k);
      loss += inv_nk * res * res;
      if (member_grads) dvalues(i, k) = -2.0 * inv_nk * res;
    }
  }
  check_finite(loss, "bootdqnp loss");
  if (member_grads) {
    member_grads->clear();
    for (int k = 0; k < K; ++k) {
      MlpGrads g = zero_grads_like(ens.members[k]);
      mlp_backward(ens.members[k], caches[k], dvalues.col(k), g);
      member_grads->push_back(std::move(g));
    }
  }
  return loss;
}

double sac_critic_loss(const CriticEnsemble& ens, const Minibatch& batch,
                       const Eigen::MatrixXd& next_actions,
                       const Eigen::VectorXd& next_logprobs, double alpha,
                       std::vector<MlpGrads>* member_grads) {
  const int n = batch.size();
  const int K = ens.K;
  std::vector<MlpCache> caches;
  const Eigen::MatrixXd values =
      ensemble_values(ens, batch.s, batch.a, false, member_grads ? &caches : nullptr);
  const Eigen::MatrixXd target_values = ensemble_values(ens, batch.s_next, next_actions, true);
  double loss = 0.0;
  Eigen::MatrixXd dvalues = Eigen::MatrixXd::Zero(n, K);
  const double inv_nk = 1.0 / (static_cast<double>(n) * K);
  for (int i = 0; i < n; ++i) {
    const double min_target = target_values.row(i).minCoeff();
    const double y = batch.r(i) + ens.gamma * (1.0 - batch.done(i)) *
                                      (min_target - alpha * next_logprobs(i));
    for (int k = 0; k < K; ++k) {
      const double res = y - values(i, k);
      loss += inv_nk * res * res;
      if (member_grads) dvalues(i, k) = -2.0 * inv_nk * res;
    }
  }
  check_finite(loss, "sac loss");
  if (member_grads) {
    member_grads->clear();
    for (int k = 0; k < K; ++k) {
      MlpGrads g = zero_grads_like(ens.members[k]);
      mlp_backward(ens.members[k], caches[k], dvalues.col(k), g);
      member_grads->push_back(std::move(g));
    }
  }
  return loss;
}

void update_targets(CriticEnsemble& ens) {
  for (int k = 0; k < ens.K; ++k) polyak_update(ens.targets[k], ens.members[k], ens.tau);
}

}  // namespace pbac
