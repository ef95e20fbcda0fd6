#pragma once

#include <optional>
#include <vector>

#include "pbac/numerics.hpp"
#include "pbac/replay.hpp"

namespace pbac {

struct PriorConfig {
  double sigma0_sq = 1.0;  // prior variance, > 0
};

// Unbiased ensemble variance floor applied before the log in the
// propagation term; a collapsed ensemble otherwise gives -inf.
constexpr double kVarianceFloor = 1e-6;

struct PosteriorMoments {
  double mu = 0.0;        // masked ensemble mean at (s, a)
  double sigma_sq = 0.0;  // masked unbiased variance, floored
  double prior_mu = 0.0;  // masked mean of the targets at (s', a')
};

struct CriticLossBreakdown {
  double diversity = 0.0;
  double coherence = 0.0;
  double propagation = 0.0;  // carries its negative sign
  double total = 0.0;
};

// K critics X_k with Polyak-averaged targets; inputs are (s, a) pairs and the
// output is a scalar value per member.
struct CriticEnsemble {
  std::vector<MlpParams> members;
  std::vector<MlpParams> targets;
  std::vector<AdamState> adam;
  int K = 0;
  double gamma = 0.99;
  double tau = 5e-3;
};

CriticEnsemble make_critic_ensemble(int obs_dim, int action_dim, int hidden, int K,
                                    double gamma, double tau, double lr,
                                    std::mt19937_64& rng);

// Entry (i, k) = member k's value for (s_i, a_i). Caches (when requested) are
// per member, for a subsequent backward pass.
Eigen::MatrixXd ensemble_values(const CriticEnsemble& ens, const Eigen::MatrixXd& s_batch,
                                const Eigen::MatrixXd& a_batch, bool use_targets,
                                std::vector<MlpCache>* caches = nullptr);

// Moments over the members surviving the mask row. Empty when the row is all
// zero (caller skips the datapoint). Single-survivor variance is the floor.
std::optional<PosteriorMoments> masked_moments(const Eigen::VectorXd& values_row,
                                               const Eigen::VectorXd& target_row,
                                               const Eigen::VectorXd& mask_row,
                                               double floor = kVarianceFloor);

// Three-term critic objective on one minibatch. `next_actions`/`next_logprobs`
// come from the active behavior head at s'. When `member_grads` is non-null it
// receives the analytic gradient for each member; targets, the prior mean, and
// the policy are treated as constants. Summation order is member-major, then
// datapoint.
CriticLossBreakdown pbac_loss(const CriticEnsemble& ens, const Minibatch& batch,
                              const BootstrapMask& mask, const Eigen::MatrixXd& next_actions,
                              const Eigen::VectorXd& next_logprobs, double alpha,
                              const PriorConfig& prior,
                              std::vector<MlpGrads>* member_grads = nullptr);

// Batch mean of the function-space KL approximation (additive constant
// omitted); diagnostic only, never trained on. Uses all members unmasked.
double kl_term(const Minibatch& batch, const CriticEnsemble& ens,
               const Eigen::MatrixXd& next_actions, const PriorConfig& prior);

// Per-member masked TD loss on prior-perturbed critics X_k + beta * p_k.
// Prior networks are frozen; gradients flow to the members only.
double bootdqnp_loss(const CriticEnsemble& ens, const std::vector<MlpParams>& priors,
                     double beta, const Minibatch& batch, const BootstrapMask& mask,
                     const Eigen::MatrixXd& next_actions,
                     std::vector<MlpGrads>* member_grads = nullptr);

// Soft TD loss with a min-over-targets Bellman target (undirected baseline).
double sac_critic_loss(const CriticEnsemble& ens, const Minibatch& batch,
                       const Eigen::MatrixXd& next_actions,
                       const Eigen::VectorXd& next_logprobs, double alpha,
                       std::vector<MlpGrads>* member_grads = nullptr);

// theta_bar_k <- tau * theta_k + (1 - tau) * theta_bar_k
void update_targets(CriticEnsemble& ens);

}  // namespace pbac
