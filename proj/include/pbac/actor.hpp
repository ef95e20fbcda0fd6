#pragma once

#include <random>
#include <vector>

#include "pbac/critic.hpp"
#include "pbac/numerics.hpp"

namespace pbac {

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;
constexpr double kTanhEps = 1e-6;

struct SquashedSample {
  ActionVec action;  // componentwise in (-1, 1)
  double log_prob = 0.0;
};

// Shared trunk (all layers hidden) with K heads. Stochastic heads output
// 2*d_a values (mean, log-std); deterministic heads output d_a.
struct ActorNet {
  MlpParams trunk;
  std::vector<MlpParams> heads;
  int action_dim = 0;
  bool deterministic = false;
};

ActorNet make_actor(int obs_dim, int action_dim, int hidden, int K, bool deterministic,
                    std::mt19937_64& rng);

// Reparameterized sample from head k: a = tanh(mean + std * eps) with the
// tanh log-density correction. `deterministic_eval` suppresses the noise and
// returns tanh(mean).
SquashedSample sample_action(const ActorNet& actor, int head, const Observation& s,
                             std::mt19937_64& rng, bool deterministic_eval = false);

// loss = -(1/(nK)) sum_{i,k} (X_k(s_i, a_ik) - alpha * log pi_k(a_ik | s_i))
// with head k paired against critic k only. Gradients flow through the
// reparameterized actions into trunk and heads; critic parameters stay fixed.
double actor_loss(const ActorNet& actor, const CriticEnsemble& critics,
                  const Eigen::MatrixXd& s_batch, double alpha, std::mt19937_64& rng,
                  MlpGrads* trunk_grads, std::vector<MlpGrads>* head_grads,
                  Eigen::VectorXd* logprobs_out = nullptr);

// Deterministic-head variant used by the BootDQN-P baseline: maximizes the
// prior-perturbed values, no entropy term.
double actor_loss_deterministic(const ActorNet& actor, const CriticEnsemble& critics,
                                const std::vector<MlpParams>& priors, double beta,
                                const Eigen::MatrixXd& s_batch, MlpGrads* trunk_grads,
                                std::vector<MlpGrads>* head_grads);

struct EntropyTuner {
  double log_alpha = 0.0;
  double target_entropy = -1.0;
  double lr = 3e-4;
  double alpha() const { return std::exp(log_alpha); }
};

// One gradient step on J(alpha) = -alpha * mean(log_prob + target_entropy).
void alpha_update(EntropyTuner& tuner, const Eigen::VectorXd& batch_logprobs);

struct BehaviorSelector {
  int active_head = 0;
  int psr = 5;        // posterior sampling rate, head redrawn every psr steps
  long step_counter = 0;
  int K = 1;
};

// Draw j ~ Uniform{0..K-1} on psr-aligned steps, otherwise keep the current
// head; increments the step counter.
int select_head(BehaviorSelector& selector, std::mt19937_64& rng);

}  // namespace pbac
