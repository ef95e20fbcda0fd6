#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pbac/actor.hpp"
#include "pbac/critic.hpp"
#include "pbac/envs.hpp"
#include "pbac/replay.hpp"
#include "pbac/rng.hpp"

namespace pbac {

struct TrainConfig {
  std::string env = "pointmass-delayed";
  std::string agent = "pbac";  // pbac | bootdqnp | sac
  long total_steps = 100000;
  long warmup_steps = 10000;
  int batch_size = 256;
  int replay_ratio = 5;
  int ensemble_size = 10;  // K
  int hidden = 256;
  int buffer_capacity = 100000;
  double gamma = 0.99;
  double tau = 5e-3;
  double kappa = 0.05;
  int psr = 5;
  double sigma0_sq = 1.0;
  double prior_scale = 5.0;  // BootDQN-P beta
  double lr = 3e-4;
  std::uint64_t seed = 0;
  long eval_every = 5000;
  int eval_episodes = 10;
  long visit_every = 500;
  int visit_dim_a = 0;
  int visit_dim_b = 1;
  double lambda_bar = 1.0;
  double delta = 0.05;
  double reward_bound = 1.0;
  std::string out_dir = "out";

  void validate() const;
};

struct TrainStepRecord {
  long step = 0;
  double episode_return = 0.0;  // return of the most recently finished episode
  CriticLossBreakdown loss;
  double alpha = 0.0;
  int active_head = 0;
};

struct EvalRecord {
  long step = 0;
  double mean_return = 0.0;
  std::vector<double> returns;
};

struct BoundRecord {
  long step = 0;
  double empirical_risk = 0.0;
  double kl = 0.0;
  double variance_term = 0.0;
  double rhs = 0.0;
};

struct VisitRecord {
  long step = 0;
  double dim_a = 0.0;
  double dim_b = 0.0;
};

struct TrainLog {
  std::vector<TrainStepRecord> steps;
  std::vector<EvalRecord> evals;
  std::vector<BoundRecord> bounds;
  std::vector<VisitRecord> visits;
  long gradient_phases = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Deterministic evaluation policy: `on_episode_start` may redraw the head.
struct EvalPolicy {
  std::function<void(std::mt19937_64&)> on_episode_start;
  std::function<ActionVec(const Observation&)> act;
};

// Undiscounted episodic returns of deterministic rollouts.
std::vector<double> evaluate(const EvalPolicy& policy, Env& env, int episodes,
                             std::mt19937_64& rng);

TrainLog train_pbac(const TrainConfig& cfg);
TrainLog train_bootdqnp(const TrainConfig& cfg);
TrainLog train_sac_baseline(const TrainConfig& cfg);

// Dispatch on cfg.agent.
TrainLog train(const TrainConfig& cfg);

}  // namespace pbac
