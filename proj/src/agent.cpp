#include "pbac/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pbac/analysis.hpp"

namespace pbac {

void TrainConfig::validate() const {
  if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
  if (warmup_steps < 0 || warmup_steps > total_steps)
    throw std::invalid_argument("warmup_steps must lie in [0, total_steps]");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (replay_ratio < 1) throw std::invalid_argument("replay_ratio must be >= 1");
  if (ensemble_size < 1) throw std::invalid_argument("ensemble_size must be >= 1");
  if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
  if (buffer_capacity < 1) throw std::invalid_argument("buffer_capacity must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must be in (0, 1]");
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("kappa must be in (0, 1)");
  if (psr < 1) throw std::invalid_argument("psr must be >= 1");
  if (!(sigma0_sq > 0.0)) throw std::invalid_argument("sigma0_sq must be > 0");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
  if (visit_every < 1) throw std::invalid_argument("visit_every must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must be in (0, 1]");
}

std::vector<double> evaluate(const EvalPolicy& policy, Env& env, int episodes,
                             std::mt19937_64& rng) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  std::vector<double> returns;
  returns.reserve(episodes);
  for (int e = 0; e < episodes; ++e) {
    if (policy.on_episode_start) policy.on_episode_start(rng);
    Observation obs = env.reset(rng);
    double ret = 0.0;
    while (true) {
      const StepResult res = env.step(policy.act(obs));
      ret += res.reward;
      obs = res.next_obs;
      if (res.done || res.truncated) break;
    }
    returns.push_back(ret);
  }
  return returns;
}

namespace {

enum class AgentKind { Pbac, BootDqnP, Sac };

AgentKind parse_agent(const std::string& name) {
  if (name == "pbac") return AgentKind::Pbac;
  if (name == "bootdqnp") return AgentKind::BootDqnP;
  if (name == "sac") return AgentKind::Sac;
  throw std::invalid_argument("unknown agent: " + name);
}

// Per-head reparameterized actions and log-densities at a state batch.
// Deterministic actors return tanh(head output) with zero log-prob.
void sample_actions_batch(const ActorNet& actor, int head, const Eigen::MatrixXd& s_batch,
                          std::mt19937_64& rng, Eigen::MatrixXd& actions,
                          Eigen::VectorXd& logprobs) {
  const int n = static_cast<int>(s_batch.rows());
  const int da = actor.action_dim;
  const Eigen::MatrixXd feat = mlp_forward(actor.trunk, s_batch, nullptr, true);
  const Eigen::MatrixXd out = mlp_forward(actor.heads[head], feat);
  actions.resize(n, da);
  logprobs = Eigen::VectorXd::Zero(n);
  if (actor.deterministic) {
    actions = out.array().tanh();
    return;
  }
  constexpr double kHalfLog2Pi = 0.9189385332046727;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < da; ++j) {
      const double ls = std::clamp(out(i, da + j), kLogStdMin, kLogStdMax);
      const double sd = std::exp(ls);
      const double eps = gauss(rng);
      const double t = std::tanh(out(i, j) + sd * eps);
      actions(i, j) = t;
      logprobs(i) += -0.5 * eps * eps - ls - kHalfLog2Pi - std::log(1.0 - t * t + kTanhEps);
    }
  }
}

ActionVec clamp_action(const ActionVec& a) {
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

struct Learner {
  AgentKind kind;
  CriticEnsemble critics;
  std::vector<MlpParams> priors;  // BootDQN-P only, frozen
  ActorNet actor;
  AdamState trunk_adam;
  std::vector<AdamState> head_adam;
  EntropyTuner tuner;
  BehaviorSelector selector;
};

Learner make_learner(AgentKind kind, const TrainConfig& cfg, int ds, int da,
                     std::mt19937_64& init_rng) {
  Learner l;
  l.kind = kind;
  const int critic_k = kind == AgentKind::Sac ? 2 : cfg.ensemble_size;
  const int actor_k = kind == AgentKind::Sac ? 1 : cfg.ensemble_size;
  const bool deterministic = kind == AgentKind::BootDqnP;
  l.critics = make_critic_ensemble(ds, da, cfg.hidden, critic_k, cfg.gamma, cfg.tau,
                                   cfg.lr, init_rng);
  if (kind == AgentKind::BootDqnP)
    for (int k = 0; k < critic_k; ++k)
      l.priors.push_back(make_mlp({ds + da, cfg.hidden, cfg.hidden, 1}, Activation::CReLU,
                                  init_rng));
  l.actor = make_actor(ds, da, cfg.hidden, actor_k, deterministic, init_rng);
  l.trunk_adam = make_adam(l.actor.trunk, cfg.lr);
  for (const auto& head : l.actor.heads) l.head_adam.push_back(make_adam(head, cfg.lr));
  l.tuner.target_entropy = -static_cast<double>(da);
  l.tuner.lr = cfg.lr;
  l.selector.psr = cfg.psr;
  l.selector.K = actor_k;
  return l;
}

// One gradient phase: critics, then actor, then alpha, then targets.
CriticLossBreakdown gradient_phase(Learner& l, const TrainConfig& cfg, ReplayBuffer& buffer,
                                   std::mt19937_64& replay_rng, std::mt19937_64& mask_rng,
                                   std::mt19937_64& target_rng, std::mt19937_64& act_rng) {
  const Minibatch batch = buffer.sample(cfg.batch_size, replay_rng);
  const int critic_k = l.critics.K;
  const double alpha = l.tuner.alpha();
  const PriorConfig prior{cfg.sigma0_sq};

  Eigen::MatrixXd next_actions;
  Eigen::VectorXd next_logprobs;
  sample_actions_batch(l.actor, l.selector.active_head, batch.s_next, target_rng,
                       next_actions, next_logprobs);

  CriticLossBreakdown breakdown;
  std::vector<MlpGrads> member_grads;
  switch (l.kind) {
    case AgentKind::Pbac: {
      const BootstrapMask mask =
          draw_mask(batch.size(), critic_k, cfg.kappa, mask_rng);
      breakdown = pbac_loss(l.critics, batch, mask, next_actions, next_logprobs, alpha,
                            prior, &member_grads);
      break;
    }
    case AgentKind::BootDqnP: {
      const BootstrapMask mask =
          draw_mask(batch.size(), critic_k, cfg.kappa, mask_rng);
      breakdown.total = bootdqnp_loss(l.critics, l.priors, cfg.prior_scale, batch, mask,
                                      next_actions, &member_grads);
      break;
    }
    case AgentKind::Sac:
      breakdown.total = sac_critic_loss(l.critics, batch, next_actions, next_logprobs,
                                        alpha, &member_grads);
      break;
  }
  for (int k = 0; k < critic_k; ++k)
    adam_step(l.critics.members[k], member_grads[k], l.critics.adam[k]);

  MlpGrads trunk_grads;
  std::vector<MlpGrads> head_grads;
  Eigen::VectorXd actor_logprobs;
  if (l.kind == AgentKind::BootDqnP) {
    actor_loss_deterministic(l.actor, l.critics, l.priors, cfg.prior_scale, batch.s,
                             &trunk_grads, &head_grads);
  } else {
    actor_loss(l.actor, l.critics, batch.s, alpha, act_rng, &trunk_grads, &head_grads,
               &actor_logprobs);
  }
  adam_step(l.actor.trunk, trunk_grads, l.trunk_adam);
  for (size_t k = 0; k < l.actor.heads.size(); ++k)
    adam_step(l.actor.heads[k], head_grads[k], l.head_adam[k]);

  if (l.kind != AgentKind::BootDqnP) alpha_update(l.tuner, actor_logprobs);
  update_targets(l.critics);
  return breakdown;
}

// Diagnostic bound terms on a fresh batch; targets supply the Bellman values.
BoundRecord bound_record(const Learner& l, const TrainConfig& cfg, ReplayBuffer& buffer,
                         long step, std::mt19937_64& diag_rng) {
  const Minibatch batch = buffer.sample(cfg.batch_size, diag_rng);
  Eigen::MatrixXd next_actions;
  Eigen::VectorXd next_logprobs;
  sample_actions_batch(l.actor, l.selector.active_head, batch.s_next, diag_rng,
                       next_actions, next_logprobs);

  const Eigen::MatrixXd values = ensemble_values(l.critics, batch.s, batch.a, false);
  const Eigen::MatrixXd next_values =
      ensemble_values(l.critics, batch.s_next, next_actions, true);
  const int n = batch.size();
  const int K = l.critics.K;

  BoundRecord rec;
  rec.step = step;
  double risk = 0.0;
  double var_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double live = 1.0 - batch.done(i);
    double mean = 0.0;
    for (int k = 0; k < K; ++k) {
      const double residual =
          batch.r(i) + cfg.gamma * live * next_values(i, k) - values(i, k);
      risk += residual * residual;
      mean += values(i, k);
    }
    mean /= K;
    for (int k = 0; k < K; ++k)
      var_sum += (values(i, k) - mean) * (values(i, k) - mean) / K;
  }
  rec.empirical_risk = risk / (static_cast<double>(n) * K);
  rec.variance_term = var_sum / n;
  rec.kl = kl_term(batch, l.critics, next_actions, PriorConfig{cfg.sigma0_sq});

  BoundDiagnostics d;
  d.empirical_risk = rec.empirical_risk;
  d.kl = rec.kl;
  d.variance_term = rec.variance_term;
  d.lambda_bar = cfg.lambda_bar;
  d.B = bound_B(cfg.reward_bound, cfg.gamma);
  d.delta = cfg.delta;
  d.n = n;
  rec.rhs = bound_rhs(d, cfg.gamma);
  return rec;
}

TrainLog run_training(AgentKind kind, const TrainConfig& cfg) {
  cfg.validate();
  RngStreams streams(cfg.seed);
  auto env_rng = streams.stream("env");
  auto init_rng = streams.stream("init");
  auto mask_rng = streams.stream("masks");
  auto action_rng = streams.stream("action");
  auto head_rng = streams.stream("head");
  auto replay_rng = streams.stream("replay");
  auto eval_rng = streams.stream("eval");
  auto target_rng = streams.stream("target_noise");
  auto diag_rng = streams.stream("diag");

  auto env = make_env(cfg.env);
  auto eval_env = make_env(cfg.env);
  const int ds = env->obs_dim();
  const int da = env->action_dim();
  Learner learner = make_learner(kind, cfg, ds, da, init_rng);
  ReplayBuffer buffer(cfg.buffer_capacity);

  // Evaluation redraws the head per episode and acts on tanh(mean).
  int eval_head = 0;
  EvalPolicy eval_policy;
  eval_policy.on_episode_start = [&](std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, learner.selector.K - 1);
    eval_head = pick(rng);
  };
  eval_policy.act = [&](const Observation& obs) {
    return sample_action(learner.actor, eval_head, obs, eval_rng, true).action;
  };

  TrainLog log;
  log.steps.reserve(cfg.total_steps);
  Observation obs = env->reset(env_rng);
  double episode_return = 0.0;
  double last_episode_return = 0.0;
  std::uniform_real_distribution<double> uniform_action(-1.0, 1.0);

  for (long step = 1; step <= cfg.total_steps; ++step) {
    const int head = select_head(learner.selector, head_rng);
    const bool warming_up = step <= cfg.warmup_steps;

    ActionVec action(da);
    if (warming_up) {
      for (int j = 0; j < da; ++j) action(j) = uniform_action(action_rng);
    } else {
      action = sample_action(learner.actor, head, obs, action_rng).action;
    }
    action = clamp_action(action);

    const StepResult res = env->step(action);
    // Truncation is non-terminal for bootstrapping.
    buffer.push({obs, action, res.reward, res.next_obs, res.done});
    episode_return += res.reward;
    if (res.done || res.truncated) {
      last_episode_return = episode_return;
      episode_return = 0.0;
      obs = env->reset(env_rng);
    } else {
      obs = res.next_obs;
    }

    if (step % cfg.visit_every == 0)
      log.visits.push_back({step, obs(cfg.visit_dim_a), obs(cfg.visit_dim_b)});

    CriticLossBreakdown breakdown;
    if (!warming_up) {
      try {
        for (int phase = 0; phase < cfg.replay_ratio; ++phase) {
          breakdown = gradient_phase(learner, cfg, buffer, replay_rng, mask_rng,
                                     target_rng, action_rng);
          log.gradient_phases += 1;
        }
      } catch (const NumericError& e) {
        log.aborted = true;
        log.abort_reason = e.what();
        log.steps.push_back({step, last_episode_return, breakdown, learner.tuner.alpha(),
                             head});
        break;
      }
    }
    log.steps.push_back({step, last_episode_return, breakdown, learner.tuner.alpha(),
                         head});

    if (step % cfg.eval_every == 0) {
      const std::vector<double> returns =
          evaluate(eval_policy, *eval_env, cfg.eval_episodes, eval_rng);
      double mean = 0.0;
      for (double r : returns) mean += r;
      mean /= returns.size();
      log.evals.push_back({step, mean, returns});
      if (buffer.size() > 0)
        log.bounds.push_back(bound_record(learner, cfg, buffer, step, diag_rng));
    }
  }
  return log;
}

}  // namespace

TrainLog train_pbac(const TrainConfig& cfg) { return run_training(AgentKind::Pbac, cfg); }

TrainLog train_bootdqnp(const TrainConfig& cfg) {
  return run_training(AgentKind::BootDqnP, cfg);
}

TrainLog train_sac_baseline(const TrainConfig& cfg) {
  return run_training(AgentKind::Sac, cfg);
}

TrainLog train(const TrainConfig& cfg) { return run_training(parse_agent(cfg.agent), cfg); }

}  // namespace pbac
