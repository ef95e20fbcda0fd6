#include "pbac/verify.hpp"

#include <cmath>
#include <random>

#include "pbac/actor.hpp"
#include "pbac/critic.hpp"
#include "pbac/oracle.hpp"

namespace pbac {

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

std::vector<CheckResult> run_oracle_suite(int random_mdps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double gammas[] = {0.5, 0.9, 0.99};

  CheckResult identity{"td-risk identity, general chains", true, 0.0};
  CheckResult fixed_point{"fixed-point residual", true, 0.0};
  CheckResult contraction{"bellman contraction", true, 0.0};
  CheckResult value_gap{"value-gap bounds", true, 0.0};
  CheckResult iid_form{"td-risk identity, i.i.d. chains", true, 0.0};
  CheckResult swap_failure{"i.i.d. form fails on the swap chain", false, 0.0};

  std::uniform_int_distribution<int> size_pick(2, 8);
  std::uniform_int_distribution<int> ensemble_pick(1, 4);
  for (int i = 0; i < random_mdps; ++i) {
    const FiniteMdp m = random_mdp(size_pick(rng), gammas[i % 3], rng);
    m.validate();
    const int S = m.states();

    std::vector<ValueVector> ensemble;
    const int K = ensemble_pick(rng);
    for (int k = 0; k < K; ++k) {
      ValueVector x(S);
      for (int s = 0; s < S; ++s) x(s) = gauss(rng);
      ensemble.push_back(x);
    }

    const Lemma1Report l1 = lemma1_checks(m, ensemble);
    identity.worst = std::max(identity.worst, l1.general_max_diff);
    identity.passed = identity.passed && l1.general_ok;

    const ValueVector q = q_pi_exact(m);
    const double residual = (bellman_apply(m, q) - q).cwiseAbs().maxCoeff();
    fixed_point.worst = std::max(fixed_point.worst, residual);
    fixed_point.passed = fixed_point.passed && residual < 1e-10;

    ValueVector q1(S), q2(S);
    for (int s = 0; s < S; ++s) {
      q1(s) = gauss(rng);
      q2(s) = gauss(rng);
    }
    contraction.passed = contraction.passed && contraction_check(m, q1, q2);

    const Lemma4Report l4 = lemma4_theorem_check(m, ensemble);
    value_gap.worst =
        std::max({value_gap.worst, l4.member_max_slack, l4.ensemble_slack});
    value_gap.passed = value_gap.passed && l4.members_ok && l4.ensemble_ok;

    const FiniteMdp iid = random_identical_rows_mdp(size_pick(rng), gammas[i % 3], rng);
    std::vector<ValueVector> iid_ensemble;
    for (int k = 0; k < K; ++k) {
      ValueVector x(iid.states());
      for (int s = 0; s < iid.states(); ++s) x(s) = gauss(rng);
      iid_ensemble.push_back(x);
    }
    const Lemma1Report rep = lemma1_checks(iid, iid_ensemble);
    iid_form.worst = std::max(iid_form.worst, rep.iid_max_diff);
    iid_form.passed = iid_form.passed && rep.iid_ok;
  }

  // Deterministic 2-state swap chain: next states are not i.i.d. draws from
  // the stationary distribution, so the marginal-variance form must break
  // while the general identity still holds.
  FiniteMdp swap;
  swap.P.resize(2, 2);
  swap.P << 0.0, 1.0, 1.0, 0.0;
  swap.r = Eigen::Vector2d(0.0, 0.0);
  swap.gamma = 0.5;
  const Lemma1Report swap_rep = lemma1_checks(swap, {Eigen::Vector2d(0.0, 1.0)});
  swap_failure.worst = swap_rep.iid_max_diff;
  swap_failure.passed = swap_rep.general_ok && !swap_rep.iid_ok;

  return {identity, fixed_point, contraction, value_gap, iid_form, swap_failure};
}

namespace {

// All tunable blocks of one network, in a fixed order.
std::vector<double*> param_pointers(MlpParams& p) {
  std::vector<double*> out;
  for (auto& layer : p.layers) {
    for (int i = 0; i < layer.weight.size(); ++i) out.push_back(layer.weight.data() + i);
    for (int i = 0; i < layer.bias.size(); ++i) out.push_back(layer.bias.data() + i);
    for (int i = 0; i < layer.ln_gain.size(); ++i) out.push_back(layer.ln_gain.data() + i);
    for (int i = 0; i < layer.ln_shift.size(); ++i)
      out.push_back(layer.ln_shift.data() + i);
  }
  return out;
}

std::vector<const double*> grad_pointers(const MlpGrads& g) {
  std::vector<const double*> out;
  for (const auto& layer : g.layers) {
    for (int i = 0; i < layer.weight.size(); ++i) out.push_back(layer.weight.data() + i);
    for (int i = 0; i < layer.bias.size(); ++i) out.push_back(layer.bias.data() + i);
    for (int i = 0; i < layer.ln_gain.size(); ++i) out.push_back(layer.ln_gain.data() + i);
    for (int i = 0; i < layer.ln_shift.size(); ++i)
      out.push_back(layer.ln_shift.data() + i);
  }
  return out;
}

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

Minibatch random_batch(int n, int ds, int da, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Minibatch b;
  b.s.resize(n, ds);
  b.a.resize(n, da);
  b.r.resize(n);
  b.s_next.resize(n, ds);
  b.done.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < ds; ++j) {
      b.s(i, j) = gauss(rng);
      b.s_next(i, j) = gauss(rng);
    }
    for (int j = 0; j < da; ++j) b.a(i, j) = std::tanh(gauss(rng));
    b.r(i) = gauss(rng);
    b.done(i) = unif(rng) < 0.2 ? 1.0 : 0.0;
  }
  return b;
}

CriticEnsemble small_ensemble(int ds, int da, int K, double gamma, std::mt19937_64& rng) {
  CriticEnsemble ens;
  ens.K = K;
  ens.gamma = gamma;
  for (int k = 0; k < K; ++k) {
    ens.members.push_back(make_mlp({ds + da, 3, 1}, Activation::CReLU, rng));
    ens.targets.push_back(make_mlp({ds + da, 3, 1}, Activation::CReLU, rng));
  }
  return ens;
}

// Checks d loss / d theta for every member parameter against central
// differences of `loss_fn` (which must re-evaluate from current parameters).
template <typename LossFn, typename GradFn>
double check_member_grads(std::vector<MlpParams>& members, LossFn loss_fn,
                          GradFn grad_fn) {
  std::vector<MlpGrads> grads;
  grad_fn(&grads);
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (size_t k = 0; k < members.size(); ++k) {
    auto params = param_pointers(members[k]);
    const auto analytic = grad_pointers(grads[k]);
    for (size_t p = 0; p < params.size(); ++p) {
      const double saved = *params[p];
      *params[p] = saved + h;
      const double up = loss_fn();
      *params[p] = saved - h;
      const double down = loss_fn();
      *params[p] = saved;
      worst = std::max(worst, rel_error(*analytic[p], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

double check_pbac_config(std::mt19937_64& rng) {
  const int ds = 3, da = 2, K = 3, n = 3;
  CriticEnsemble ens = small_ensemble(ds, da, K, 0.9, rng);
  const Minibatch batch = random_batch(n, ds, da, rng);
  const BootstrapMask mask = draw_mask(n, K, 0.3, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd next_actions(n, da);
  Eigen::VectorXd next_logprobs(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < da; ++j) next_actions(i, j) = std::tanh(gauss(rng));
    next_logprobs(i) = gauss(rng);
  }
  const PriorConfig prior{1.5};
  const double alpha = 0.2;
  auto loss_fn = [&] {
    return pbac_loss(ens, batch, mask, next_actions, next_logprobs, alpha, prior).total;
  };
  auto grad_fn = [&](std::vector<MlpGrads>* g) {
    pbac_loss(ens, batch, mask, next_actions, next_logprobs, alpha, prior, g);
  };
  return check_member_grads(ens.members, loss_fn, grad_fn);
}

double check_bootdqnp_config(std::mt19937_64& rng) {
  const int ds = 3, da = 2, K = 3, n = 3;
  CriticEnsemble ens = small_ensemble(ds, da, K, 0.9, rng);
  std::vector<MlpParams> priors;
  for (int k = 0; k < K; ++k)
    priors.push_back(make_mlp({ds + da, 3, 1}, Activation::CReLU, rng));
  const Minibatch batch = random_batch(n, ds, da, rng);
  const BootstrapMask mask = draw_mask(n, K, 0.3, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd next_actions(n, da);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < da; ++j) next_actions(i, j) = std::tanh(gauss(rng));
  const double beta = 2.0;
  auto loss_fn = [&] {
    return bootdqnp_loss(ens, priors, beta, batch, mask, next_actions);
  };
  auto grad_fn = [&](std::vector<MlpGrads>* g) {
    bootdqnp_loss(ens, priors, beta, batch, mask, next_actions, g);
  };
  return check_member_grads(ens.members, loss_fn, grad_fn);
}

double check_actor_config(std::mt19937_64& rng) {
  const int ds = 3, da = 2, K = 2, n = 3;
  CriticEnsemble ens = small_ensemble(ds, da, K, 0.9, rng);
  ActorNet actor;
  actor.action_dim = da;
  actor.trunk = make_mlp({ds, 3}, Activation::CReLU, rng);
  for (int k = 0; k < K; ++k)
    actor.heads.push_back(make_mlp({6, 2 * da}, Activation::CReLU, rng));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd s_batch(n, ds);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < ds; ++j) s_batch(i, j) = gauss(rng);
  const double alpha = 0.2;
  const std::uint64_t noise_seed = rng();

  // The loss draws its own action noise; a fixed seed keeps the draws
  // identical across the finite-difference evaluations.
  auto loss_fn = [&] {
    std::mt19937_64 noise(noise_seed);
    return actor_loss(actor, ens, s_batch, alpha, noise, nullptr, nullptr);
  };
  MlpGrads trunk_grads;
  std::vector<MlpGrads> head_grads;
  {
    std::mt19937_64 noise(noise_seed);
    actor_loss(actor, ens, s_batch, alpha, noise, &trunk_grads, &head_grads);
  }

  constexpr double h = 1e-5;
  double worst = 0.0;
  auto check_net = [&](MlpParams& net, const MlpGrads& grads) {
    auto params = param_pointers(net);
    const auto analytic = grad_pointers(grads);
    for (size_t p = 0; p < params.size(); ++p) {
      const double saved = *params[p];
      *params[p] = saved + h;
      const double up = loss_fn();
      *params[p] = saved - h;
      const double down = loss_fn();
      *params[p] = saved;
      worst = std::max(worst, rel_error(*analytic[p], (up - down) / (2.0 * h)));
    }
  };
  check_net(actor.trunk, trunk_grads);
  for (int k = 0; k < K; ++k) check_net(actor.heads[k], head_grads[k]);
  return worst;
}

}  // namespace

std::vector<CheckResult> run_gradient_checks(int configs, std::uint64_t seed,
                                             double tolerance) {
  std::mt19937_64 rng(seed);
  const int per = configs / 3;
  CheckResult critic{"critic loss gradients", true, 0.0};
  CheckResult actor{"actor loss gradients", true, 0.0};
  CheckResult boot{"prior-perturbed td gradients", true, 0.0};
  for (int i = 0; i < configs - 2 * per; ++i)
    critic.worst = std::max(critic.worst, check_pbac_config(rng));
  for (int i = 0; i < per; ++i)
    actor.worst = std::max(actor.worst, check_actor_config(rng));
  for (int i = 0; i < per; ++i)
    boot.worst = std::max(boot.worst, check_bootdqnp_config(rng));
  critic.passed = critic.worst < tolerance;
  actor.passed = actor.worst < tolerance;
  boot.passed = boot.worst < tolerance;
  return {critic, actor, boot};
}

namespace {

MlpParams constant_net(int in, double value) {
  MlpParams p;
  p.activation = Activation::CReLU;
  DenseLayer l;
  l.weight = Eigen::MatrixXd::Zero(1, in);
  l.bias = Eigen::VectorXd::Constant(1, value);
  l.ln_gain = Eigen::VectorXd::Ones(1);
  l.ln_shift = Eigen::VectorXd::Zero(1);
  p.layers.push_back(l);
  return p;
}

}  // namespace

std::vector<CheckResult> run_hand_value_checks() {
  // Two constant critics X = (0, 2) with targets Xbar = (2, 0), one
  // transition with r = 1, gamma = 0.5, unit prior variance, alpha = 0.
  CriticEnsemble ens;
  ens.K = 2;
  ens.gamma = 0.5;
  ens.members = {constant_net(3, 0.0), constant_net(3, 2.0)};
  ens.targets = {constant_net(3, 2.0), constant_net(3, 0.0)};

  Minibatch batch;
  batch.s = Eigen::MatrixXd::Zero(1, 2);
  batch.a = Eigen::MatrixXd::Zero(1, 1);
  batch.r = Eigen::VectorXd::Constant(1, 1.0);
  batch.s_next = Eigen::MatrixXd::Zero(1, 2);
  batch.done = Eigen::VectorXd::Zero(1);
  const BootstrapMask mask = Eigen::MatrixXd::Ones(1, 2);
  const Eigen::MatrixXd next_actions = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::VectorXd next_logprobs = Eigen::VectorXd::Zero(1);
  const PriorConfig prior{1.0};

  const CriticLossBreakdown b =
      pbac_loss(ens, batch, mask, next_actions, next_logprobs, 0.0, prior);
  const double kl = kl_term(batch, ens, next_actions, prior);

  const double ln2 = std::log(2.0);
  std::vector<CheckResult> out;
  auto push = [&out](const std::string& name, double got, double want, double tol) {
    out.push_back({name, std::abs(got - want) < tol, std::abs(got - want)});
  };
  push("diversity term", b.diversity, 2.5, 1e-9);
  push("coherence term", b.coherence, 2.5, 1e-9);
  push("propagation term", b.propagation, -0.75 * ln2, 1e-9);
  push("loss total", b.total, 5.0 - 0.75 * ln2, 1e-9);
  push("kl diagnostic", kl, (10.0 - 2.0 * ln2) / 4.0, 1e-9);
  return out;
}

}  // namespace pbac
