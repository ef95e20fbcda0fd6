#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

namespace pbac {

// Policy-induced finite chain: P row-stochastic, rewards indexed by state.
struct FiniteMdp {
  Eigen::MatrixXd P;  // S x S
  Eigen::VectorXd r;  // S
  double gamma = 0.9;

  int states() const { return static_cast<int>(r.size()); }
  // Rows sum to 1 within 1e-12, entries nonnegative, gamma in [0, 1).
  void validate() const;
};

using ValueVector = Eigen::VectorXd;

constexpr double kOracleTol = 1e-12;

// Left eigenvector for eigenvalue 1 by power iteration to 1e-12 in l1.
Eigen::VectorXd stationary_dist(const FiniteMdp& m, long max_iters = 1000000);

// Bellman operator r + gamma * P * x.
ValueVector bellman_apply(const FiniteMdp& m, const ValueVector& x);

// Unique fixed point of the Bellman operator, by direct linear solve.
ValueVector q_pi_exact(const FiniteMdp& m);

// sqrt of sum_s w(s) v(s)^2.
double weighted_norm(const Eigen::VectorXd& w, const Eigen::VectorXd& v);

// Exact stochastic TD risk of a uniform mixture of value vectors:
// (1/K) sum_X sum_s Ppi(s) sum_s' P(s'|s) (r(s) + gamma X(s') - X(s))^2.
double ltilde_exact(const FiniteMdp& m, const std::vector<ValueVector>& ensemble);

struct Lemma1Report {
  double general_max_diff = 0.0;  // mid-proof identity, any chain
  bool general_ok = false;
  double iid_max_diff = 0.0;  // stated lemma form, identical-rows chains
  bool iid_ok = false;
};

// (a) Ltilde = E[ ||TX - X||^2_Ppi + gamma^2 E_s Var_{s'|s} X(s') ] on any
// chain; (b) the same with Var_{s ~ Ppi}(X), exact only when every row of P
// equals Ppi. Both compared to 1e-12.
Lemma1Report lemma1_checks(const FiniteMdp& m, const std::vector<ValueVector>& ensemble);

// ||T q1 - T q2||_Ppi <= gamma ||q1 - q2||_Ppi + 1e-12.
bool contraction_check(const FiniteMdp& m, const ValueVector& q1, const ValueVector& q2);

struct Lemma4Report {
  double member_max_slack = 0.0;  // max violation of the per-member norm bound
  bool members_ok = false;
  double ensemble_slack = 0.0;  // violation of the averaged squared bound
  bool ensemble_ok = false;
};

// Per member ||X - Q||_Ppi <= ||TX - X||_Ppi / (1 - gamma), and the uniform
// mixture in squared form with 1/(1-gamma)^2.
Lemma4Report lemma4_theorem_check(const FiniteMdp& m,
                                  const std::vector<ValueVector>& ensemble);

// Dirichlet(1,...,1) rows, rewards uniform on [0,1]. All entries positive, so
// the chain is irreducible and aperiodic.
FiniteMdp random_mdp(int S, double gamma, std::mt19937_64& rng);

// Every row equal to one Dirichlet draw; the i.i.d. sampling regime of the
// stated lemma.
FiniteMdp random_identical_rows_mdp(int S, double gamma, std::mt19937_64& rng);

}  // namespace pbac
