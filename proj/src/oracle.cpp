#include "pbac/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace pbac {

void FiniteMdp::validate() const {
  if (P.rows() != states() || P.cols() != states())
    throw std::invalid_argument("FiniteMdp: P must be S x S");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("FiniteMdp: gamma must be in [0, 1)");
  for (int i = 0; i < states(); ++i) {
    if (std::abs(P.row(i).sum() - 1.0) > kOracleTol)
      throw std::invalid_argument("FiniteMdp: row does not sum to 1");
    if ((P.row(i).array() < 0.0).any())
      throw std::invalid_argument("FiniteMdp: negative transition probability");
  }
}

Eigen::VectorXd stationary_dist(const FiniteMdp& m, long max_iters) {
  const int S = m.states();
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(S, 1.0 / S);
  for (long it = 0; it < max_iters; ++it) {
    Eigen::VectorXd next = (pi.transpose() * m.P).transpose();
    next /= next.sum();
    const double diff = (next - pi).cwiseAbs().sum();
    pi = next;
    if (diff < kOracleTol) return pi;
  }
  throw std::runtime_error("stationary_dist: power iteration did not converge");
}

ValueVector bellman_apply(const FiniteMdp& m, const ValueVector& x) {
  return m.r + m.gamma * (m.P * x);
}

ValueVector q_pi_exact(const FiniteMdp& m) {
  const int S = m.states();
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(S, S) - m.gamma * m.P;
  return A.colPivHouseholderQr().solve(m.r);
}

double weighted_norm(const Eigen::VectorXd& w, const Eigen::VectorXd& v) {
  return std::sqrt(w.dot(v.cwiseProduct(v)));
}

double ltilde_exact(const FiniteMdp& m, const std::vector<ValueVector>& ensemble) {
  const Eigen::VectorXd pi = stationary_dist(m);
  const int S = m.states();
  double total = 0.0;
  for (const auto& x : ensemble) {
    for (int s = 0; s < S; ++s) {
      double inner = 0.0;
      for (int t = 0; t < S; ++t) {
        const double residual = m.r(s) + m.gamma * x(t) - x(s);
        inner += m.P(s, t) * residual * residual;
      }
      total += pi(s) * inner;
    }
  }
  return total / static_cast<double>(ensemble.size());
}

namespace {

// gamma^2 * E_{s ~ Ppi} Var_{s' ~ P(s, .)} X(s').
double conditional_variance_term(const FiniteMdp& m, const Eigen::VectorXd& pi,
                                 const ValueVector& x) {
  double acc = 0.0;
  for (int s = 0; s < m.states(); ++s) {
    const double mean = m.P.row(s).dot(x);
    const double second = m.P.row(s).dot(x.cwiseProduct(x));
    acc += pi(s) * (second - mean * mean);
  }
  return m.gamma * m.gamma * acc;
}

// gamma^2 * Var_{s ~ Ppi} X(s).
double marginal_variance_term(const FiniteMdp& m, const Eigen::VectorXd& pi,
                              const ValueVector& x) {
  const double mean = pi.dot(x);
  const double second = pi.dot(x.cwiseProduct(x));
  return m.gamma * m.gamma * (second - mean * mean);
}

}  // namespace

Lemma1Report lemma1_checks(const FiniteMdp& m, const std::vector<ValueVector>& ensemble) {
  const Eigen::VectorXd pi = stationary_dist(m);
  const double ltilde = ltilde_exact(m, ensemble);

  double general = 0.0, iid = 0.0;
  for (const auto& x : ensemble) {
    const Eigen::VectorXd residual = bellman_apply(m, x) - x;
    const double det_part = pi.dot(residual.cwiseProduct(residual));
    general += det_part + conditional_variance_term(m, pi, x);
    iid += det_part + marginal_variance_term(m, pi, x);
  }
  general /= static_cast<double>(ensemble.size());
  iid /= static_cast<double>(ensemble.size());

  Lemma1Report rep;
  rep.general_max_diff = std::abs(ltilde - general);
  rep.general_ok = rep.general_max_diff < kOracleTol;
  rep.iid_max_diff = std::abs(ltilde - iid);
  rep.iid_ok = rep.iid_max_diff < kOracleTol;
  return rep;
}

bool contraction_check(const FiniteMdp& m, const ValueVector& q1, const ValueVector& q2) {
  const Eigen::VectorXd pi = stationary_dist(m);
  const double lhs = weighted_norm(pi, bellman_apply(m, q1) - bellman_apply(m, q2));
  const double rhs = m.gamma * weighted_norm(pi, q1 - q2);
  return lhs <= rhs + kOracleTol;
}

Lemma4Report lemma4_theorem_check(const FiniteMdp& m,
                                  const std::vector<ValueVector>& ensemble) {
  const Eigen::VectorXd pi = stationary_dist(m);
  const ValueVector q = q_pi_exact(m);
  const double inv_gap = 1.0 / (1.0 - m.gamma);

  Lemma4Report rep;
  double sq_lhs = 0.0, sq_rhs = 0.0;
  for (const auto& x : ensemble) {
    const double value_gap = weighted_norm(pi, x - q);
    const double residual = weighted_norm(pi, bellman_apply(m, x) - x);
    rep.member_max_slack =
        std::max(rep.member_max_slack, value_gap - residual * inv_gap);
    sq_lhs += value_gap * value_gap;
    sq_rhs += residual * residual * inv_gap * inv_gap;
  }
  const auto K = static_cast<double>(ensemble.size());
  rep.ensemble_slack = sq_lhs / K - sq_rhs / K;
  rep.members_ok = rep.member_max_slack <= kOracleTol;
  rep.ensemble_ok = rep.ensemble_slack <= kOracleTol;
  return rep;
}

namespace {

Eigen::VectorXd dirichlet_row(int S, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Eigen::VectorXd row(S);
  for (int i = 0; i < S; ++i) row(i) = expo(rng);
  return row / row.sum();
}

}  // namespace

FiniteMdp random_mdp(int S, double gamma, std::mt19937_64& rng) {
  FiniteMdp m;
  m.gamma = gamma;
  m.P.resize(S, S);
  m.r.resize(S);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < S; ++i) {
    m.P.row(i) = dirichlet_row(S, rng).transpose();
    m.r(i) = unif(rng);
  }
  return m;
}

FiniteMdp random_identical_rows_mdp(int S, double gamma, std::mt19937_64& rng) {
  FiniteMdp m;
  m.gamma = gamma;
  m.P.resize(S, S);
  m.r.resize(S);
  const Eigen::VectorXd row = dirichlet_row(S, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < S; ++i) {
    m.P.row(i) = row.transpose();
    m.r(i) = unif(rng);
  }
  return m;
}

}  // namespace pbac
