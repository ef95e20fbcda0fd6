#pragma once

#include <string>
#include <utility>
#include <vector>

namespace pbac {

struct EvalCurve {
  std::vector<std::pair<long, double>> checkpoints;  // (step, return), steps increasing
};

// Sort, drop floor(0.25 n) from each end, mean the remainder.
double iqm(std::vector<double> values);

// Nearest-rank order statistic for q in [0, 1].
double quantile_nearest_rank(std::vector<double> values, double q);

// Mean of checkpoint returns across the curve.
double aulc(const EvalCurve& curve);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool degenerate = false;  // zero-variance differences
};

// One-sided paired t-test of H0: mean(a - b) <= 0 against mean(a - b) > 0.
TTestResult paired_ttest_onesided(const std::vector<double>& a, const std::vector<double>& b);

// Upper-tail probability P(T > t) for Student's t with nu degrees of freedom,
// via the regularized incomplete beta continued fraction.
double student_t_sf(double t, double nu);

struct BoundDiagnostics {
  double empirical_risk = 0.0;
  double kl = 0.0;
  double variance_term = 0.0;  // E Var, without the gamma^2 factor
  double nu = 1.0;
  double lambda_bar = 1.0;
  double B = 0.0;  // R^2 / (1 - gamma)^2
  double delta = 0.05;
  long n = 1;
  double rhs = 0.0;
};

double bound_B(double reward_bound, double gamma);

// rhs = (risk + nu*lambda_bar*B^2/(8n) + (kl - log delta)/nu
//        - gamma^2 * variance_term) / (1 - gamma)^2
double bound_rhs(const BoundDiagnostics& d, double gamma);

}  // namespace pbac
