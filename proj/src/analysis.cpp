#include "pbac/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pbac {

double iqm(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("iqm: empty list");
  std::sort(values.begin(), values.end());
  const size_t drop = values.size() / 4;
  double sum = 0.0;
  for (size_t i = drop; i < values.size() - drop; ++i) sum += values[i];
  return sum / static_cast<double>(values.size() - 2 * drop);
}

double quantile_nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty list");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return values[rank - 1];
}

double aulc(const EvalCurve& curve) {
  if (curve.checkpoints.empty()) throw std::invalid_argument("aulc: empty curve");
  double sum = 0.0;
  for (const auto& [step, ret] : curve.checkpoints) sum += ret;
  return sum / static_cast<double>(curve.checkpoints.size());
}

namespace {

// Continued fraction for the regularized incomplete beta I_x(a, b)
// (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpmin) d = kFpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpmin) d = kFpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpmin) c = kFpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpmin) d = kFpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpmin) c = kFpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_sf(double t, double nu) {
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * reg_inc_beta(nu / 2.0, 0.5, x);
  return t >= 0.0 ? tail : 1.0 - tail;
}

TTestResult paired_ttest_onesided(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("paired_ttest: need equal lengths >= 2");
  const auto n = a.size();
  std::vector<double> diff(n);
  for (size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  double mean = 0.0;
  for (double d : diff) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double var = ss / static_cast<double>(n - 1);
  TTestResult out;
  if (var == 0.0) {
    out.degenerate = true;
    out.p = mean > 0.0 ? 0.0 : 1.0;
    out.t = mean > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return out;
  }
  out.t = mean / std::sqrt(var / static_cast<double>(n));
  out.p = student_t_sf(out.t, static_cast<double>(n - 1));
  return out;
}

double bound_B(double reward_bound, double gamma) {
  const double g = 1.0 - gamma;
  return reward_bound * reward_bound / (g * g);
}

double bound_rhs(const BoundDiagnostics& d, double gamma) {
  if (!(d.delta > 0.0 && d.delta <= 1.0))
    throw std::invalid_argument("bound_rhs: delta not in (0,1]");
  const double g = 1.0 - gamma;
  const double slack = d.nu * d.lambda_bar * d.B * d.B / (8.0 * static_cast<double>(d.n));
  const double kl_part = (d.kl - std::log(d.delta)) / d.nu;
  return (d.empirical_risk + slack + kl_part - gamma * gamma * d.variance_term) / (g * g);
}

}  // namespace pbac
