#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pbac/analysis.hpp"

using namespace pbac;

TEST_CASE("interquartile mean") {
  CHECK(iqm({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}) == doctest::Approx(5.5).epsilon(1e-15));
  CHECK(iqm({4.2}) == 4.2);
  CHECK(iqm({3, 3, 3, 3, 3}) == 3.0);
  CHECK_THROWS(iqm({}));

  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss;
  std::vector<double> values(17);
  for (auto& v : values) v = gauss(rng);
  const double m = iqm(values);
  CHECK(m >= *std::min_element(values.begin(), values.end()));
  CHECK(m <= *std::max_element(values.begin(), values.end()));
}

TEST_CASE("nearest-rank quantiles") {
  std::vector<double> v{10, 20, 30, 40};
  CHECK(quantile_nearest_rank(v, 0.25) == 10.0);
  CHECK(quantile_nearest_rank(v, 0.5) == 20.0);
  CHECK(quantile_nearest_rank(v, 0.75) == 30.0);
  CHECK(quantile_nearest_rank(v, 1.0) == 40.0);
  CHECK(quantile_nearest_rank({7.0}, 0.25) == 7.0);
}

TEST_CASE("area under the learning curve is the checkpoint mean") {
  EvalCurve curve;
  curve.checkpoints = {{100, 0.0}, {200, 10.0}, {300, 20.0}};
  CHECK(aulc(curve) == doctest::Approx(10.0).epsilon(1e-15));

  EvalCurve flat;
  for (int i = 1; i <= 5; ++i) flat.checkpoints.emplace_back(i * 100, 3.5);
  CHECK(aulc(flat) == 3.5);

  // Equally spaced checkpoints: the mean differs from the trapezoid integral
  // over the span only through the halved endpoint weights.
  EvalCurve c;
  c.checkpoints = {{0, 1.0}, {1, 3.0}, {2, 5.0}, {3, 8.0}};
  double trap = 0.0;
  for (size_t i = 0; i + 1 < c.checkpoints.size(); ++i)
    trap += 0.5 * (c.checkpoints[i].second + c.checkpoints[i + 1].second);
  trap /= 3.0;
  const double mean = aulc(c);
  const double endpoints = c.checkpoints.front().second + c.checkpoints.back().second;
  // mean = (sum)/m, trap = (sum - endpoints/2)/(m-1) for m checkpoints.
  CHECK(trap == doctest::Approx((mean * 4.0 - endpoints / 2.0) / 3.0).epsilon(1e-12));
  CHECK_THROWS(aulc(EvalCurve{}));
}

TEST_CASE("paired t-test values and degenerate paths") {
  const std::vector<double> b{0, 0, 0, 0, 0};
  const std::vector<double> a{1.2, 0.8, 1.0, 1.1, 0.9};
  const TTestResult r = paired_ttest_onesided(a, b);
  CHECK_FALSE(r.degenerate);
  CHECK(r.t == doctest::Approx(std::sqrt(200.0)).epsilon(1e-12));  // 14.142
  CHECK(r.p < 1e-3);

  const TTestResult same = paired_ttest_onesided(b, b);
  CHECK(same.degenerate);
  CHECK(same.p == 1.0);

  const std::vector<double> ones{1, 1, 1, 1};
  const TTestResult pos = paired_ttest_onesided(ones, {0, 0, 0, 0});
  CHECK(pos.degenerate);
  CHECK(pos.p == 0.0);

  CHECK_THROWS(paired_ttest_onesided({1.0}, {2.0}));
}

TEST_CASE("student t survival function sanity") {
  CHECK(student_t_sf(0.0, 4.0) == doctest::Approx(0.5).epsilon(1e-12));
  // Symmetric tails.
  CHECK(student_t_sf(2.0, 7.0) + student_t_sf(-2.0, 7.0) == doctest::Approx(1.0));
  // Large nu approaches the normal tail: P(T > 1.96) ~ 0.025.
  CHECK(student_t_sf(1.96, 1e6) == doctest::Approx(0.025).epsilon(1e-2));
  // Reference value: t with 4 dof, P(T > 2.776) = 0.025.
  CHECK(student_t_sf(2.776445, 4.0) == doctest::Approx(0.025).epsilon(1e-4));
}

namespace {

BoundDiagnostics worked_diag() {
  BoundDiagnostics d;
  d.empirical_risk = 2.0;
  d.kl = 0.0;
  d.variance_term = 0.0;
  d.nu = 1.0;
  d.lambda_bar = 3.0;
  d.delta = 0.05;
  d.n = 256;
  d.B = bound_B(1.0, 0.5);
  return d;
}

}  // namespace

TEST_CASE("bound arithmetic on the worked diagnostics") {
  const BoundDiagnostics d = worked_diag();
  CHECK(d.B == 4.0);
  const double want = (2.0 + 48.0 / 2048.0 - std::log(0.05)) / 0.25;
  CHECK(bound_rhs(d, 0.5) == doctest::Approx(want).epsilon(1e-12));
  CHECK(bound_rhs(d, 0.5) == doctest::Approx(20.0766790944).epsilon(1e-6));
}

TEST_CASE("bound limits and slopes") {
  BoundDiagnostics d = worked_diag();
  d.lambda_bar = 1.0;
  d.delta = 1.0;
  d.n = 1000000000L;
  CHECK(bound_rhs(d, 0.5) == doctest::Approx(2.0 / 0.25).epsilon(1e-6));

  // Affine slopes in kl and risk.
  BoundDiagnostics base = worked_diag();
  BoundDiagnostics kl_up = base;
  kl_up.kl += 1.0;
  CHECK(bound_rhs(kl_up, 0.5) - bound_rhs(base, 0.5) ==
        doctest::Approx(1.0 / (base.nu * 0.25)).epsilon(1e-12));
  BoundDiagnostics risk_up = base;
  risk_up.empirical_risk += 1.0;
  CHECK(bound_rhs(risk_up, 0.5) - bound_rhs(base, 0.5) ==
        doctest::Approx(1.0 / 0.25).epsilon(1e-12));

  // More ensemble variance strictly tightens the right-hand side.
  BoundDiagnostics var_up = base;
  var_up.variance_term = 1.0;
  CHECK(bound_rhs(var_up, 0.5) < bound_rhs(base, 0.5));

  BoundDiagnostics bad = base;
  bad.delta = 0.0;
  CHECK_THROWS(bound_rhs(bad, 0.5));
}
