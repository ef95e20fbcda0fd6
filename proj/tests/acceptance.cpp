// End-to-end acceptance suite. Each numbered criterion prints exactly one
// PASS/FAIL line; the process exits nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pbac/agent.hpp"
#include "pbac/analysis.hpp"
#include "pbac/critic.hpp"
#include "pbac/io.hpp"
#include "pbac/replay.hpp"
#include "pbac/verify.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("%s  criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// --- criterion 1: exact finite-chain oracle sweep -------------------------

void criterion_oracles() {
  const auto t0 = Clock::now();
  const auto results = pbac::run_oracle_suite(200);
  const double secs = seconds_since(t0);
  const bool ok = pbac::all_passed(results) && secs < 10.0;
  double worst = 0.0;
  for (const auto& r : results) worst = std::max(worst, r.worst);
  report(1, ok,
         fmt("finite-chain identity/contraction/value-gap sweep over 200 random "
             "chains, worst deviation %.3e, %.2fs (budget 10s)", worst, secs));
}

// --- criterion 2: hand-computed loss values -------------------------------

void criterion_hand_values() {
  const auto results = pbac::run_hand_value_checks();
  bool ok = true;
  double worst = 0.0;
  for (const auto& r : results) {
    ok = ok && r.passed && r.worst < 1e-9;
    worst = std::max(worst, r.worst);
  }
  report(2, ok,
         fmt("worked loss example (diversity 2.5, coherence 2.5, propagation "
             "-0.75 ln 2, total 4.480140, kl 2.153426), worst deviation %.3e "
             "(tolerance 1e-9)", worst));
}

// --- criterion 3: finite-difference gradient checks -----------------------

void criterion_gradients() {
  const auto t0 = Clock::now();
  const auto results = pbac::run_gradient_checks(100);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  for (const auto& r : results) worst = std::max(worst, r.worst);
  const bool ok = pbac::all_passed(results) && secs < 60.0;
  report(3, ok,
         fmt("analytic vs central-difference gradients over 100 configurations, "
             "worst relative error %.3e (tolerance 1e-4), %.2fs (budget 60s)",
             worst, secs));
}

// --- criterion 4: propagation coefficient identity ------------------------

void criterion_coefficient() {
  bool ok = true;
  for (double g : {0.0, 0.5, 0.99})
    ok = ok && ((2.0 * g * g + 1.0) / 2.0 == g * g + 0.5);
  report(4, ok,
         "(2*gamma^2+1)/2 == gamma^2 + 1/2 exactly for gamma in {0, 0.5, 0.99}");
}

// --- criterion 5: wide-prior limit reduces to the masked TD loss ----------

void criterion_limit_reduction() {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6, K = 4, ds = 3, da = 2;
    pbac::CriticEnsemble ens =
        pbac::make_critic_ensemble(ds, da, 8, K, 0.9, 5e-3, 3e-4, rng);
    pbac::Minibatch batch;
    batch.s = Eigen::MatrixXd::NullaryExpr(n, ds, [&] { return gauss(rng); });
    batch.a = Eigen::MatrixXd::NullaryExpr(n, da, [&] { return gauss(rng); });
    batch.s_next = Eigen::MatrixXd::NullaryExpr(n, ds, [&] { return gauss(rng); });
    batch.r = Eigen::VectorXd::NullaryExpr(n, [&] { return gauss(rng); });
    batch.done = Eigen::VectorXd::Zero(n);
    const pbac::BootstrapMask mask = pbac::draw_mask(n, K, 0.3, rng);
    const Eigen::MatrixXd next_a =
        Eigen::MatrixXd::NullaryExpr(n, da, [&] { return std::tanh(gauss(rng)); });
    const Eigen::VectorXd next_logp = Eigen::VectorXd::Zero(n);

    pbac::PriorConfig wide;
    wide.sigma0_sq = 1e12;
    const pbac::CriticLossBreakdown b =
        pbac::pbac_loss(ens, batch, mask, next_a, next_logp, /*alpha=*/0.0, wide);
    // Frozen priors are irrelevant at beta = 0; reuse the members.
    const double td =
        pbac::bootdqnp_loss(ens, ens.members, /*beta=*/0.0, batch, mask, next_a);
    worst = std::max(worst, std::abs((b.total - b.propagation) - td));
  }
  report(5, worst < 1e-9,
         fmt("sigma0^2=1e12, propagation removed: loss equals the masked "
             "per-member TD loss, worst gap %.3e (tolerance 1e-9)", worst));
}

// --- criterion 6: bound arithmetic ----------------------------------------

void criterion_bound() {
  pbac::BoundDiagnostics d;
  d.empirical_risk = 2.0;
  d.kl = 0.0;
  d.variance_term = 0.0;
  d.nu = 1.0;
  d.lambda_bar = 3.0;
  d.delta = 0.05;
  d.n = 256;
  d.B = pbac::bound_B(1.0, 0.5);
  const double got = pbac::bound_rhs(d, 0.5);
  const double want = (2.0 + 48.0 / 2048.0 - std::log(0.05)) / 0.25;
  const bool ok = std::abs(got - want) < 1e-6;
  report(6, ok,
         fmt("bound right-hand side on the worked diagnostics: %.10f vs "
             "hand-derived %.10f (tolerance 1e-6)", got, want));
}

// --- criterion 7: bootstrap mask statistics -------------------------------

void criterion_masks() {
  std::mt19937_64 rng(31);
  bool ok = true;
  std::string detail;
  for (double kappa : {0.01, 0.05}) {
    const pbac::BootstrapMask m = pbac::draw_mask(10000, 100, kappa, rng);
    const double rate = m.mean();
    ok = ok && std::abs(rate - (1.0 - kappa)) < 1e-3;
    detail += fmt("rate %.5f at kappa %.2f; ", rate, kappa);
  }
  // Consecutive gradient phases must not reuse a mask.
  std::size_t h1 = 0, h2 = 0;
  std::hash<double> hd;
  const pbac::BootstrapMask a = pbac::draw_mask(64, 10, 0.05, rng);
  const pbac::BootstrapMask b = pbac::draw_mask(64, 10, 0.05, rng);
  for (int i = 0; i < a.size(); ++i) {
    h1 = h1 * 1099511628211ULL + hd(a(i));
    h2 = h2 * 1099511628211ULL + hd(b(i));
  }
  ok = ok && h1 != h2;
  report(7, ok,
         fmt("%sconsecutive-draw hashes %s", detail.c_str(),
             h1 != h2 ? "differ" : "COLLIDE"));
}

// --- criterion 8: delayed-reward exploration experiment -------------------

pbac::TrainConfig experiment_config(const std::string& agent, std::uint64_t seed) {
  pbac::TrainConfig cfg;
  cfg.env = "pointmass-delayed";
  cfg.agent = agent;
  cfg.seed = seed;
  cfg.total_steps = 100000;
  cfg.batch_size = 32;
  cfg.hidden = 16;
  cfg.eval_every = 10000;
  cfg.eval_episodes = 10;
  return cfg;
}

void criterion_exploration() {
  std::vector<double> pbac_final, sac_final;
  int pbac_solved = 0, sac_solved = 0;
  double worst_secs = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const char* agent : {"pbac", "sac"}) {
      const auto t0 = Clock::now();
      const pbac::TrainLog log = pbac::train(experiment_config(agent, seed));
      const double secs = seconds_since(t0);
      worst_secs = std::max(worst_secs, secs);
      const double final_eval = log.evals.back().mean_return;
      std::printf("    %s seed %llu: final eval %.3f (%.0fs)\n", agent,
                  static_cast<unsigned long long>(seed), final_eval, secs);
      std::fflush(stdout);
      if (std::string(agent) == "pbac") {
        pbac_final.push_back(final_eval);
        pbac_solved += final_eval > 0.0;
      } else {
        sac_final.push_back(final_eval);
        sac_solved += final_eval > 0.0;
      }
    }
  }
  const pbac::TTestResult t = pbac::paired_ttest_onesided(pbac_final, sac_final);
  const double p = t.p;
  const bool ok = pbac_solved >= 7 && sac_solved <= 3 && p < 0.05 &&
                  worst_secs < 30.0 * 60.0;
  report(8, ok,
         fmt("pointmass-delayed 100k steps x 10 seeds: ensemble agent solved "
             "%d/10 (need >=7), soft-actor baseline %d/10 (need <=3), paired "
             "one-sided p=%.4g (need <0.05), slowest seed %.0fs (budget 1800s)",
             pbac_solved, sac_solved, p, worst_secs));
}

// --- criterion 9: byte-identical reruns through the CLI -------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PBAC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_determinism() {
  const fs::path dir = fs::temp_directory_path() / "pbac_acceptance_det";
  fs::remove_all(dir);
  const std::string flags =
      "train --env pointmass-delayed --agent pbac --seed 5 --steps 260"
      " --warmup 200 --batch 8 --hidden 8 --ensemble 3 --eval-every 130"
      " --eval-episodes 2 --out-dir ";
  bool ok = run_cli(flags + (dir / "a").string()) == 0 &&
            run_cli(flags + (dir / "b").string()) == 0;
  const fs::path rel = fs::path("pointmass-delayed") / "pbac" / "seed_5";
  for (const char* f : {"train.csv", "eval.csv"}) {
    const std::string ca = slurp(dir / "a" / rel / f);
    const std::string cb = slurp(dir / "b" / rel / f);
    ok = ok && !ca.empty() && ca == cb;
  }
  report(9, ok, "two identical train invocations produce byte-identical "
                "train.csv and eval.csv");
}

// --- criterion 10: statistics and the analyze subcommand ------------------

void criterion_statistics() {
  bool ok = pbac::iqm({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}) == 5.5;
  pbac::EvalCurve flat;
  for (int i = 1; i <= 6; ++i) flat.checkpoints.emplace_back(i * 100, 7.25);
  ok = ok && pbac::aulc(flat) == 7.25;

  // CSV fixtures: one method whose final returns are 1..10 (IQM 5.5), one
  // constant method (IQM and AULC 7.25).
  const fs::path dir = fs::temp_directory_path() / "pbac_acceptance_stats";
  fs::remove_all(dir);
  std::string paths;
  for (int seed = 0; seed < 10; ++seed) {
    for (const char* agent : {"ramp", "flat"}) {
      const fs::path d = dir / "env" / agent / ("seed_" + std::to_string(seed));
      fs::create_directories(d);
      std::ofstream out(d / "eval.csv", std::ios::binary);
      out << "step,eval_return_mean,eval_return_0\n";
      for (int cp = 1; cp <= 3; ++cp) {
        const double v = std::string(agent) == "ramp" ? seed + 1.0 : 7.25;
        out << cp * 100 << ',' << v << ',' << v << "\n";
      }
      paths += " " + (d / "eval.csv").string();
    }
  }
  const fs::path out_csv = dir / "analysis.csv";
  ok = ok && run_cli("analyze" + paths + " --out " + out_csv.string()) == 0;

  double ramp_iqm = 0.0, flat_iqm = 0.0, flat_aulc = 0.0;
  std::ifstream in(out_csv);
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 7 || cells[0] != "method") continue;
    if (cells[1] == "ramp") ramp_iqm = std::stod(cells[3]);
    if (cells[1] == "flat") {
      flat_iqm = std::stod(cells[3]);
      flat_aulc = std::stod(cells[6]);
    }
  }
  ok = ok && ramp_iqm == 5.5 && flat_iqm == 7.25 && flat_aulc == 7.25;
  report(10, ok,
         fmt("iqm(1..10)=5.5 and constant-curve aulc exact; analyze reproduces "
             "them from fixtures (ramp iqm %.3f, flat iqm %.3f, flat aulc %.3f)",
             ramp_iqm, flat_iqm, flat_aulc));
}

}  // namespace

int main() {
  criterion_oracles();
  criterion_hand_values();
  criterion_gradients();
  criterion_coefficient();
  criterion_limit_reduction();
  criterion_bound();
  criterion_masks();
  criterion_exploration();
  criterion_determinism();
  criterion_statistics();
  std::printf("%d/10 criteria passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
