#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "pbac/agent.hpp"
#include "pbac/analysis.hpp"
#include "pbac/io.hpp"
#include "pbac/verify.hpp"

namespace {

void add_run_flags(CLI::App* cmd, pbac::TrainConfig& cfg, std::string& config_path) {
  cmd->add_option("--env", cfg.env, "Environment name");
  cmd->add_option("--agent", cfg.agent, "Agent: pbac, bootdqnp, sac");
  cmd->add_option("--seed", cfg.seed, "Master seed");
  cmd->add_option("--steps", cfg.total_steps, "Total environment steps");
  cmd->add_option("--warmup", cfg.warmup_steps, "Uniform-action warmup steps");
  cmd->add_option("--batch", cfg.batch_size, "Minibatch size");
  cmd->add_option("--replay-ratio", cfg.replay_ratio, "Gradient phases per step");
  cmd->add_option("--ensemble", cfg.ensemble_size, "Ensemble size K");
  cmd->add_option("--hidden", cfg.hidden, "Hidden layer width");
  cmd->add_option("--gamma", cfg.gamma, "Discount factor");
  cmd->add_option("--tau", cfg.tau, "Target smoothing coefficient");
  cmd->add_option("--kappa", cfg.kappa, "Bootstrap mask drop rate, in (0,1)");
  cmd->add_option("--psr", cfg.psr, "Head resampling period");
  cmd->add_option("--prior-var", cfg.sigma0_sq, "Prior variance sigma0^2");
  cmd->add_option("--lr", cfg.lr, "Learning rate");
  cmd->add_option("--eval-every", cfg.eval_every, "Steps between evaluations");
  cmd->add_option("--eval-episodes", cfg.eval_episodes, "Episodes per evaluation");
  cmd->add_option("--out-dir", cfg.out_dir, "Output root directory");
  cmd->add_option("--lambda-bar", cfg.lambda_bar, "Bound diagnostic constant");
  cmd->add_option("--delta", cfg.delta, "Bound confidence level");
  cmd->add_option("--reward-bound", cfg.reward_bound, "Reward bound R");
  cmd->add_option("--config", config_path, "key=value configuration file");
}

// Config-file values fill in only the options not given explicitly on the
// command line, so flags always win.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  for (const auto& [key, value] : pbac::read_config_file(path)) {
    CLI::Option* op = cmd->get_option_no_throw("--" + key);
    if (op == nullptr || key == "config")
      throw std::invalid_argument("unknown config key: " + key);
    if (op->count() > 0) continue;
    op->add_result(value);
    op->run_callback();
  }
}

int cmd_train(const pbac::TrainConfig& cfg) {
  cfg.validate();
  const pbac::TrainLog log = pbac::train(cfg);
  const auto dir = pbac::run_dir(cfg);
  pbac::write_run_csvs(log, dir);
  if (log.aborted) {
    std::cerr << "training aborted: " << log.abort_reason << "\n";
    return 1;
  }
  const double final_eval = log.evals.empty() ? 0.0 : log.evals.back().mean_return;
  std::cout << "wrote " << dir.string() << " (" << log.steps.size() << " steps, "
            << log.gradient_phases << " gradient phases, final eval mean " << final_eval
            << ")\n";
  return 0;
}

// There is no checkpointing, so eval reports the freshly initialized policy:
// a baseline for the same seed's training curve.
int cmd_eval(const pbac::TrainConfig& cfg) {
  pbac::TrainConfig probe = cfg;
  probe.total_steps = 1;
  probe.warmup_steps = 1;
  probe.eval_every = 1;
  probe.visit_every = 1;
  const pbac::TrainLog log = pbac::train(probe);
  if (log.evals.empty()) {
    std::cerr << "no evaluation produced\n";
    return 1;
  }
  const auto& rec = log.evals.front();
  std::cout << "untrained-policy evaluation on " << cfg.env << " (" << cfg.agent
            << ", seed " << cfg.seed << ")\n";
  for (size_t e = 0; e < rec.returns.size(); ++e)
    std::cout << "  episode " << e << ": " << rec.returns[e] << "\n";
  std::cout << "mean: " << rec.mean_return << "\n";
  return 0;
}

int cmd_verify(int mdps, int grad_configs, const std::string& summary_path) {
  std::vector<pbac::CheckResult> results;
  for (auto& r : pbac::run_oracle_suite(mdps)) results.push_back(r);
  for (auto& r : pbac::run_hand_value_checks()) results.push_back(r);
  for (auto& r : pbac::run_gradient_checks(grad_configs)) results.push_back(r);

  nlohmann::json summary;
  summary["checks"] = nlohmann::json::array();
  for (const auto& r : results) {
    std::printf("%s  %s (worst %.3e)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.worst);
    summary["checks"].push_back({{"name", r.name}, {"passed", r.passed},
                                 {"worst", r.worst}});
  }
  const bool ok = pbac::all_passed(results);
  summary["all_passed"] = ok;
  std::ofstream out(summary_path);
  out << summary.dump(2) << "\n";
  std::printf("%s\n", ok ? "all checks passed" : "CHECKS FAILED");
  return ok ? 0 : 1;
}

std::string method_from_path(const std::filesystem::path& p) {
  // Layout convention: out/{env}/{agent}/seed_{k}/eval.csv.
  auto seed_dir = p.parent_path();
  if (seed_dir.has_parent_path() && !seed_dir.parent_path().filename().empty())
    return seed_dir.parent_path().filename().string();
  return "unknown";
}

int cmd_analyze(const std::vector<std::string>& paths, const std::string& out_path) {
  struct MethodStats {
    std::vector<double> finals;  // per seed, file order
    std::vector<double> aulcs;
  };
  std::map<std::string, MethodStats> methods;
  for (const auto& path : paths) {
    const pbac::EvalTable table = pbac::read_eval_csv(path);
    if (table.means.empty()) {
      std::cerr << "no checkpoints in " << path << "\n";
      return 1;
    }
    pbac::EvalCurve curve;
    for (size_t i = 0; i < table.steps.size(); ++i)
      curve.checkpoints.emplace_back(table.steps[i], table.means[i]);
    auto& stats = methods[method_from_path(path)];
    stats.finals.push_back(table.means.back());
    stats.aulcs.push_back(pbac::aulc(curve));
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot open " << out_path << "\n";
    return 1;
  }
  out << "record,method_a,method_b,final_iqm,final_q25,final_q75,aulc_iqm,t_stat,"
         "p_value\n";
  for (const auto& [name, stats] : methods) {
    out << "method," << name << ",," << pbac::iqm(stats.finals) << ','
        << pbac::quantile_nearest_rank(stats.finals, 0.25) << ','
        << pbac::quantile_nearest_rank(stats.finals, 0.75) << ','
        << pbac::iqm(stats.aulcs) << ",,\n";
  }
  for (auto a = methods.begin(); a != methods.end(); ++a) {
    for (auto b = methods.begin(); b != methods.end(); ++b) {
      if (a == b) continue;
      if (a->second.finals.size() != b->second.finals.size() ||
          a->second.finals.size() < 2)
        continue;
      const pbac::TTestResult t =
          pbac::paired_ttest_onesided(a->second.finals, b->second.finals);
      out << "ttest," << a->first << ',' << b->first << ",,,,," << t.t << ','
          << (t.degenerate ? std::string("degenerate") : std::to_string(t.p)) << "\n";
    }
  }
  std::cout << "wrote " << out_path << " (" << methods.size() << " methods)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble actor-critic trainer with exact finite-chain verification"};
  app.require_subcommand(1);

  pbac::TrainConfig train_cfg;
  std::string train_config_path;
  CLI::App* train = app.add_subcommand("train", "Run one training seed and write CSVs");
  add_run_flags(train, train_cfg, train_config_path);

  pbac::TrainConfig eval_cfg;
  std::string eval_config_path;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a freshly initialized policy");
  add_run_flags(eval, eval_cfg, eval_config_path);

  int mdps = 200, grad_configs = 100;
  std::string summary_path = "verify_summary.json";
  CLI::App* verify = app.add_subcommand("verify", "Run the exact verification suite");
  verify->add_option("--mdps", mdps, "Random chains to sweep");
  verify->add_option("--grad-configs", grad_configs, "Finite-difference configurations");
  verify->add_option("--summary", summary_path, "Machine-readable summary path");

  std::vector<std::string> eval_paths;
  std::string analyze_out = "analysis.csv";
  CLI::App* analyze = app.add_subcommand("analyze", "Cross-seed statistics from eval CSVs");
  analyze->add_option("paths", eval_paths, "eval.csv files")->required();
  analyze->add_option("--out", analyze_out, "Summary CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      apply_config_file(train, train_config_path);
      return cmd_train(train_cfg);
    }
    if (eval->parsed()) {
      apply_config_file(eval, eval_config_path);
      return cmd_eval(eval_cfg);
    }
    if (verify->parsed()) return cmd_verify(mdps, grad_configs, summary_path);
    if (analyze->parsed()) return cmd_analyze(eval_paths, analyze_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
