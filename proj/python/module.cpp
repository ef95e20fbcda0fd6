#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <random>

#include "pbac/agent.hpp"
#include "pbac/analysis.hpp"
#include "pbac/envs.hpp"
#include "pbac/verify.hpp"

namespace py = pybind11;

namespace {

// Environment handle owning its reset RNG, seeded once at construction.
class EnvHandle {
 public:
  EnvHandle(const std::string& name, std::uint64_t seed)
      : env_(pbac::make_env(name)), rng_(seed) {}

  int obs_dim() const { return env_->obs_dim(); }
  int action_dim() const { return env_->action_dim(); }
  std::string name() const { return env_->name(); }
  Eigen::VectorXd reset() { return env_->reset(rng_); }
  py::tuple step(const Eigen::VectorXd& action) {
    const pbac::StepResult r = env_->step(action);
    return py::make_tuple(r.next_obs, r.reward, r.done, r.truncated);
  }

 private:
  std::unique_ptr<pbac::Env> env_;
  std::mt19937_64 rng_;
};

py::list check_results_to_list(const std::vector<pbac::CheckResult>& results) {
  py::list out;
  for (const auto& r : results) {
    py::dict d;
    d["name"] = r.name;
    d["passed"] = r.passed;
    d["worst"] = r.worst;
    out.append(d);
  }
  return out;
}

py::dict train_py(const pbac::TrainConfig& cfg) {
  cfg.validate();
  const pbac::TrainLog log = pbac::train(cfg);
  py::dict out;
  out["gradient_phases"] = log.gradient_phases;
  out["aborted"] = log.aborted;
  out["abort_reason"] = log.abort_reason;
  py::list eval_steps, eval_means;
  for (const auto& e : log.evals) {
    eval_steps.append(e.step);
    eval_means.append(e.mean_return);
  }
  out["eval_steps"] = eval_steps;
  out["eval_means"] = eval_means;
  py::list bound_steps, bound_rhs_vals, bound_kl;
  for (const auto& b : log.bounds) {
    bound_steps.append(b.step);
    bound_rhs_vals.append(b.rhs);
    bound_kl.append(b.kl);
  }
  out["bound_steps"] = bound_steps;
  out["bound_rhs"] = bound_rhs_vals;
  out["bound_kl"] = bound_kl;
  py::list episode_returns;
  for (const auto& s : log.steps) episode_returns.append(s.episode_return);
  out["episode_returns"] = episode_returns;
  return out;
}

}  // namespace

PYBIND11_MODULE(_pbac, m) {
  m.doc() = "Ensemble actor-critic with a PAC-Bayes-style training objective: "
            "statistics, environments, verification, and training.";

  // Cross-seed statistics.
  m.def("iqm", &pbac::iqm, py::arg("values"),
        "Interquartile mean: drop floor(n/4) from each end, mean the rest.");
  m.def("quantile_nearest_rank", &pbac::quantile_nearest_rank, py::arg("values"),
        py::arg("q"), "Nearest-rank order statistic for q in [0, 1].");
  m.def(
      "aulc",
      [](const std::vector<std::pair<long, double>>& checkpoints) {
        pbac::EvalCurve curve;
        curve.checkpoints = checkpoints;
        return pbac::aulc(curve);
      },
      py::arg("checkpoints"),
      "Area under the learning curve: mean of (step, return) checkpoint returns.");
  m.def(
      "paired_ttest_onesided",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const pbac::TTestResult r = pbac::paired_ttest_onesided(a, b);
        py::dict d;
        d["t"] = r.t;
        d["p"] = r.p;
        d["degenerate"] = r.degenerate;
        return d;
      },
      py::arg("a"), py::arg("b"),
      "One-sided paired t-test of mean(a - b) > 0.");
  m.def("student_t_sf", &pbac::student_t_sf, py::arg("t"), py::arg("nu"),
        "Upper-tail probability of Student's t.");

  // Generalization-bound arithmetic.
  m.def("bound_B", &pbac::bound_B, py::arg("reward_bound"), py::arg("gamma"));
  m.def(
      "bound_rhs",
      [](double empirical_risk, double kl, double variance_term, double nu,
         double lambda_bar, double delta, long n, double reward_bound, double gamma) {
        pbac::BoundDiagnostics d;
        d.empirical_risk = empirical_risk;
        d.kl = kl;
        d.variance_term = variance_term;
        d.nu = nu;
        d.lambda_bar = lambda_bar;
        d.delta = delta;
        d.n = n;
        d.B = pbac::bound_B(reward_bound, gamma);
        return pbac::bound_rhs(d, gamma);
      },
      py::arg("empirical_risk"), py::arg("kl"), py::arg("variance_term"),
      py::arg("nu"), py::arg("lambda_bar"), py::arg("delta"), py::arg("n"),
      py::arg("reward_bound"), py::arg("gamma"),
      "Right-hand side of the value-suboptimality bound.");

  // Environments.
  py::class_<EnvHandle>(m, "Env")
      .def(py::init<const std::string&, std::uint64_t>(), py::arg("name"),
           py::arg("seed") = 0)
      .def_property_readonly("obs_dim", &EnvHandle::obs_dim)
      .def_property_readonly("action_dim", &EnvHandle::action_dim)
      .def_property_readonly("name", &EnvHandle::name)
      .def("reset", &EnvHandle::reset)
      .def("step", &EnvHandle::step, py::arg("action"),
           "Returns (next_obs, reward, done, truncated).");

  // Verification suites.
  m.def(
      "run_oracle_suite",
      [](int mdps) { return check_results_to_list(pbac::run_oracle_suite(mdps)); },
      py::arg("mdps") = 200);
  m.def("run_hand_value_checks",
        [] { return check_results_to_list(pbac::run_hand_value_checks()); });
  m.def(
      "run_gradient_checks",
      [](int configs) {
        return check_results_to_list(pbac::run_gradient_checks(configs));
      },
      py::arg("configs") = 100);

  // Training.
  py::class_<pbac::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("env", &pbac::TrainConfig::env)
      .def_readwrite("agent", &pbac::TrainConfig::agent)
      .def_readwrite("total_steps", &pbac::TrainConfig::total_steps)
      .def_readwrite("warmup_steps", &pbac::TrainConfig::warmup_steps)
      .def_readwrite("batch_size", &pbac::TrainConfig::batch_size)
      .def_readwrite("replay_ratio", &pbac::TrainConfig::replay_ratio)
      .def_readwrite("ensemble_size", &pbac::TrainConfig::ensemble_size)
      .def_readwrite("hidden", &pbac::TrainConfig::hidden)
      .def_readwrite("buffer_capacity", &pbac::TrainConfig::buffer_capacity)
      .def_readwrite("gamma", &pbac::TrainConfig::gamma)
      .def_readwrite("tau", &pbac::TrainConfig::tau)
      .def_readwrite("kappa", &pbac::TrainConfig::kappa)
      .def_readwrite("psr", &pbac::TrainConfig::psr)
      .def_readwrite("sigma0_sq", &pbac::TrainConfig::sigma0_sq)
      .def_readwrite("prior_scale", &pbac::TrainConfig::prior_scale)
      .def_readwrite("lr", &pbac::TrainConfig::lr)
      .def_readwrite("seed", &pbac::TrainConfig::seed)
      .def_readwrite("eval_every", &pbac::TrainConfig::eval_every)
      .def_readwrite("eval_episodes", &pbac::TrainConfig::eval_episodes)
      .def_readwrite("visit_every", &pbac::TrainConfig::visit_every)
      .def_readwrite("lambda_bar", &pbac::TrainConfig::lambda_bar)
      .def_readwrite("delta", &pbac::TrainConfig::delta)
      .def_readwrite("reward_bound", &pbac::TrainConfig::reward_bound)
      .def_readwrite("out_dir", &pbac::TrainConfig::out_dir);
  m.def("train", &train_py, py::arg("config"),
        "Run one training seed in-process; returns curves as a dict.");
}
