#pragma once

#include <Eigen/Dense>
#include <memory>
#include <random>
#include <string>

namespace pbac {

using Observation = Eigen::VectorXd;
using ActionVec = Eigen::VectorXd;  // componentwise in [-1, 1], callers clamp

struct StepResult {
  Observation next_obs;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;
};

struct DelayedRewardConfig {
  double positional_delay_c = 1.0;
  double action_cost_w_a = 0.5;
  double health_reward_H = 0.0;
  int episode_limit = 200;
};

// Single-threaded continuous-control environment. `done` requires a reset
// before the next step; `truncated` marks the episode-limit cutoff and is
// treated as non-terminal by learners.
class Env {
 public:
  virtual ~Env() = default;
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual Observation reset(std::mt19937_64& rng) = 0;
  virtual StepResult step(const ActionVec& action) = 0;
  virtual std::string name() const = 0;
};

// 1-D point mass with the delayed forward-reward template:
// v' = clamp(v + 0.1 a, -1, 1), x' = x + 0.1 v',
// reward = v' * 1[x' > c] - w_a a^2 + H.
class PointmassDelayedEnv : public Env {
 public:
  explicit PointmassDelayedEnv(DelayedRewardConfig cfg = {}) : cfg_(cfg) {}
  int obs_dim() const override { return 2; }
  int action_dim() const override { return 1; }
  Observation reset(std::mt19937_64& rng) override;
  StepResult step(const ActionVec& action) override;
  std::string name() const override;
  const DelayedRewardConfig& config() const { return cfg_; }
  void set_state(double x, double v) { x_ = x; v_ = v; }

 private:
  DelayedRewardConfig cfg_;
  double x_ = 0.0, v_ = 0.0;
  int t_ = 0;
};

// Cart-pole swing-up with sparse success reward. The pole starts hanging
// down; reward 1 iff |x| < 0.25 and cos(theta) > 0.995. Walls at |x| = 2.4
// are sticky (position clamped, cart velocity zeroed), never terminal.
class CartpoleSwingupEnv : public Env {
 public:
  int obs_dim() const override { return 4; }
  int action_dim() const override { return 1; }
  Observation reset(std::mt19937_64& rng) override;
  StepResult step(const ActionVec& action) override;
  std::string name() const override { return "cartpole-swingup-sparse"; }
  void set_state(double x, double xdot, double theta, double thetadot) {
    x_ = x;
    xdot_ = xdot;
    theta_ = theta;
    thetadot_ = thetadot;
  }

 private:
  double x_ = 0.0, xdot_ = 0.0, theta_ = 0.0, thetadot_ = 0.0;
  int t_ = 0;
};

// Continuous mountain car with goal at p >= 0.45 and quadratic action cost.
class MountaincarSparseEnv : public Env {
 public:
  int obs_dim() const override { return 2; }
  int action_dim() const override { return 1; }
  Observation reset(std::mt19937_64& rng) override;
  StepResult step(const ActionVec& action) override;
  std::string name() const override { return "mountaincar-sparse"; }
  void set_state(double p, double v) { p_ = p; v_ = v; }

 private:
  double p_ = 0.0, v_ = 0.0;
  int t_ = 0;
};

// Names: pointmass-delayed, pointmass-very-delayed, cartpole-swingup-sparse,
// mountaincar-sparse.
std::unique_ptr<Env> make_env(const std::string& name);

}  // namespace pbac
