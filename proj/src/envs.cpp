#include "pbac/envs.hpp"

#include <cmath>
#include <stdexcept>

namespace pbac {

Observation PointmassDelayedEnv::reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  x_ = noise(rng);
  v_ = noise(rng);
  t_ = 0;
  return Eigen::Vector2d(x_, v_);
}

StepResult PointmassDelayedEnv::step(const ActionVec& action) {
  const double a = action(0);
  v_ = std::clamp(v_ + 0.1 * a, -1.0, 1.0);
  x_ = x_ + 0.1 * v_;
  t_ += 1;
  StepResult r;
  r.reward = v_ * (x_ > cfg_.positional_delay_c ? 1.0 : 0.0) -
             cfg_.action_cost_w_a * a * a + cfg_.health_reward_H;
  r.next_obs = Eigen::Vector2d(x_, v_);
  r.done = false;
  r.truncated = t_ >= cfg_.episode_limit;
  return r;
}

std::string PointmassDelayedEnv::name() const {
  return cfg_.positional_delay_c >= 2.0 ? "pointmass-very-delayed" : "pointmass-delayed";
}

namespace {
constexpr double kGravity = 9.8;
constexpr double kCartMass = 1.0;
constexpr double kPoleMass = 0.1;
constexpr double kPoleHalfLength = 0.5;
constexpr double kForceScale = 10.0;
constexpr double kDt = 0.02;
constexpr double kTrackLimit = 2.4;
constexpr int kCartpoleLimit = 1000;
}  // namespace

Observation CartpoleSwingupEnv::reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  x_ = 0.0;
  xdot_ = 0.0;
  theta_ = M_PI + noise(rng);
  thetadot_ = 0.0;
  t_ = 0;
  return Eigen::Vector4d(x_, xdot_, theta_, thetadot_);
}

StepResult CartpoleSwingupEnv::step(const ActionVec& action) {
  const double force = kForceScale * action(0);
  const double total_mass = kCartMass + kPoleMass;
  const double cos_t = std::cos(theta_);
  const double sin_t = std::sin(theta_);
  const double temp =
      (force + kPoleMass * kPoleHalfLength * thetadot_ * thetadot_ * sin_t) / total_mass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kPoleHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
  const double x_acc = temp - kPoleMass * kPoleHalfLength * theta_acc * cos_t / total_mass;

  x_ += kDt * xdot_;
  xdot_ += kDt * x_acc;
  theta_ += kDt * thetadot_;
  thetadot_ += kDt * theta_acc;
  if (x_ > kTrackLimit || x_ < -kTrackLimit) {
    x_ = std::clamp(x_, -kTrackLimit, kTrackLimit);
    xdot_ = 0.0;  // sticky wall
  }
  t_ += 1;

  StepResult r;
  r.reward = (std::abs(x_) < 0.25 && std::cos(theta_) > 0.995) ? 1.0 : 0.0;
  r.next_obs = Eigen::Vector4d(x_, xdot_, theta_, thetadot_);
  r.done = false;
  r.truncated = t_ >= kCartpoleLimit;
  return r;
}

Observation MountaincarSparseEnv::reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> start(-0.6, -0.4);
  p_ = start(rng);
  v_ = 0.0;
  t_ = 0;
  return Eigen::Vector2d(p_, v_);
}

StepResult MountaincarSparseEnv::step(const ActionVec& action) {
  const double a = action(0);
  v_ = std::clamp(v_ + 0.0015 * a - 0.0025 * std::cos(3.0 * p_), -0.07, 0.07);
  p_ = std::clamp(p_ + v_, -1.2, 0.6);
  t_ += 1;
  StepResult r;
  const bool goal = p_ >= 0.45;
  r.reward = (goal ? 1.0 : 0.0) - 0.01 * a * a;
  r.next_obs = Eigen::Vector2d(p_, v_);
  r.done = goal;
  r.truncated = !goal && t_ >= 999;
  return r;
}

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "pointmass-delayed") {
    DelayedRewardConfig cfg;
    cfg.positional_delay_c = 1.0;
    return std::make_unique<PointmassDelayedEnv>(cfg);
  }
  if (name == "pointmass-very-delayed") {
    DelayedRewardConfig cfg;
    cfg.positional_delay_c = 2.0;
    return std::make_unique<PointmassDelayedEnv>(cfg);
  }
  if (name == "cartpole-swingup-sparse") return std::make_unique<CartpoleSwingupEnv>();
  if (name == "mountaincar-sparse") return std::make_unique<MountaincarSparseEnv>();
  throw std::invalid_argument("unknown environment: " + name);
}

}  // namespace pbac
