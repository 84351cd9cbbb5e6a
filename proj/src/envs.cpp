#include "podpo/envs.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "podpo/errors.hpp"

namespace podpo {
namespace {

VectorXd clip(const VectorXd& a, double bound) { return a.cwiseMax(-bound).cwiseMin(bound); }

void check_action(const VectorXd& action, Eigen::Index dim) {
  if (action.size() != dim) {
    throw ShapeError("action dim", dim, action.size());
  }
  if (!action.allFinite()) {
    throw NonFiniteError("env action contains non-finite values");
  }
}

}  // namespace

BimodalBandit::BimodalBandit(EnvParams params, RngStream rng) : params_(params), rng_(std::move(rng)) {}

VectorXd BimodalBandit::reset() {
  steps_ = 0;
  finished_ = false;
  return VectorXd::Zero(1);
}

Eigen::Vector2d BimodalBandit::mode(int i) const {
  return {i == 0 ? -params_.bandit_mode_x : params_.bandit_mode_x, 0.0};
}

double BimodalBandit::reward(const VectorXd& action) const {
  const double s2 = params_.bandit_sigma * params_.bandit_sigma;
  double best = 0.0;
  for (int i = 0; i < 2; ++i) {
    best = std::max(best, std::exp(-(action - mode(i)).squaredNorm() / s2));
  }
  return best;
}

StepResult BimodalBandit::step(const VectorXd& action) {
  if (finished_) {
    throw Error("bimodal_bandit: step called after episode end");
  }
  check_action(action, 2);
  ++steps_;
  finished_ = true;
  return {VectorXd::Zero(1), reward(clip(action, params_.bandit_action_bound)), true};
}

PointMassReach::PointMassReach(EnvParams params, RngStream rng) : params_(params), rng_(std::move(rng)) {}

VectorXd PointMassReach::observation() const {
  VectorXd obs(6);
  obs << pos_, vel_, goal_;
  return obs;
}

VectorXd PointMassReach::reset() {
  pos_ = {rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0)};
  vel_.setZero();
  goal_ = {rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0)};
  steps_ = 0;
  finished_ = false;
  return observation();
}

StepResult PointMassReach::step(const VectorXd& action) {
  if (finished_) {
    throw Error("point_mass: step called after episode end");
  }
  check_action(action, 2);
  const double dt = params_.point_mass_dt;
  vel_ += clip(action, params_.point_mass_action_bound) * dt;
  pos_ += vel_ * dt;
  ++steps_;
  const double dist = (pos_ - goal_).norm();
  double reward = -dist;
  if (dist < params_.point_mass_goal_radius) {
    reward += params_.point_mass_bonus;
  }
  finished_ = steps_ >= params_.point_mass_horizon;
  return {observation(), reward, finished_};
}

std::unique_ptr<Env> make_env(std::string_view name, const EnvParams& params, RngStream rng) {
  if (name == "bimodal_bandit") {
    return std::make_unique<BimodalBandit>(params, std::move(rng));
  }
  if (name == "point_mass") {
    return std::make_unique<PointMassReach>(params, std::move(rng));
  }
  throw ConfigError("env", "unknown environment '" + std::string(name) + "' (bimodal_bandit | point_mass)");
}

EnvSet::EnvSet(std::string_view name, const EnvParams& params, std::uint64_t seed, int count) {
  if (count < 1) {
    throw ConfigError("num_envs", "must be >= 1");
  }
  for (int i = 0; i < count; ++i) {
    envs_.push_back(make_env(name, params, RngStream(seed, "env", static_cast<std::uint64_t>(i))));
  }
  obs_.resize(count, envs_.front()->obs_dim());
  for (int i = 0; i < count; ++i) {
    obs_.row(i) = envs_[static_cast<std::size_t>(i)]->reset().transpose();
  }
  running_.assign(static_cast<std::size_t>(count), 0.0);
}

}  // namespace podpo
