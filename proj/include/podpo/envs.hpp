#ifndef PODPO_ENVS_HPP
#define PODPO_ENVS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "podpo/nn.hpp"
#include "podpo/rng.hpp"

namespace podpo {

/// Constants of the built-in environments. Every field is overridable from config.
struct EnvParams {
  // bimodal_bandit
  double bandit_mode_x = 1.0;     ///< modes at (-x, 0) and (+x, 0)
  double bandit_sigma = 0.3;
  double bandit_action_bound = 2.0;
  // point_mass
  double point_mass_dt = 0.1;
  int point_mass_horizon = 64;
  double point_mass_goal_radius = 0.05;
  double point_mass_bonus = 5.0;
  double point_mass_action_bound = 1.0;
};

struct StepResult {
  VectorXd obs;
  double reward = 0.0;
  bool done = false;
};

/// Reset/step environment. Each instance owns its random stream.
class Env {
 public:
  virtual ~Env() = default;

  [[nodiscard]] virtual std::string_view name() const = 0;
  [[nodiscard]] virtual Eigen::Index obs_dim() const = 0;
  [[nodiscard]] virtual Eigen::Index action_dim() const = 0;
  [[nodiscard]] virtual int horizon() const = 0;
  /// Best achievable return of one episode.
  [[nodiscard]] virtual double return_upper_bound() const = 0;

  virtual VectorXd reset() = 0;
  /// Throws podpo::Error when called on a finished episode.
  virtual StepResult step(const VectorXd& action) = 0;

  [[nodiscard]] int step_count() const { return steps_; }
  [[nodiscard]] bool finished() const { return finished_; }

 protected:
  int steps_ = 0;
  bool finished_ = true;
};

/// Contextless two-armed continuous bandit with Gaussian reward bumps at
/// c1 = (-1, 0) and c2 = (+1, 0). One step per episode; observation is [0].
class BimodalBandit final : public Env {
 public:
  BimodalBandit(EnvParams params, RngStream rng);

  [[nodiscard]] std::string_view name() const override { return "bimodal_bandit"; }
  [[nodiscard]] Eigen::Index obs_dim() const override { return 1; }
  [[nodiscard]] Eigen::Index action_dim() const override { return 2; }
  [[nodiscard]] int horizon() const override { return 1; }
  [[nodiscard]] double return_upper_bound() const override { return 1.0; }

  VectorXd reset() override;
  StepResult step(const VectorXd& action) override;

  /// Reward of an (already clipped) action.
  [[nodiscard]] double reward(const VectorXd& action) const;
  [[nodiscard]] Eigen::Vector2d mode(int i) const;

 private:
  EnvParams params_;
  RngStream rng_;
};

/// 2-D double integrator reaching a goal. Observation (pos, vel, goal).
///   vel += clip(a, -1, 1) * dt;  pos += vel * dt
///   reward = -|pos - goal| + bonus * [|pos - goal| < radius]
class PointMassReach final : public Env {
 public:
  PointMassReach(EnvParams params, RngStream rng);

  [[nodiscard]] std::string_view name() const override { return "point_mass"; }
  [[nodiscard]] Eigen::Index obs_dim() const override { return 6; }
  [[nodiscard]] Eigen::Index action_dim() const override { return 2; }
  [[nodiscard]] int horizon() const override { return params_.point_mass_horizon; }
  [[nodiscard]] double return_upper_bound() const override {
    return params_.point_mass_bonus * params_.point_mass_horizon;
  }

  VectorXd reset() override;
  StepResult step(const VectorXd& action) override;

  [[nodiscard]] const Eigen::Vector2d& position() const { return pos_; }
  [[nodiscard]] const Eigen::Vector2d& velocity() const { return vel_; }
  [[nodiscard]] const Eigen::Vector2d& goal() const { return goal_; }
  [[nodiscard]] VectorXd observation() const;

 private:
  EnvParams params_;
  RngStream rng_;
  Eigen::Vector2d pos_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d goal_ = Eigen::Vector2d::Zero();
};

/// Builds an environment by config name ("bimodal_bandit" | "point_mass").
std::unique_ptr<Env> make_env(std::string_view name, const EnvParams& params, RngStream rng);

/// Fixed-order set of independently seeded environment instances.
class EnvSet {
 public:
  EnvSet(std::string_view name, const EnvParams& params, std::uint64_t seed, int count);

  [[nodiscard]] int size() const { return static_cast<int>(envs_.size()); }
  Env& operator[](int i) { return *envs_[static_cast<std::size_t>(i)]; }
  const Env& operator[](int i) const { return *envs_[static_cast<std::size_t>(i)]; }

  [[nodiscard]] Eigen::Index obs_dim() const { return envs_.front()->obs_dim(); }
  [[nodiscard]] Eigen::Index action_dim() const { return envs_.front()->action_dim(); }

  /// Current observation of every env, one row each; resets on first use.
  [[nodiscard]] const MatrixXd& observations() const { return obs_; }
  MatrixXd& observations() { return obs_; }

  /// Running return of the episode each env is in.
  std::vector<double>& running_returns() { return running_; }

 private:
  std::vector<std::unique_ptr<Env>> envs_;
  MatrixXd obs_;
  std::vector<double> running_;
};

}  // namespace podpo

#endif  // PODPO_ENVS_HPP
