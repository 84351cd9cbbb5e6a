#include <gtest/gtest.h>

#include <cmath>

#include "podpo/envs.hpp"
#include "podpo/errors.hpp"
#include "podpo/policy.hpp"
#include "podpo/rollout.hpp"

namespace podpo {
namespace {

struct Fixture {
  GenerativeActor actor;
  Critic critic;
};

Fixture make_fixture(Eigen::Index obs_dim) {
  RngStream rng(1, "init");
  NetworkShape shape;
  shape.obs_dim = obs_dim;
  shape.action_dim = 2;
  shape.hidden_width = 8;
  return {make_generative_actor(shape, rng), make_critic(shape, rng)};
}

std::vector<RngStream> noise_streams(int count) {
  std::vector<RngStream> out;
  for (int i = 0; i < count; ++i) out.emplace_back(5, "rollout_noise", i);
  return out;
}

TEST(CollectRollout, SingleBanditStepMatchesClosedFormReward) {
  const Fixture f = make_fixture(1);
  EnvSet envs("bimodal_bandit", EnvParams{}, 3, 1);
  auto streams = noise_streams(1);
  RngStream replay(5, "rollout_noise", 0);
  const MatrixXd noise = replay.normal_matrix(1, f.actor.noise_dim);

  const Trajectory traj = collect_rollout(envs, f.actor, f.critic, 1, streams);
  EXPECT_EQ(traj.size(), 1);
  EXPECT_EQ(traj.obs.rows(), 1);
  EXPECT_EQ(traj.obs.cols(), 1);
  EXPECT_EQ(traj.actions.cols(), 2);
  EXPECT_EQ(traj.rewards.rows(), 1);
  EXPECT_TRUE(traj.dones(0, 0));
  EXPECT_EQ(traj.bootstrap_values.size(), 1);
  EXPECT_EQ(traj.log_probs.size(), 0);

  const MatrixXd action = generate_action(f.actor, MatrixXd::Zero(1, 1), noise);
  EXPECT_TRUE(traj.actions == action);
  BimodalBandit bandit(EnvParams{}, RngStream(0));
  const Eigen::Vector2d clipped = action.row(0).transpose().cwiseMax(-2.0).cwiseMin(2.0);
  EXPECT_EQ(traj.rewards(0, 0), bandit.reward(clipped));
  ASSERT_EQ(traj.episode_returns.size(), 1U);
  EXPECT_EQ(traj.episode_returns[0], traj.rewards(0, 0));
}

TEST(CollectRollout, ShapesAndAutoReset) {
  const Fixture f = make_fixture(6);
  EnvParams params;
  params.point_mass_horizon = 5;
  EnvSet envs("point_mass", params, 2, 3);
  auto streams = noise_streams(3);
  const Trajectory traj = collect_rollout(envs, f.actor, f.critic, 12, streams);
  EXPECT_EQ(traj.obs.rows(), 36);
  EXPECT_EQ(traj.rewards.rows(), 12);
  EXPECT_EQ(traj.rewards.cols(), 3);
  EXPECT_EQ(traj.dones.count(), 6);  // steps 4 and 9 for each env
  EXPECT_TRUE(traj.dones(4, 1));
  EXPECT_TRUE(traj.dones(9, 2));
  EXPECT_EQ(traj.episode_returns.size(), 6U);
  // Observation after a reset has zero velocity.
  EXPECT_TRUE(traj.obs.row(5 * 3 + 1).segment(2, 2).isZero(0.0));
}

TEST(CollectRollout, SeedDeterminism) {
  const Fixture f = make_fixture(6);
  auto run = [&] {
    EnvSet envs("point_mass", EnvParams{}, 11, 4);
    auto streams = noise_streams(4);
    return collect_rollout(envs, f.actor, f.critic, 8, streams);
  };
  const Trajectory a = run();
  const Trajectory b = run();
  EXPECT_TRUE(a.obs == b.obs);
  EXPECT_TRUE(a.actions == b.actions);
  EXPECT_TRUE(a.rewards == b.rewards);
  EXPECT_TRUE(a.values == b.values);
}

TEST(CollectRollout, PropagatesEnvErrorsWithIndex) {
  EnvSet envs("point_mass", EnvParams{}, 1, 2);
  const Fixture f = make_fixture(6);
  const StepPolicy bad = [](const MatrixXd& obs) {
    MatrixXd a = MatrixXd::Zero(obs.rows(), 2);
    a(1, 0) = NAN;
    return PolicyStep{a, {}};
  };
  try {
    collect_rollout(envs, bad, f.critic, 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("env 1"), std::string::npos) << e.what();
  }
}

BoolMatrix no_dones(Eigen::Index t, Eigen::Index n) { return BoolMatrix::Constant(t, n, false); }

TEST(ComputeGae, SingleStep) {
  const auto r = compute_gae(MatrixXd::Ones(1, 1), MatrixXd::Zero(1, 1), no_dones(1, 1), VectorXd::Zero(1), 1.0, 1.0);
  EXPECT_EQ(r.advantages(0, 0), 1.0);
  EXPECT_EQ(r.returns(0, 0), 1.0);
}

TEST(ComputeGae, NullSignal) {
  const auto r = compute_gae(MatrixXd::Zero(4, 3), MatrixXd::Zero(4, 3), no_dones(4, 3), VectorXd::Zero(3), 0.9, 0.9);
  EXPECT_TRUE(r.advantages.isZero(0.0));
}

TEST(ComputeGae, ThreeStepHandCase) {
  MatrixXd rewards(3, 1);
  rewards << 0, 0, 1;
  const auto r = compute_gae(rewards, MatrixXd::Zero(3, 1), no_dones(3, 1), VectorXd::Zero(1), 0.9, 0.95);
  EXPECT_NEAR(r.advantages(2, 0), 1.0, 1e-15);
  EXPECT_NEAR(r.advantages(1, 0), 0.855, 1e-15);
  EXPECT_NEAR(r.advantages(0, 0), 0.731025, 1e-15);
}

TEST(ComputeGae, DoneResetsRecursion) {
  MatrixXd rewards(3, 1);
  rewards << 0, 0, 1;
  BoolMatrix dones = no_dones(3, 1);
  dones(1, 0) = true;
  VectorXd bootstrap = VectorXd::Constant(1, 10.0);
  const auto r = compute_gae(rewards, MatrixXd::Zero(3, 1), dones, bootstrap, 0.9, 0.95);
  EXPECT_NEAR(r.advantages(2, 0), 1.0 + 0.9 * 10.0, 1e-12);
  EXPECT_EQ(r.advantages(1, 0), 0.0);
  EXPECT_EQ(r.advantages(0, 0), 0.0);
}

TEST(ComputeGae, LambdaOneGivesDiscountedRewardToGo) {
  RngStream rng(3, "gae");
  const MatrixXd rewards = rng.normal_matrix(6, 2);
  const MatrixXd values = rng.normal_matrix(6, 2);
  const VectorXd bootstrap = rng.normal_matrix(2, 1);
  const auto r = compute_gae(rewards, values, no_dones(6, 2), bootstrap, 0.97, 1.0);
  for (Eigen::Index e = 0; e < 2; ++e) {
    double g = bootstrap(e);
    for (Eigen::Index t = 5; t >= 0; --t) {
      g = rewards(t, e) + 0.97 * g;
      EXPECT_NEAR(r.returns(t, e), g, 1e-12);
    }
  }
}

TEST(ComputeGae, ShapeAndRangeErrors) {
  EXPECT_THROW(compute_gae(MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 1), no_dones(2, 2), VectorXd::Zero(2), 0.9, 0.9),
               ShapeError);
  EXPECT_THROW(compute_gae(MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2), no_dones(2, 2), VectorXd::Zero(3), 0.9, 0.9),
               ShapeError);
  EXPECT_THROW(compute_gae(MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2), no_dones(2, 2), VectorXd::Zero(2), 1.5, 0.9),
               ConfigError);
}

TEST(NormalizeAdvantages, ClosedForm) {
  const VectorXd n = normalize_advantages(Eigen::Vector3d(1, 2, 3));
  EXPECT_NEAR(n(0), -1.224745, 1e-6);
  EXPECT_EQ(n(1), 0.0);
  EXPECT_NEAR(n(2), 1.224745, 1e-6);
  EXPECT_NEAR(n(2), 1.0 / std::sqrt(2.0 / 3.0), 1e-7);
}

TEST(NormalizeAdvantages, ConstantArrayGivesZeros) {
  EXPECT_TRUE(normalize_advantages(VectorXd::Constant(5, 3.7)).isZero(0.0));
}

TEST(NormalizeAdvantages, MeanZeroUnitStd) {
  RngStream rng(4, "norm");
  const VectorXd n = normalize_advantages(VectorXd(rng.normal_matrix(500, 1) * 7.0 + MatrixXd::Constant(500, 1, 3)));
  EXPECT_NEAR(n.mean(), 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt((n.array() - n.mean()).square().mean()), 1.0, 1e-8);
}

TEST(NormalizeAdvantages, RequiresTwoSamples) {
  EXPECT_THROW(normalize_advantages(VectorXd::Ones(1)), ShapeError);
}

TEST(NormalizeAdvantages, PositiveSetIsScaleInvariant) {
  RngStream rng(6, "norm");
  const VectorXd raw = rng.normal_matrix(200, 1);
  const MatrixXd obs = MatrixXd::Zero(200, 1);
  const auto a = filter_positive(obs, obs, normalize_advantages(raw));
  const auto b = filter_positive(obs, obs, normalize_advantages(VectorXd(raw * 13.0)));
  EXPECT_EQ(a.indices, b.indices);
}

TEST(FilterPositive, StrictRule) {
  MatrixXd obs(3, 1);
  obs << 10, 20, 30;
  MatrixXd actions(3, 2);
  actions << 1, 2, 3, 4, 5, 6;
  const auto p = filter_positive(obs, actions, Eigen::Vector3d(0.5, -0.3, 0.0));
  ASSERT_EQ(p.size(), 1);
  EXPECT_EQ(p.indices, std::vector<Eigen::Index>{0});
  EXPECT_EQ(p.obs_pos(0, 0), 10.0);
  EXPECT_EQ(p.actions_pos(0, 1), 2.0);
  EXPECT_EQ(p.adv_pos(0), 0.5);
}

TEST(FilterPositive, AllNegativeGivesEmpty) {
  const MatrixXd obs = MatrixXd::Zero(3, 1);
  const auto p = filter_positive(obs, MatrixXd(MatrixXd::Zero(3, 2)), Eigen::Vector3d(-1, -2, -0.1));
  EXPECT_TRUE(p.empty());
  EXPECT_EQ(p.actions_pos.cols(), 2);
}

TEST(FilterPositive, RoughlyHalfRetainedOnNormalAdvantages) {
  RngStream rng(8, "filter");
  const VectorXd adv = normalize_advantages(VectorXd(rng.normal_matrix(10000, 1)));
  const MatrixXd obs = MatrixXd::Zero(10000, 1);
  const double frac = static_cast<double>(filter_positive(obs, obs, adv).size()) / 10000.0;
  EXPECT_GE(frac, 0.3);
  EXPECT_LE(frac, 0.7);
}

TEST(FilterPositive, RowCountMismatch) {
  EXPECT_THROW(filter_positive(MatrixXd::Zero(2, 1), MatrixXd::Zero(3, 1), VectorXd::Zero(3)), ShapeError);
}

}  // namespace
}  // namespace podpo
