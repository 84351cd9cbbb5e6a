#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "podpo/envs.hpp"
#include "podpo/errors.hpp"
#include "podpo/policy.hpp"

namespace podpo {
namespace {

NetworkShape small_shape() {
  NetworkShape s;
  s.obs_dim = 3;
  s.action_dim = 2;
  s.hidden_width = 8;
  s.hidden_layers = 2;
  return s;
}

TEST(GenerativeActor, ZeroNetworkIgnoresNoise) {
  RngStream rng(1, "init");
  GenerativeActor actor = make_generative_actor(small_shape(), rng);
  actor.net = zeros_like(actor.net);
  const MatrixXd obs = rng.normal_matrix(4, 3);
  EXPECT_TRUE(generate_action(actor, obs, rng.normal_matrix(4, 2)).isZero(0.0));
}

TEST(GenerativeActor, NoiseDrivesDistinctActions) {
  RngStream rng(2, "init");
  const GenerativeActor actor = make_generative_actor(small_shape(), rng);
  const MatrixXd obs = MatrixXd(rng.normal_matrix(1, 3)).replicate(2, 1);
  const MatrixXd noise = rng.normal_matrix(2, 2);
  const MatrixXd a = generate_action(actor, obs, noise);
  EXPECT_NE(a.row(0), a.row(1));
  EXPECT_TRUE(generate_action(actor, obs, noise) == a);
}

TEST(GenerativeActor, NoiseDimDefaultsToActionDim) {
  RngStream rng(3, "init");
  const GenerativeActor actor = make_generative_actor(small_shape(), rng);
  EXPECT_EQ(actor.noise_dim, 2);
  EXPECT_EQ(actor.obs_dim(), 3);
  EXPECT_EQ(actor.action_dim(), 2);
  NetworkShape wide = small_shape();
  wide.noise_dim = 5;
  RngStream rng2(3, "init");
  EXPECT_EQ(make_generative_actor(wide, rng2).net.input_dim(), 8);
}

TEST(GenerativeActor, DimensionMismatchIsStructured) {
  RngStream rng(4, "init");
  const GenerativeActor actor = make_generative_actor(small_shape(), rng);
  EXPECT_THROW(generate_action(actor, MatrixXd::Zero(2, 4), MatrixXd::Zero(2, 2)), ShapeError);
  EXPECT_THROW(generate_action(actor, MatrixXd::Zero(2, 3), MatrixXd::Zero(2, 3)), ShapeError);
}

TEST(SampleCandidates, ShapesAndG1Degeneracy) {
  RngStream rng(5, "init");
  const GenerativeActor actor = make_generative_actor(small_shape(), rng);
  const MatrixXd obs = rng.normal_matrix(3, 3);
  RngStream c1(9, "candidates");
  const CandidateBatch one = sample_candidates(actor, obs, 1, c1);
  EXPECT_EQ(one.actions.rows(), 3);
  EXPECT_TRUE(one.actions == generate_action(actor, obs, one.noise));

  RngStream c8(9, "candidates");
  const CandidateBatch eight = sample_candidates(actor, obs, 8, c8);
  EXPECT_EQ(eight.batch, 3);
  EXPECT_EQ(eight.group, 8);
  EXPECT_EQ(eight.actions.rows(), 24);
  EXPECT_EQ(eight.item(2).rows(), 8);
  // Row b*G + g belongs to observation b.
  EXPECT_TRUE(eight.input.row(17).leftCols(3) == obs.row(2));
}

TEST(SampleCandidates, SeedDeterminism) {
  RngStream rng(6, "init");
  const GenerativeActor actor = make_generative_actor(small_shape(), rng);
  const MatrixXd obs = rng.normal_matrix(2, 3);
  RngStream a(1, "candidates");
  RngStream b(1, "candidates");
  EXPECT_TRUE(sample_candidates(actor, obs, 8, a).actions == sample_candidates(actor, obs, 8, b).actions);
}

TEST(GaussianActor, LogProbClosedForms) {
  RngStream rng(7, "init");
  NetworkShape s = small_shape();
  s.action_dim = 1;
  GaussianActor actor = make_gaussian_actor(s, rng);
  actor.mean_net = zeros_like(actor.mean_net);
  EXPECT_TRUE(actor.log_std.isZero(0.0));
  const MatrixXd obs = rng.normal_matrix(2, 3);
  MatrixXd action(2, 1);
  action << 0.0, 1.0;
  const VectorXd lp = gaussian_log_prob(actor, obs, action);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(lp(0), -half_log_2pi, 1e-15);
  EXPECT_NEAR(lp(0), -0.918939, 1e-6);
  EXPECT_NEAR(lp(1), -0.5 - half_log_2pi, 1e-15);
}

TEST(GaussianActor, LogStdScalesDensity) {
  RngStream rng(8, "init");
  NetworkShape s = small_shape();
  s.action_dim = 2;
  GaussianActor actor = make_gaussian_actor(s, rng);
  actor.mean_net = zeros_like(actor.mean_net);
  actor.log_std << std::log(2.0), 0.0;
  MatrixXd action(1, 2);
  action << 2.0, 0.0;
  const double expected = -0.5 - std::log(2.0) - 0.5 * std::log(2.0 * std::numbers::pi) -
                          0.5 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(gaussian_log_prob(actor, MatrixXd::Zero(1, 3), action)(0), expected, 1e-14);
}

TEST(Critic, ZeroNetworkGivesZero) {
  RngStream rng(9, "init");
  Critic critic = make_critic(small_shape(), rng);
  critic.net = zeros_like(critic.net);
  EXPECT_TRUE(critic_value(critic, rng.normal_matrix(5, 3)).isZero(0.0));
}

BimodalBandit make_bandit() { return BimodalBandit(EnvParams{}, RngStream(1, "env")); }

TEST(BimodalBandit, ResetAndModeCenters) {
  BimodalBandit env = make_bandit();
  EXPECT_TRUE(env.reset().isZero(0.0));
  EXPECT_EQ(env.reset().size(), 1);
  EXPECT_EQ(env.reward(Eigen::Vector2d(1.0, 0.0)), 1.0);
  EXPECT_EQ(env.reward(Eigen::Vector2d(-1.0, 0.0)), 1.0);
  EXPECT_NEAR(env.reward(Eigen::Vector2d(0.0, 0.0)), std::exp(-1.0 / 0.09), 1e-20);
  EXPECT_NEAR(env.reward(Eigen::Vector2d(0.0, 0.0)), 1.5e-5, 1e-6);
}

TEST(BimodalBandit, MirrorSymmetry) {
  BimodalBandit env = make_bandit();
  RngStream rng(3, "mirror");
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d a(rng.uniform(-2, 2), rng.uniform(-2, 2));
    EXPECT_EQ(env.reward(a), env.reward(Eigen::Vector2d(-a(0), a(1))));
  }
}

TEST(BimodalBandit, SingleStepEpisodes) {
  BimodalBandit env = make_bandit();
  env.reset();
  const StepResult r = env.step(Eigen::Vector2d(1.0, 0.0));
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_THROW(env.step(Eigen::Vector2d(1.0, 0.0)), Error);
  EXPECT_THROW(BimodalBandit(EnvParams{}, RngStream(1, "env")).step(Eigen::Vector2d::Zero()), Error);
}

TEST(BimodalBandit, ActionsAreClippedBeforeReward) {
  BimodalBandit env = make_bandit();
  env.reset();
  // Far outside the action bound of 2: clipped to (2, 0), which is 1 away from c2.
  EXPECT_NEAR(env.step(Eigen::Vector2d(50.0, 0.0)).reward, std::exp(-1.0 / 0.09), 1e-20);
}

TEST(PointMassReach, ResetDistribution) {
  PointMassReach env(EnvParams{}, RngStream(4, "env"));
  for (int i = 0; i < 50; ++i) {
    const VectorXd obs = env.reset();
    ASSERT_EQ(obs.size(), 6);
    EXPECT_LE(obs.head(2).cwiseAbs().maxCoeff(), 1.0);
    EXPECT_TRUE(obs.segment(2, 2).isZero(0.0));
    EXPECT_LE(obs.tail(2).cwiseAbs().maxCoeff(), 1.0);
    EXPECT_EQ(env.step_count(), 0);
  }
}

TEST(PointMassReach, ZeroActionFromRest) {
  PointMassReach env(EnvParams{}, RngStream(5, "env"));
  env.reset();
  const Eigen::Vector2d pos = env.position();
  const StepResult r = env.step(Eigen::Vector2d::Zero());
  EXPECT_TRUE(env.position() == pos);
  EXPECT_EQ(r.reward, -(pos - env.goal()).norm());
  EXPECT_FALSE(r.done);
}

TEST(PointMassReach, DynamicsAndHorizon) {
  PointMassReach env(EnvParams{}, RngStream(6, "env"));
  env.reset();
  RngStream rng(1, "actions");
  for (int t = 0; t < 64; ++t) {
    const Eigen::Vector2d pos = env.position();
    const Eigen::Vector2d vel = env.velocity();
    const Eigen::Vector2d a(rng.uniform(-3, 3), rng.uniform(-3, 3));
    const StepResult r = env.step(a);
    const Eigen::Vector2d clipped = a.cwiseMax(-1.0).cwiseMin(1.0);
    EXPECT_LT((env.velocity() - (vel + clipped * 0.1)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((env.position() - pos).norm(), env.velocity().norm() * 0.1 + 1e-15);
    const double dist = (env.position() - env.goal()).norm();
    EXPECT_EQ(r.reward, -dist + (dist < 0.05 ? 5.0 : 0.0));
    EXPECT_EQ(r.done, t == 63);
  }
  EXPECT_THROW(env.step(Eigen::Vector2d::Zero()), Error);
  EXPECT_DOUBLE_EQ(env.return_upper_bound(), 5.0 * 64);
}

TEST(PointMassReach, DeterministicGivenSeedAndActions) {
  auto run = [] {
    PointMassReach env(EnvParams{}, RngStream(7, "env"));
    std::vector<double> rewards;
    env.reset();
    for (int t = 0; t < 10; ++t) rewards.push_back(env.step(Eigen::Vector2d(0.3, -0.2)).reward);
    return rewards;
  };
  EXPECT_EQ(run(), run());
}

TEST(PointMassReach, RejectsBadActions) {
  PointMassReach env(EnvParams{}, RngStream(8, "env"));
  env.reset();
  EXPECT_THROW(env.step(VectorXd::Zero(3)), ShapeError);
  EXPECT_THROW(env.step(Eigen::Vector2d(NAN, 0.0)), NonFiniteError);
}

TEST(MakeEnv, SelectsByName) {
  EXPECT_EQ(make_env("bimodal_bandit", EnvParams{}, RngStream(1))->name(), "bimodal_bandit");
  EXPECT_EQ(make_env("point_mass", EnvParams{}, RngStream(1))->name(), "point_mass");
  EXPECT_THROW(make_env("cartpole", EnvParams{}, RngStream(1)), Error);
}

TEST(EnvSet, IndependentSeededStreams) {
  EnvSet a("point_mass", EnvParams{}, 3, 4);
  EnvSet b("point_mass", EnvParams{}, 3, 4);
  EXPECT_TRUE(a.observations() == b.observations());
  EXPECT_NE(a.observations().row(0), a.observations().row(1));
  EXPECT_EQ(a.observations().rows(), 4);
}

}  // namespace
}  // namespace podpo
