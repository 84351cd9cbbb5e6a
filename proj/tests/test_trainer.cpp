#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <regex>

#include "podpo/config.hpp"
#include "podpo/errors.hpp"
#include "podpo/instrumentation.hpp"
#include "podpo/losses.hpp"
#include "podpo/metrics.hpp"
#include "podpo/trainer.hpp"
#include "source_scan.hpp"

namespace podpo {
namespace {

TrainConfig bandit_config() {
  TrainConfig c;
  c.env = "bimodal_bandit";
  c.num_envs = 32;
  c.steps = 1;
  c.hidden_width = 16;
  c.minibatch_size = 8;
  c.epochs = 2;
  c.seed = 3;
  return c;
}

std::string csv_of(const std::vector<MetricsRow>& rows) {
  std::string out = metrics_csv_header();
  for (const auto& r : rows) out += metrics_csv_line(r);
  return out;
}

bool finite(const std::optional<double>& v) { return v && std::isfinite(*v); }

TEST(Train, ZeroIterationsGiveNoRows) {
  TrainState state = make_train_state(bandit_config());
  EXPECT_TRUE(train(state, 0).empty());
  EXPECT_EQ(state.iteration, 0);
}

TEST(Train, PodpoSmokeIteration) {
  TrainState state = make_train_state(bandit_config());
  const MetricsRow row = train_iteration(state);
  EXPECT_EQ(row.iteration, 0);
  EXPECT_GT(row.frac_positive, 0.0);
  EXPECT_LT(row.frac_positive, 1.0);
  EXPECT_TRUE(finite(row.loss_drift));
  EXPECT_TRUE(finite(row.loss_value));
  EXPECT_FALSE(row.loss_surrogate);
  EXPECT_TRUE(finite(row.rv_total));
  EXPECT_EQ(row.ess_ratio.size(), 3U);
  EXPECT_EQ(row.max_p.size(), 3U);
  EXPECT_TRUE(finite(row.mean_episode_return));
  EXPECT_FALSE(row.wall_ms);
  EXPECT_EQ(state.iteration, 1);
  // One actor step per positive minibatch: epochs x ceil(B_pos / minibatch_size).
  const auto positives = static_cast<long>(std::lround(row.frac_positive * 32));
  EXPECT_EQ(state.actor_opt->step, 2 * ((positives + 7) / 8));
}

TEST(Train, BaselineSmokeIteration) {
  TrainConfig c = bandit_config();
  c.algorithm = Algorithm::ppo_baseline;
  TrainState state = make_train_state(c);
  EXPECT_FALSE(state.actor);
  const MetricsRow row = train_iteration(state);
  EXPECT_TRUE(finite(row.loss_surrogate));
  EXPECT_TRUE(finite(row.loss_value));
  EXPECT_FALSE(row.loss_drift);
  EXPECT_FALSE(row.rv_total);
}

TEST(Train, WallTimeIsOptIn) {
  TrainConfig c = bandit_config();
  c.record_wall_ms = true;
  TrainState state = make_train_state(c);
  const MetricsRow row = train_iteration(state);
  ASSERT_TRUE(row.wall_ms);
  EXPECT_GE(*row.wall_ms, 0.0);
}

TEST(Train, SeededRunsAreByteIdentical) {
  for (const Algorithm algorithm : {Algorithm::podpo, Algorithm::ppo_baseline}) {
    TrainConfig c = bandit_config();
    c.algorithm = algorithm;
    TrainState a = make_train_state(c);
    TrainState b = make_train_state(c);
    EXPECT_EQ(csv_of(train(a, 3)), csv_of(train(b, 3)));
  }
  TrainConfig c = bandit_config();
  TrainState a = make_train_state(c);
  c.seed = 4;
  TrainState b = make_train_state(c);
  EXPECT_NE(csv_of(train(a, 2)), csv_of(train(b, 2)));
}

TEST(Train, RowCallbackSeesEveryRow) {
  TrainState state = make_train_state(bandit_config());
  std::vector<int> seen;
  const auto rows = train(state, 3, [&](const MetricsRow& r) { seen.push_back(r.iteration); });
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2}));
  ASSERT_TRUE(state.last_row);
  EXPECT_EQ(state.last_row->iteration, 2);
}

TEST(Train, NonFiniteLossAborts) {
  TrainConfig c = bandit_config();
  c.critic_lr = 1e300;
  TrainState state = make_train_state(c);
  try {
    train(state, 20);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_TRUE(std::regex_search(std::string(e.what()), std::regex("iteration [0-9]+: non-finite loss_")))
        << e.what();
  }
}

TEST(Train, ShuffleIsAPermutation) {
  RngStream rng(1, "minibatch_shuffle");
  auto order = shuffled_indices(50, rng);
  std::sort(order.begin(), order.end());
  for (Eigen::Index i = 0; i < 50; ++i) EXPECT_EQ(order[static_cast<std::size_t>(i)], i);
  EXPECT_TRUE(shuffled_indices(0, rng).empty());
}

TEST(Train, PolicySamplingAndGreedyEvaluation) {
  TrainState state = make_train_state(bandit_config());
  RngStream rng(1, "samples");
  const MatrixXd actions = sample_policy_actions(state, VectorXd::Zero(1), 100, rng);
  EXPECT_EQ(actions.rows(), 100);
  EXPECT_EQ(actions.cols(), 2);
  const double greedy = evaluate_greedy(state, 5);
  EXPECT_TRUE(std::isfinite(greedy));
  EXPECT_EQ(greedy, evaluate_greedy(state, 5));
  EXPECT_THROW(evaluate_greedy(state, 0), ConfigError);
}

// --- no clipping in the PODPO actor path ------------------------------------

TEST(NoClipping, ActorPathSourceHasNoRatioClipOrTrustRegion) {
  const auto sources = scan::actor_path_sources();
  EXPECT_EQ(sources.size(), 5U);
  for (const auto& f : scan::scan_actor_path()) ADD_FAILURE() << f.where << " contains '" << f.token << "'";
}

TEST(NoClipping, ScannerFlagsForbiddenTokens) {
  // Guard against a scanner that silently matches nothing.
  EXPECT_FALSE(scan::between(scan::read_source("src/losses.cpp"), "ValueLossResult value_loss_clipped(",
                             "SurrogateLossResult ppo_surrogate_loss(")
                   .empty());
  const std::string ppo = scan::strip_comments(scan::read_source("src/ppo_update.cpp"));
  EXPECT_TRUE(std::regex_search(ppo, std::regex("surrogate|clip", std::regex::icase)));
}

TEST(NoClipping, PodpoTrainingNeverEvaluatesRatiosOrLikelihoods) {
  instrumentation::reset();
  TrainState state = make_train_state(bandit_config());
  train(state, 2);
  EXPECT_EQ(instrumentation::counters().ratio_clip.load(), 0U);
  EXPECT_EQ(instrumentation::counters().gaussian_log_prob.load(), 0U);
  EXPECT_GT(instrumentation::counters().value_clip.load(), 0U);  // critic only

  // The counters do fire on the baseline path, so the zeros above are meaningful.
  TrainConfig c = bandit_config();
  c.algorithm = Algorithm::ppo_baseline;
  TrainState baseline = make_train_state(c);
  train(baseline, 1);
  EXPECT_GT(instrumentation::counters().ratio_clip.load(), 0U);
  EXPECT_GT(instrumentation::counters().gaussian_log_prob.load(), 0U);
  instrumentation::reset();
}

// --- cost of the drifting loss in G -------------------------------------------

double drift_loss_seconds(Eigen::Index group) {
  RngStream rng(1, "init_actor");
  NetworkShape shape;
  shape.obs_dim = 6;
  shape.action_dim = 2;
  const GenerativeActor actor = make_generative_actor(shape, rng);
  RngStream data(2, "batch");
  const MatrixXd obs = data.normal_matrix(256, 6);
  const MatrixXd actions = data.normal_matrix(256, 2);
  const VectorXd adv = VectorXd::Ones(256);
  double best = 1e9;
  for (int rep = 0; rep < 5; ++rep) {
    RngStream cand(3, "candidates");
    const auto start = std::chrono::steady_clock::now();
    const auto candidates = sample_candidates(actor, obs, group, cand);
    const auto result = drifting_loss(actor, candidates, actions, adv, DriftLossOptions{});
    EXPECT_TRUE(std::isfinite(result.loss));
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

TEST(Complexity, DriftLossAtMostQuadraticInGroupSize) {
  const double t8 = drift_loss_seconds(8);
  const double t16 = drift_loss_seconds(16);
  EXPECT_LT(t16 / t8, 6.0) << "t8=" << t8 << " t16=" << t16;
}

// --- PPO baseline sanity ------------------------------------------------------

TEST(Baseline, PointMassReturnTrendsUpward) {
  TrainConfig c;
  c.algorithm = Algorithm::ppo_baseline;
  c.env = "point_mass";
  c.seed = 1;
  TrainState state = make_train_state(c);
  const auto rows = train(state, 50);
  // Least-squares slope of mean return against iteration.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    const double x = r.iteration;
    const double y = *r.mean_episode_return;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(rows.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_GT(slope, 0.0);
  double first = 0, last = 0;
  for (int i = 0; i < 10; ++i) {
    first += *rows[static_cast<std::size_t>(i)].mean_episode_return;
    last += *rows[rows.size() - 1 - static_cast<std::size_t>(i)].mean_episode_return;
  }
  EXPECT_GT(last, first);
}

}  // namespace
}  // namespace podpo
