#ifndef PODPO_TRAINER_HPP
#define PODPO_TRAINER_HPP

#include <functional>
#include <optional>
#include <vector>

#include "podpo/config.hpp"
#include "podpo/drift.hpp"
#include "podpo/envs.hpp"
#include "podpo/losses.hpp"
#include "podpo/metrics.hpp"
#include "podpo/nn.hpp"
#include "podpo/policy.hpp"
#include "podpo/rng.hpp"
#include "podpo/rollout.hpp"

namespace podpo {

/// Adam state of the Gaussian actor: the mean network plus its log_std vector.
struct GaussianAdamState {
  AdamState<double> net;
  VectorXd log_std_m;
  VectorXd log_std_v;
};

/// Everything a run mutates. Owned by the caller, advanced by train_iteration.
struct TrainState {
  TrainConfig config;
  EnvSet envs;
  Critic critic;
  AdamState<double> critic_opt;
  // algorithm == podpo
  std::optional<GenerativeActor> actor;
  std::optional<AdamState<double>> actor_opt;
  // algorithm == ppo_baseline
  std::optional<GaussianActor> baseline;
  std::optional<GaussianAdamState> baseline_opt;

  std::vector<RngStream> noise_streams;  ///< rollout noise, one per env
  RngStream candidate_rng;
  RngStream shuffle_rng;
  int iteration = 0;
  std::optional<MetricsRow> last_row;
};

TrainState make_train_state(const TrainConfig& config);

/// One rollout followed by `epochs` passes of minibatch updates.
///
/// PODPO: advantages are normalized over the whole batch and only samples with
/// A > 0 enter the drifting loss; the clipped value loss uses every sample.
/// Throws NonFiniteError naming the iteration and the offending term.
MetricsRow train_iteration(TrainState& state);

/// Runs `iterations` iterations, calling `on_row` after each one.
std::vector<MetricsRow> train(TrainState& state, int iterations,
                              const std::function<void(const MetricsRow&)>& on_row = {});

/// Greedy policy evaluation: zero noise for the generative actor, the mean for
/// the Gaussian actor. Returns the mean episode return.
double evaluate_greedy(const TrainState& state, int episodes);

/// Actions of the current policy for `count` fresh noise draws at one observation.
MatrixXd sample_policy_actions(const TrainState& state, const VectorXd& obs, int count, RngStream& rng);

/// Deterministic permutation of 0..n-1.
std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, RngStream& rng);

}  // namespace podpo

#endif  // PODPO_TRAINER_HPP
