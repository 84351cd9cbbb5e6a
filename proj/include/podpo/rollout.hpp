#ifndef PODPO_ROLLOUT_HPP
#define PODPO_ROLLOUT_HPP

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "podpo/envs.hpp"
#include "podpo/nn.hpp"
#include "podpo/policy.hpp"
#include "podpo/rng.hpp"

namespace podpo {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// On-policy rollout of T steps over N environments.
///
/// Per-step quantities are T x N; per-sample rows (obs, actions) are flattened
/// with row index t * N + e.
struct Trajectory {
  Eigen::Index steps = 0;
  Eigen::Index num_envs = 0;
  MatrixXd obs;              ///< (T*N) x Dobs
  MatrixXd actions;          ///< (T*N) x D, as produced by the policy (before env clipping)
  MatrixXd rewards;          ///< T x N
  BoolMatrix dones;          ///< T x N
  MatrixXd values;           ///< T x N, critic at collection time
  VectorXd bootstrap_values; ///< N, critic at the observation after the last step
  MatrixXd advantages;       ///< T x N, filled by compute_gae
  MatrixXd returns;          ///< T x N, advantages + values
  VectorXd log_probs;        ///< T*N, only for likelihood-based policies
  std::vector<double> episode_returns;  ///< episodes that finished during collection

  [[nodiscard]] Eigen::Index size() const { return steps * num_envs; }
  /// T x N matrix flattened in sample order (t * N + e).
  [[nodiscard]] static VectorXd flatten(const MatrixXd& per_step);
};

/// Actions (and optionally their log-probabilities) for a batch of observations.
struct PolicyStep {
  MatrixXd actions;
  VectorXd log_probs;
};

using StepPolicy = std::function<PolicyStep(const MatrixXd& obs)>;

/// Steps every environment `steps` times with `policy`, resetting finished
/// episodes in place. Env errors are rethrown with the env index.
Trajectory collect_rollout(EnvSet& envs, const StepPolicy& policy, const Critic& critic, int steps);

/// Generative-actor rollout: one fresh noise draw per env step, taken from the
/// env's own noise stream (`noise_streams[e]`).
Trajectory collect_rollout(EnvSet& envs, const GenerativeActor& actor, const Critic& critic, int steps,
                           std::vector<RngStream>& noise_streams);

struct GaeResult {
  MatrixXd advantages;
  MatrixXd returns;
};

/// Generalized advantage estimation over T x N arrays.
///   delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
///   A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
GaeResult compute_gae(const MatrixXd& rewards, const MatrixXd& values, const BoolMatrix& dones,
                      const VectorXd& bootstrap, double gamma, double lambda);

/// Fills trajectory.advantages and trajectory.returns.
void compute_gae(Trajectory& trajectory, double gamma, double lambda);

/// (a - mean) / (population std + 1e-8). Requires at least two entries.
VectorXd normalize_advantages(const VectorXd& adv);

/// Samples with strictly positive normalized advantage, in collection order.
struct PositiveBatch {
  MatrixXd obs_pos;      ///< B_pos x Dobs
  MatrixXd actions_pos;  ///< B_pos x D
  VectorXd adv_pos;      ///< B_pos, all > 0
  std::vector<Eigen::Index> indices;  ///< flat sample index of each positive

  [[nodiscard]] Eigen::Index size() const { return adv_pos.size(); }
  [[nodiscard]] bool empty() const { return adv_pos.size() == 0; }
};

PositiveBatch filter_positive(const MatrixXd& obs, const MatrixXd& actions, const VectorXd& normalized_adv);

}  // namespace podpo

#endif  // PODPO_ROLLOUT_HPP
