// Generative-policy update. This file must stay free of likelihood ratios,
// gradient-norm limits and trust-region terms; a test scans it for them.

#include <cmath>
#include <string>

#include "podpo/errors.hpp"
#include "updates.hpp"

namespace podpo::detail {
namespace {

void require_finite(double value, int iteration, const char* term) {
  if (!std::isfinite(value)) {
    throw NonFiniteError("iteration " + std::to_string(iteration) + ": non-finite " + term);
  }
}

}  // namespace

MetricsRow podpo_iteration(TrainState& state) {
  const auto& cfg = state.config;
  auto& actor = *state.actor;

  Trajectory traj = collect_rollout(state.envs, actor, state.critic, cfg.steps, state.noise_streams);
  compute_gae(traj, cfg.gamma, cfg.lambda);
  const VectorXd adv = normalize_advantages(Trajectory::flatten(traj.advantages));
  const VectorXd v_old = Trajectory::flatten(traj.values);
  const VectorXd returns = Trajectory::flatten(traj.returns);
  const PositiveBatch positives = filter_positive(traj.obs, traj.actions, adv);

  MetricsRow row;
  fill_episode_stats(row, traj);
  row.frac_positive = static_cast<double>(positives.size()) / static_cast<double>(traj.size());

  const DriftLossOptions options{cfg.beta, cfg.advantage_weighting, cfg.temps};
  const Eigen::Index minibatches =
      std::max<Eigen::Index>(1, (positives.size() + cfg.minibatch_size - 1) / cfg.minibatch_size);

  double drift_sum = 0.0;
  double value_sum = 0.0;
  int drift_count = 0;
  int value_count = 0;
  bool diagnosed = false;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto pos_order = shuffled_indices(positives.size(), state.shuffle_rng);
    const auto all_order = shuffled_indices(traj.size(), state.shuffle_rng);
    for (Eigen::Index k = 0; k < minibatches; ++k) {
      const auto pos_rows = chunk(pos_order, minibatches, k);
      const auto all_rows = chunk(all_order, minibatches, k);

      if (!pos_rows.empty()) {
        const MatrixXd obs_pos = gather_rows(positives.obs_pos, pos_rows);
        const auto candidates = sample_candidates(actor, obs_pos, cfg.group, state.candidate_rng);
        const auto drift = drifting_loss(actor, candidates, gather_rows(positives.actions_pos, pos_rows),
                                         gather(positives.adv_pos, pos_rows), options);
        require_finite(drift.loss, state.iteration, "loss_drift");
        if (!diagnosed) {
          const auto diag = drift_diagnostics(drift.inputs);
          row.rv_total = diag.rv_total;
          row.ess_ratio = diag.ess_ratio;
          row.max_p = diag.max_p;
          diagnosed = true;
        }
        adam_step(actor.net, drift.actor_grad, *state.actor_opt);
        drift_sum += drift.loss;
        ++drift_count;
      }

      if (!all_rows.empty()) {
        const auto value = value_term(state, gather_rows(traj.obs, all_rows), gather(v_old, all_rows),
                                      gather(returns, all_rows));
        require_finite(value.loss, state.iteration, "loss_value");
        adam_step(state.critic.net, value.grad, state.critic_opt);
        value_sum += value.loss;
        ++value_count;
      }
    }
  }
  if (drift_count > 0) row.loss_drift = drift_sum / drift_count;
  if (value_count > 0) row.loss_value = value_sum / value_count;
  return row;
}

}  // namespace podpo::detail
