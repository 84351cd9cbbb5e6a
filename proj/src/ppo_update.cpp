// Clipped-surrogate Gaussian baseline.

#include <cmath>
#include <string>

#include "podpo/errors.hpp"
#include "updates.hpp"

namespace podpo::detail {

MetricsRow ppo_iteration(TrainState& state) {
  const auto& cfg = state.config;
  auto& actor = *state.baseline;
  auto& opt = *state.baseline_opt;

  const StepPolicy policy = [&](const MatrixXd& obs) {
    MatrixXd noise(obs.rows(), actor.action_dim());
    for (Eigen::Index e = 0; e < obs.rows(); ++e) {
      noise.row(e) = state.noise_streams[static_cast<std::size_t>(e)].normal_matrix(1, actor.action_dim());
    }
    const Eigen::RowVectorXd std_dev = actor.log_std.array().exp().matrix().transpose();
    MatrixXd actions = gaussian_mean(actor, obs) + (noise.array().rowwise() * std_dev.array()).matrix();
    VectorXd logp = gaussian_log_prob(actor, obs, actions);
    return PolicyStep{std::move(actions), std::move(logp)};
  };

  Trajectory traj = collect_rollout(state.envs, policy, state.critic, cfg.steps);
  compute_gae(traj, cfg.gamma, cfg.lambda);
  const VectorXd adv = normalize_advantages(Trajectory::flatten(traj.advantages));
  const VectorXd v_old = Trajectory::flatten(traj.values);
  const VectorXd returns = Trajectory::flatten(traj.returns);

  MetricsRow row;
  fill_episode_stats(row, traj);
  row.frac_positive = static_cast<double>((adv.array() > 0.0).count()) / static_cast<double>(adv.size());

  const Eigen::Index minibatches = std::max<Eigen::Index>(1, (traj.size() + cfg.minibatch_size - 1) / cfg.minibatch_size);
  double surrogate_sum = 0.0;
  double value_sum = 0.0;
  int count = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(traj.size(), state.shuffle_rng);
    for (Eigen::Index k = 0; k < minibatches; ++k) {
      const auto rows = chunk(order, minibatches, k);
      if (rows.empty()) continue;
      const MatrixXd obs = gather_rows(traj.obs, rows);
      const MatrixXd actions = gather_rows(traj.actions, rows);
      const VectorXd logp_new = gaussian_log_prob(actor, obs, actions);
      const auto surrogate = ppo_surrogate_loss(logp_new, gather(traj.log_probs, rows), gather(adv, rows), cfg.ppo_clip);
      if (!std::isfinite(surrogate.loss)) {
        throw NonFiniteError("iteration " + std::to_string(state.iteration) + ": non-finite loss_surrogate");
      }
      const auto grad = gaussian_log_prob_backward(actor, obs, actions, surrogate.logp_grad);
      if (!grad.log_std.allFinite()) {
        throw NonFiniteError("non-finite gradient in log_std");
      }
      adam_step(actor.mean_net, grad.mean_net, opt.net);
      // log_std shares the step counter that adam_step just advanced.
      podpo::detail::adam_apply(actor.log_std, grad.log_std, opt.log_std_m, opt.log_std_v, opt.net.step,
                                opt.net.config);

      const auto value = value_term(state, obs, gather(v_old, rows), gather(returns, rows));
      if (!std::isfinite(value.loss)) {
        throw NonFiniteError("iteration " + std::to_string(state.iteration) + ": non-finite loss_value");
      }
      adam_step(state.critic.net, value.grad, state.critic_opt);
      surrogate_sum += surrogate.loss;
      value_sum += value.loss;
      ++count;
    }
  }
  if (count > 0) {
    row.loss_surrogate = surrogate_sum / count;
    row.loss_value = value_sum / count;
  }
  return row;
}

}  // namespace podpo::detail
