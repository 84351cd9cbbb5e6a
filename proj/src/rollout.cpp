#include "podpo/rollout.hpp"

#include <cmath>
#include <string>

#include "podpo/errors.hpp"

namespace podpo {

VectorXd Trajectory::flatten(const MatrixXd& per_step) {
  // Row-major flattening of a T x N array gives index t * N + e.
  VectorXd out(per_step.size());
  Eigen::Index i = 0;
  for (Eigen::Index t = 0; t < per_step.rows(); ++t) {
    for (Eigen::Index e = 0; e < per_step.cols(); ++e) {
      out(i++) = per_step(t, e);
    }
  }
  return out;
}

Trajectory collect_rollout(EnvSet& envs, const StepPolicy& policy, const Critic& critic, int steps) {
  if (steps < 1) {
    throw ConfigError("steps", "must be >= 1");
  }
  const Eigen::Index n = envs.size();
  Trajectory traj;
  traj.steps = steps;
  traj.num_envs = n;
  traj.obs.resize(steps * n, envs.obs_dim());
  traj.actions.resize(steps * n, envs.action_dim());
  traj.rewards.resize(steps, n);
  traj.dones.resize(steps, n);
  traj.values.resize(steps, n);

  auto& running = envs.running_returns();
  for (int t = 0; t < steps; ++t) {
    const MatrixXd obs = envs.observations();
    const PolicyStep step = policy(obs);
    if (step.actions.rows() != n || step.actions.cols() != envs.action_dim()) {
      throw ShapeError("policy action rows", n, step.actions.rows());
    }
    if (step.log_probs.size() > 0) {
      if (traj.log_probs.size() == 0) {
        traj.log_probs.resize(steps * n);
      }
      traj.log_probs.segment(t * n, n) = step.log_probs;
    }
    traj.obs.middleRows(t * n, n) = obs;
    traj.actions.middleRows(t * n, n) = step.actions;
    traj.values.row(t) = critic_value(critic, obs).transpose();

    for (Eigen::Index e = 0; e < n; ++e) {
      auto& env = envs[static_cast<int>(e)];
      StepResult result;
      try {
        result = env.step(step.actions.row(e).transpose());
      } catch (const Error& err) {
        throw Error("env " + std::to_string(e) + ": " + err.what());
      }
      traj.rewards(t, e) = result.reward;
      traj.dones(t, e) = result.done;
      running[static_cast<std::size_t>(e)] += result.reward;
      if (result.done) {
        traj.episode_returns.push_back(running[static_cast<std::size_t>(e)]);
        running[static_cast<std::size_t>(e)] = 0.0;
        envs.observations().row(e) = env.reset().transpose();
      } else {
        envs.observations().row(e) = result.obs.transpose();
      }
    }
  }
  traj.bootstrap_values = critic_value(critic, envs.observations());
  return traj;
}

Trajectory collect_rollout(EnvSet& envs, const GenerativeActor& actor, const Critic& critic, int steps,
                           std::vector<RngStream>& noise_streams) {
  if (static_cast<int>(noise_streams.size()) != envs.size()) {
    throw ShapeError("noise stream count", envs.size(), static_cast<long>(noise_streams.size()));
  }
  const StepPolicy policy = [&](const MatrixXd& obs) {
    MatrixXd noise(obs.rows(), actor.noise_dim);
    for (Eigen::Index e = 0; e < obs.rows(); ++e) {
      noise.row(e) = noise_streams[static_cast<std::size_t>(e)].normal_matrix(1, actor.noise_dim);
    }
    return PolicyStep{generate_action(actor, obs, noise), {}};
  };
  return collect_rollout(envs, policy, critic, steps);
}

GaeResult compute_gae(const MatrixXd& rewards, const MatrixXd& values, const BoolMatrix& dones,
                      const VectorXd& bootstrap, double gamma, double lambda) {
  if (values.rows() != rewards.rows() || values.cols() != rewards.cols()) {
    throw ShapeError("gae values shape", rewards.size(), values.size());
  }
  if (dones.rows() != rewards.rows() || dones.cols() != rewards.cols()) {
    throw ShapeError("gae dones shape", rewards.size(), dones.size());
  }
  if (bootstrap.size() != rewards.cols()) {
    throw ShapeError("gae bootstrap length", rewards.cols(), bootstrap.size());
  }
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma", "must lie in [0, 1]");
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda", "must lie in [0, 1]");

  const Eigen::Index steps = rewards.rows();
  GaeResult out{MatrixXd(steps, rewards.cols()), MatrixXd()};
  for (Eigen::Index e = 0; e < rewards.cols(); ++e) {
    double next_adv = 0.0;
    for (Eigen::Index t = steps; t-- > 0;) {
      const double next_value = t + 1 < steps ? values(t + 1, e) : bootstrap(e);
      const double live = dones(t, e) ? 0.0 : 1.0;
      const double delta = rewards(t, e) + gamma * next_value * live - values(t, e);
      next_adv = delta + gamma * lambda * live * next_adv;
      out.advantages(t, e) = next_adv;
    }
  }
  out.returns = out.advantages + values;
  return out;
}

void compute_gae(Trajectory& trajectory, double gamma, double lambda) {
  auto gae = compute_gae(trajectory.rewards, trajectory.values, trajectory.dones, trajectory.bootstrap_values, gamma,
                         lambda);
  trajectory.advantages = std::move(gae.advantages);
  trajectory.returns = std::move(gae.returns);
}

VectorXd normalize_advantages(const VectorXd& adv) {
  if (adv.size() < 2) {
    throw ShapeError("normalize_advantages length (minimum)", 2, adv.size());
  }
  const double mean = adv.mean();
  const double var = (adv.array() - mean).square().mean();
  return (adv.array() - mean) / (std::sqrt(var) + 1e-8);
}

PositiveBatch filter_positive(const MatrixXd& obs, const MatrixXd& actions, const VectorXd& normalized_adv) {
  if (obs.rows() != normalized_adv.size()) {
    throw ShapeError("filter_positive obs rows", normalized_adv.size(), obs.rows());
  }
  if (actions.rows() != normalized_adv.size()) {
    throw ShapeError("filter_positive action rows", normalized_adv.size(), actions.rows());
  }
  PositiveBatch out;
  for (Eigen::Index i = 0; i < normalized_adv.size(); ++i) {
    if (normalized_adv(i) > 0.0) {
      out.indices.push_back(i);
    }
  }
  const auto count = static_cast<Eigen::Index>(out.indices.size());
  out.obs_pos.resize(count, obs.cols());
  out.actions_pos.resize(count, actions.cols());
  out.adv_pos.resize(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const Eigen::Index i = out.indices[static_cast<std::size_t>(k)];
    out.obs_pos.row(k) = obs.row(i);
    out.actions_pos.row(k) = actions.row(i);
    out.adv_pos(k) = normalized_adv(i);
  }
  return out;
}

}  // namespace podpo
