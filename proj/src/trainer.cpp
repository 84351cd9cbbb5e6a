#include "podpo/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "podpo/errors.hpp"
#include "updates.hpp"

namespace podpo {

namespace detail {

std::vector<Eigen::Index> chunk(const std::vector<Eigen::Index>& order, Eigen::Index parts, Eigen::Index k) {
  const auto n = static_cast<Eigen::Index>(order.size());
  const Eigen::Index begin = n * k / parts;
  const Eigen::Index end = n * (k + 1) / parts;
  return {order.begin() + begin, order.begin() + end};
}

MatrixXd gather_rows(const MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  }
  return out;
}

VectorXd gather(const VectorXd& v, const std::vector<Eigen::Index>& rows) {
  VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  }
  return out;
}

ValueTerm value_term(const TrainState& state, const MatrixXd& obs, const VectorXd& v_old, const VectorXd& returns) {
  const VectorXd v_new = critic_value(state.critic, obs);
  const auto loss = value_loss_clipped(v_new, v_old, returns, state.config.value_clip, state.config.value_coef);
  return {loss.loss, critic_backward(state.critic, obs, loss.value_grad)};
}

void fill_episode_stats(MetricsRow& row, const Trajectory& traj) {
  if (!traj.episode_returns.empty()) {
    row.mean_episode_return = std::accumulate(traj.episode_returns.begin(), traj.episode_returns.end(), 0.0) /
                              static_cast<double>(traj.episode_returns.size());
  }
}

}  // namespace detail

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, RngStream& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  return order;
}

TrainState make_train_state(const TrainConfig& config) {
  config.validate();
  EnvSet envs(config.env, config.env_params, config.seed, config.num_envs);
  NetworkShape shape{envs.obs_dim(), envs.action_dim(), config.hidden_width, config.hidden_layers, config.noise_dim};

  const AdamConfig<double> critic_adam{config.critic_lr, config.adam_beta1, config.adam_beta2, config.adam_eps};
  const AdamConfig<double> actor_adam{config.actor_lr, config.adam_beta1, config.adam_beta2, config.adam_eps};

  RngStream critic_init(config.seed, "init_critic");
  Critic critic = make_critic(shape, critic_init);
  auto critic_opt = make_adam_state(critic.net, critic_adam);

  TrainState state{config,
                   std::move(envs),
                   std::move(critic),
                   std::move(critic_opt),
                   std::nullopt,
                   std::nullopt,
                   std::nullopt,
                   std::nullopt,
                   {},
                   RngStream(config.seed, "candidates"),
                   RngStream(config.seed, "minibatch_shuffle"),
                   0,
                   std::nullopt};

  if (config.algorithm == Algorithm::podpo) {
    RngStream init(config.seed, "init_actor");
    state.actor = make_generative_actor(shape, init);
    state.actor_opt = make_adam_state(state.actor->net, actor_adam);
  } else {
    RngStream init(config.seed, "init_baseline_actor");
    state.baseline = make_gaussian_actor(shape, init);
    const auto d = state.baseline->action_dim();
    state.baseline_opt =
        GaussianAdamState{make_adam_state(state.baseline->mean_net, actor_adam), VectorXd::Zero(d), VectorXd::Zero(d)};
  }
  for (int e = 0; e < config.num_envs; ++e) {
    state.noise_streams.emplace_back(config.seed, "rollout_noise", static_cast<std::uint64_t>(e));
  }
  return state;
}

MetricsRow train_iteration(TrainState& state) {
  const auto start = std::chrono::steady_clock::now();
  MetricsRow row = state.config.algorithm == Algorithm::podpo ? detail::podpo_iteration(state)
                                                              : detail::ppo_iteration(state);
  row.iteration = state.iteration;
  if (state.config.record_wall_ms) {
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  ++state.iteration;
  state.last_row = row;
  return row;
}

std::vector<MetricsRow> train(TrainState& state, int iterations,
                              const std::function<void(const MetricsRow&)>& on_row) {
  std::vector<MetricsRow> rows;
  rows.reserve(static_cast<std::size_t>(std::max(iterations, 0)));
  for (int i = 0; i < iterations; ++i) {
    rows.push_back(train_iteration(state));
    if (on_row) {
      on_row(rows.back());
    }
  }
  return rows;
}

MatrixXd sample_policy_actions(const TrainState& state, const VectorXd& obs, int count, RngStream& rng) {
  const MatrixXd obs_rep = obs.transpose().replicate(count, 1);
  if (state.actor) {
    const MatrixXd noise = rng.normal_matrix(count, state.actor->noise_dim);
    return generate_action(*state.actor, obs_rep, noise);
  }
  const auto& actor = *state.baseline;
  MatrixXd actions = gaussian_mean(actor, obs_rep);
  const MatrixXd noise = rng.normal_matrix(count, actor.action_dim());
  const Eigen::RowVectorXd std_dev = actor.log_std.array().exp().matrix().transpose();
  actions += (noise.array().rowwise() * std_dev.array()).matrix();
  return actions;
}

double evaluate_greedy(const TrainState& state, int episodes) {
  if (episodes < 1) {
    throw ConfigError("episodes", "must be >= 1");
  }
  auto env = make_env(state.config.env, state.config.env_params, RngStream(state.config.seed, "eval_env"));
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    VectorXd obs = env->reset();
    bool done = false;
    while (!done) {
      const MatrixXd row = obs.transpose();
      MatrixXd action;
      if (state.actor) {
        action = generate_action(*state.actor, row, MatrixXd::Zero(1, state.actor->noise_dim));
      } else {
        action = gaussian_mean(*state.baseline, row);
      }
      const auto result = env->step(action.row(0).transpose());
      total += result.reward;
      done = result.done;
      obs = result.obs;
    }
  }
  return total / static_cast<double>(episodes);
}

}  // namespace podpo
