#include "podpo/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "podpo/envs.hpp"
#include "podpo/losses.hpp"
#include "podpo/policy.hpp"

namespace podpo {
namespace {

constexpr double kFloor = 1e-6;

void corrupt(MlpParamsd& g) {
  for (auto& layer : g.layers) {
    layer.weight = -layer.weight;
    layer.bias = -layer.bias;
  }
}

NetworkShape shape_for(const TrainConfig& config) {
  const auto env = make_env(config.env, config.env_params, RngStream(0));
  return {env->obs_dim(), env->action_dim(), config.hidden_width, config.hidden_layers, config.noise_dim};
}

/// Networks in the default config are large; the loss suites use a narrow copy.
NetworkShape narrow(NetworkShape s) {
  s.hidden_width = std::min<Eigen::Index>(s.hidden_width, 8);
  return s;
}

double mlp_suite(const TrainConfig& config, const GradCheckOptions& opt, bool flip) {
  const auto shape = shape_for(config);
  double worst = 0.0;
  for (int s = 0; s < opt.seeds; ++s) {
    RngStream rng(opt.seed + static_cast<std::uint64_t>(s), "grad_check_mlp");
    // Actor-shaped and critic-shaped networks.
    const GenerativeActor actor = make_generative_actor(shape, rng);
    const Critic critic = make_critic(shape, rng);
    for (const MlpParamsd* net : {&actor.net, &critic.net}) {
      const MatrixXd input = rng.normal_matrix(4, net->input_dim());
      const MatrixXd cotangent = rng.normal_matrix(4, net->output_dim());
      auto analytic = mlp_backward(*net, input, cotangent).param_grads;
      if (flip) corrupt(analytic);
      const auto numeric = finite_diff_gradient(
          [&](const MlpParamsd& p) { return (mlp_forward(p, input).array() * cotangent.array()).sum(); }, *net,
          opt.step);
      worst = std::max(worst, max_relative_error(analytic, numeric, kFloor));
    }
  }
  return worst;
}

double drift_suite(const TrainConfig& config, const GradCheckOptions& opt, bool flip) {
  const auto shape = narrow(shape_for(config));
  double worst = 0.0;
  for (int s = 0; s < opt.seeds; ++s) {
    RngStream rng(opt.seed + static_cast<std::uint64_t>(s), "grad_check_drift");
    const GenerativeActor actor = make_generative_actor(shape, rng);
    const Eigen::Index batch = 3;
    const Eigen::Index group = std::max(2, std::min(config.group, 4));
    const MatrixXd obs = rng.normal_matrix(batch, actor.obs_dim());
    const MatrixXd actions_pos = rng.normal_matrix(batch, actor.action_dim());
    VectorXd adv(batch);
    for (Eigen::Index b = 0; b < batch; ++b) adv(b) = 0.1 + std::abs(rng.normal());
    const auto candidates = sample_candidates(actor, obs, group, rng);
    const DriftLossOptions options{config.beta, config.advantage_weighting, config.temps};

    auto result = drifting_loss(actor, candidates, actions_pos, adv, options);
    if (flip) corrupt(result.actor_grad);

    // Target frozen at the base point: x + V with V from the unperturbed actor.
    MatrixXd target = candidates.actions;
    for (Eigen::Index b = 0; b < batch; ++b) {
      target.middleRows(b * group, group) += result.field[static_cast<std::size_t>(b)];
    }
    const VectorXd w = drift_weights_for(adv, options);
    const auto objective = [&](const MlpParamsd& p) {
      const MatrixXd x = mlp_forward(p, candidates.input);
      double loss = 0.0;
      for (Eigen::Index b = 0; b < batch; ++b) {
        loss += w(b) * (x.middleRows(b * group, group) - target.middleRows(b * group, group)).squaredNorm();
      }
      return loss / static_cast<double>(batch * group);
    };
    const auto numeric = finite_diff_gradient(objective, actor.net, opt.step);
    worst = std::max(worst, max_relative_error(result.actor_grad, numeric, kFloor));
  }
  return worst;
}

double value_suite(const TrainConfig& config, const GradCheckOptions& opt, bool flip) {
  const auto shape = narrow(shape_for(config));
  const double eps = config.value_clip;
  // Offsets of v_new - v_old around both clip boundaries and well inside/outside.
  const std::vector<double> offsets{eps + 1e-3, eps - 1e-3, -eps - 1e-3, -eps + 1e-3, 0.05, -0.05, 1.0, -1.0};
  double worst = 0.0;
  for (int s = 0; s < opt.seeds; ++s) {
    RngStream rng(opt.seed + static_cast<std::uint64_t>(s), "grad_check_value");
    const Critic critic = make_critic(shape, rng);
    const auto n = static_cast<Eigen::Index>(offsets.size());
    const MatrixXd obs = rng.normal_matrix(n, critic.obs_dim());
    const VectorXd v_base = critic_value(critic, obs);
    VectorXd v_old(n);
    VectorXd returns(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v_old(i) = v_base(i) - offsets[static_cast<std::size_t>(i)];
      returns(i) = v_base(i) + rng.normal();
    }
    const auto loss = value_loss_clipped(v_base, v_old, returns, eps, config.value_coef);
    auto analytic = critic_backward(critic, obs, loss.value_grad);
    if (flip) corrupt(analytic);
    const auto numeric = finite_diff_gradient(
        [&](const MlpParamsd& p) {
          return value_loss_clipped(mlp_forward(p, obs).col(0), v_old, returns, eps, config.value_coef).loss;
        },
        critic.net, opt.step);
    worst = std::max(worst, max_relative_error(analytic, numeric, kFloor));
  }
  return worst;
}

double surrogate_suite(const TrainConfig& config, const GradCheckOptions& opt, bool flip) {
  const auto shape = narrow(shape_for(config));
  const double eps = config.ppo_clip;
  // log-ratio offsets inside and outside the clip range, away from the kinks.
  const std::vector<double> log_ratios{0.0, 0.05, -0.05, std::log(1.0 + eps) + 0.05, std::log(1.0 - eps) - 0.05,
                                       0.5, -0.5, std::log(1.0 + eps) - 0.02};
  double worst = 0.0;
  for (int s = 0; s < opt.seeds; ++s) {
    RngStream rng(opt.seed + static_cast<std::uint64_t>(s), "grad_check_surrogate");
    GaussianActor actor = make_gaussian_actor(shape, rng);
    for (Eigen::Index d = 0; d < actor.log_std.size(); ++d) actor.log_std(d) = 0.3 * rng.normal();
    const auto n = static_cast<Eigen::Index>(log_ratios.size());
    const MatrixXd obs = rng.normal_matrix(n, actor.obs_dim());
    const MatrixXd actions = gaussian_mean(actor, obs) + rng.normal_matrix(n, actor.action_dim());
    const VectorXd logp = gaussian_log_prob(actor, obs, actions);
    VectorXd logp_old(n);
    VectorXd adv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      logp_old(i) = logp(i) - log_ratios[static_cast<std::size_t>(i)];
      adv(i) = (i % 2 == 0 ? 1.0 : -1.0) * (0.5 + std::abs(rng.normal()));
    }
    const auto loss = ppo_surrogate_loss(logp, logp_old, adv, eps);
    auto analytic = gaussian_log_prob_backward(actor, obs, actions, loss.logp_grad);
    if (flip) {
      corrupt(analytic.mean_net);
      analytic.log_std = -analytic.log_std;
    }
    const auto objective = [&](const GaussianActor& a) {
      return ppo_surrogate_loss(gaussian_log_prob(a, obs, actions), logp_old, adv, eps).loss;
    };
    const auto numeric_mean = finite_diff_gradient(
        [&](const MlpParamsd& p) {
          GaussianActor a{p, actor.log_std};
          return objective(a);
        },
        actor.mean_net, opt.step);
    worst = std::max(worst, max_relative_error(analytic.mean_net, numeric_mean, kFloor));
    for (Eigen::Index d = 0; d < actor.log_std.size(); ++d) {
      GaussianActor a = actor;
      a.log_std(d) += opt.step;
      const double plus = objective(a);
      a.log_std(d) -= 2.0 * opt.step;
      const double minus = objective(a);
      const double numeric = (plus - minus) / (2.0 * opt.step);
      const double denom = std::max({std::abs(numeric), std::abs(analytic.log_std(d)), kFloor});
      worst = std::max(worst, std::abs(numeric - analytic.log_std(d)) / denom);
    }
  }
  return worst;
}

}  // namespace

const std::vector<std::string>& grad_suite_names() {
  static const std::vector<std::string> names{"mlp", "drifting_loss", "value_loss", "surrogate"};
  return names;
}

std::vector<GradSuiteResult> run_grad_checks(const TrainConfig& config, const GradCheckOptions& options) {
  std::vector<GradSuiteResult> results;
  for (const auto& name : grad_suite_names()) {
    const bool flip = options.corrupt_suite == name;
    double worst = 0.0;
    if (name == "mlp") worst = mlp_suite(config, options, flip);
    if (name == "drifting_loss") worst = drift_suite(config, options, flip);
    if (name == "value_loss") worst = value_suite(config, options, flip);
    if (name == "surrogate") worst = surrogate_suite(config, options, flip);
    results.push_back({name, worst, worst <= options.tolerance});
  }
  return results;
}

std::string format_grad_report(const std::vector<GradSuiteResult>& results) {
  std::ostringstream out;
  out << "suite\tworst_relative_error\tstatus\n";
  for (const auto& r : results) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.3e", r.worst_relative_error);
    out << r.name << '\t' << buffer << '\t' << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  return out.str();
}

}  // namespace podpo
