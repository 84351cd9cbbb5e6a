#include "podpo/policy.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "podpo/errors.hpp"
#include "podpo/instrumentation.hpp"

namespace podpo {
namespace {

std::vector<Eigen::Index> widths(Eigen::Index in, const NetworkShape& shape, Eigen::Index out) {
  std::vector<Eigen::Index> w{in};
  for (Eigen::Index k = 0; k < shape.hidden_layers; ++k) {
    w.push_back(shape.hidden_width);
  }
  w.push_back(out);
  return w;
}

}  // namespace

GenerativeActor make_generative_actor(const NetworkShape& shape, RngStream& rng) {
  const Eigen::Index noise = shape.noise_dim > 0 ? shape.noise_dim : shape.action_dim;
  const auto w = widths(shape.obs_dim + noise, shape, shape.action_dim);
  return {init_mlp<double>(std::span<const Eigen::Index>(w), rng), noise};
}

GaussianActor make_gaussian_actor(const NetworkShape& shape, RngStream& rng) {
  const auto w = widths(shape.obs_dim, shape, shape.action_dim);
  return {init_mlp<double>(std::span<const Eigen::Index>(w), rng), VectorXd::Zero(shape.action_dim)};
}

Critic make_critic(const NetworkShape& shape, RngStream& rng) {
  const auto w = widths(shape.obs_dim, shape, 1);
  return {init_mlp<double>(std::span<const Eigen::Index>(w), rng)};
}

MatrixXd actor_input(const MatrixXd& obs, const MatrixXd& noise) {
  if (obs.rows() != noise.rows()) {
    throw ShapeError("noise rows", obs.rows(), noise.rows());
  }
  MatrixXd input(obs.rows(), obs.cols() + noise.cols());
  input << obs, noise;
  return input;
}

MatrixXd generate_action(const GenerativeActor& actor, const MatrixXd& obs, const MatrixXd& noise) {
  if (obs.cols() != actor.obs_dim()) {
    throw ShapeError("observation width", actor.obs_dim(), obs.cols());
  }
  if (noise.cols() != actor.noise_dim) {
    throw ShapeError("noise width", actor.noise_dim, noise.cols());
  }
  return mlp_forward(actor.net, actor_input(obs, noise));
}

CandidateBatch sample_candidates(const GenerativeActor& actor, const MatrixXd& obs_pos, Eigen::Index group,
                                 RngStream& rng) {
  if (group < 1) {
    throw ShapeError("candidate count G", 1, group);
  }
  if (obs_pos.cols() != actor.obs_dim()) {
    throw ShapeError("observation width", actor.obs_dim(), obs_pos.cols());
  }
  CandidateBatch out;
  out.batch = obs_pos.rows();
  out.group = group;
  const Eigen::Index rows = out.batch * group;
  MatrixXd obs_rep(rows, obs_pos.cols());
  for (Eigen::Index b = 0; b < out.batch; ++b) {
    obs_rep.middleRows(b * group, group) = obs_pos.row(b).replicate(group, 1);
  }
  out.noise = rng.normal_matrix(rows, actor.noise_dim);
  out.input = actor_input(obs_rep, out.noise);
  out.actions = mlp_forward(actor.net, out.input);
  return out;
}

MatrixXd gaussian_mean(const GaussianActor& actor, const MatrixXd& obs) { return mlp_forward(actor.mean_net, obs); }

VectorXd gaussian_log_prob(const GaussianActor& actor, const MatrixXd& obs, const MatrixXd& action) {
  ++instrumentation::counters().gaussian_log_prob;
  if (action.cols() != actor.action_dim()) {
    throw ShapeError("action width", actor.action_dim(), action.cols());
  }
  if (action.rows() != obs.rows()) {
    throw ShapeError("action rows", obs.rows(), action.rows());
  }
  const MatrixXd mean = gaussian_mean(actor, obs);
  const Eigen::RowVectorXd inv_std = (-actor.log_std.array()).exp().matrix().transpose();
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
  const MatrixXd z = (action - mean).array().rowwise() * inv_std.array();
  VectorXd out = -0.5 * z.rowwise().squaredNorm();
  out.array() -= actor.log_std.sum() + log_norm * static_cast<double>(actor.action_dim());
  return out;
}

VectorXd critic_value(const Critic& critic, const MatrixXd& obs) { return mlp_forward(critic.net, obs).col(0); }

}  // namespace podpo
