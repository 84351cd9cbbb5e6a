#include "podpo/losses.hpp"

#include <algorithm>
#include <cmath>

#include "podpo/errors.hpp"
#include "podpo/instrumentation.hpp"

namespace podpo {

VectorXd drift_weights_for(const VectorXd& adv_pos, const DriftLossOptions& options) {
  if (!options.advantage_weighting) {
    return VectorXd::Ones(adv_pos.size());
  }
  return options.beta * adv_pos.cwiseAbs();
}

DriftLossValue drifting_loss_from_field(const PointSets<double>& field, const VectorXd& weights) {
  const auto batch = static_cast<Eigen::Index>(field.size());
  if (weights.size() != batch) {
    throw ShapeError("drift loss weight count", batch, weights.size());
  }
  DriftLossValue out;
  if (batch == 0) {
    return out;
  }
  const Eigen::Index group = field.front().rows();
  const Eigen::Index dim = field.front().cols();
  out.action_grad.resize(batch * group, dim);
  const double norm = 1.0 / static_cast<double>(batch * group);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto& v = field[static_cast<std::size_t>(b)];
    // x - (x + V) == -V exactly for the frozen target.
    out.loss += weights(b) * norm * v.squaredNorm();
    out.action_grad.middleRows(b * group, group) = (-2.0 * weights(b) * norm) * v;
  }
  return out;
}

DriftInputs<double> podpo_drift_inputs(const CandidateBatch& candidates, const MatrixXd& actions_pos,
                                       const std::vector<double>& temps) {
  if (actions_pos.rows() != candidates.batch) {
    throw ShapeError("positive action rows", candidates.batch, actions_pos.rows());
  }
  DriftInputs<double> in;
  in.temps = temps;
  in.mask_self = true;
  in.x.reserve(static_cast<std::size_t>(candidates.batch));
  for (Eigen::Index b = 0; b < candidates.batch; ++b) {
    in.x.push_back(candidates.item(b));
    in.y_pos.push_back(actions_pos.row(b));
  }
  in.y_neg = in.x;
  return in;
}

DriftLossResult drifting_loss(const GenerativeActor& actor, const CandidateBatch& candidates,
                              const MatrixXd& actions_pos, const VectorXd& adv_pos, const DriftLossOptions& options) {
  DriftLossResult out;
  out.actor_grad = zeros_like(actor.net);
  if (adv_pos.size() != candidates.batch) {
    throw ShapeError("advantage count", candidates.batch, adv_pos.size());
  }
  if (candidates.batch == 0) {
    return out;
  }
  if ((adv_pos.array() <= 0.0).any()) {
    throw Error("drifting_loss: advantages of positive samples must be > 0");
  }
  out.inputs = podpo_drift_inputs(candidates, actions_pos, options.temps);
  out.field = compute_v(out.inputs);
  const auto value = drifting_loss_from_field(out.field, drift_weights_for(adv_pos, options));
  out.loss = value.loss;
  out.actor_grad = mlp_backward(actor.net, candidates.input, value.action_grad).param_grads;
  return out;
}

ValueLossResult value_loss_clipped(const VectorXd& v_new, const VectorXd& v_old, const VectorXd& returns,
                                   double eps_v, double c_v) {
  if (v_old.size() != v_new.size()) throw ShapeError("v_old length", v_new.size(), v_old.size());
  if (returns.size() != v_new.size()) throw ShapeError("returns length", v_new.size(), returns.size());
  ++instrumentation::counters().value_clip;
  ValueLossResult out;
  out.value_grad = VectorXd::Zero(v_new.size());
  if (v_new.size() == 0) {
    return out;
  }
  const double scale = c_v / static_cast<double>(v_new.size());
  for (Eigen::Index i = 0; i < v_new.size(); ++i) {
    const double step = v_new(i) - v_old(i);
    const double clipped_step = std::clamp(step, -eps_v, eps_v);
    const double plain = v_new(i) - returns(i);
    const double clipped = v_old(i) + clipped_step - returns(i);
    if (plain * plain >= clipped * clipped) {
      out.loss += scale * plain * plain;
      out.value_grad(i) = 2.0 * scale * plain;
    } else {
      out.loss += scale * clipped * clipped;
      const bool inside = step > -eps_v && step < eps_v;
      out.value_grad(i) = inside ? 2.0 * scale * clipped : 0.0;
    }
  }
  return out;
}

SurrogateLossResult ppo_surrogate_loss(const VectorXd& logp_new, const VectorXd& logp_old, const VectorXd& adv,
                                       double eps_clip) {
  if (logp_old.size() != logp_new.size()) throw ShapeError("logp_old length", logp_new.size(), logp_old.size());
  if (adv.size() != logp_new.size()) throw ShapeError("advantage length", logp_new.size(), adv.size());
  ++instrumentation::counters().ratio_clip;
  SurrogateLossResult out;
  out.logp_grad = VectorXd::Zero(logp_new.size());
  if (logp_new.size() == 0) {
    return out;
  }
  const double inv_n = 1.0 / static_cast<double>(logp_new.size());
  for (Eigen::Index i = 0; i < logp_new.size(); ++i) {
    const double ratio = std::exp(logp_new(i) - logp_old(i));
    const double unclipped = ratio * adv(i);
    const double clipped = std::clamp(ratio, 1.0 - eps_clip, 1.0 + eps_clip) * adv(i);
    if (unclipped <= clipped) {
      out.loss -= inv_n * unclipped;
      out.logp_grad(i) = -inv_n * unclipped;  // d(r A)/dlogp = r A
    } else {
      out.loss -= inv_n * clipped;
    }
  }
  return out;
}

GaussianGrad gaussian_log_prob_backward(const GaussianActor& actor, const MatrixXd& obs, const MatrixXd& action,
                                        const VectorXd& logp_grad) {
  if (logp_grad.size() != obs.rows()) throw ShapeError("logp_grad length", obs.rows(), logp_grad.size());
  const MatrixXd mean = gaussian_mean(actor, obs);
  const Eigen::RowVectorXd inv_var = (-2.0 * actor.log_std.array()).exp().matrix().transpose();
  const Eigen::RowVectorXd inv_std = (-actor.log_std.array()).exp().matrix().transpose();
  // dlogp/dmean = (a - mu) / sigma^2;  dlogp/dlog_std = z^2 - 1
  MatrixXd mean_grad = (action - mean).array().rowwise() * inv_var.array();
  mean_grad.array().colwise() *= logp_grad.array();
  const MatrixXd z = (action - mean).array().rowwise() * inv_std.array();
  MatrixXd std_terms = z.array().square() - 1.0;
  std_terms.array().colwise() *= logp_grad.array();

  GaussianGrad out;
  out.mean_net = mlp_backward(actor.mean_net, obs, mean_grad).param_grads;
  out.log_std = std_terms.colwise().sum().transpose();
  return out;
}

MlpParamsd critic_backward(const Critic& critic, const MatrixXd& obs, const VectorXd& value_grad) {
  if (value_grad.size() != obs.rows()) throw ShapeError("value_grad length", obs.rows(), value_grad.size());
  const MatrixXd out_grad = value_grad;
  return mlp_backward(critic.net, obs, out_grad).param_grads;
}

}  // namespace podpo
