#ifndef PODPO_LOSSES_HPP
#define PODPO_LOSSES_HPP

#include <vector>

#include <Eigen/Core>

#include "podpo/drift.hpp"
#include "podpo/nn.hpp"
#include "podpo/policy.hpp"

namespace podpo {

struct DriftLossOptions {
  double beta = 0.1;
  bool advantage_weighting = true;  ///< false: every positive gets weight 1
  std::vector<double> temps = default_temperatures();
};

/// Loss value and its gradient with respect to the candidate actions.
struct DriftLossValue {
  double loss = 0.0;
  MatrixXd action_grad;  ///< (B_pos*G) x D, same row layout as CandidateBatch::actions
};

/// Per-observation weight: beta * A for positives (|A| == A there), or 1 when
/// advantage weighting is off.
VectorXd drift_weights_for(const VectorXd& adv_pos, const DriftLossOptions& options);

/// Squared-error drifting loss toward the frozen target x + V:
///   L = (1/B) sum_b w_b (1/G) sum_g |x_bg - sg(x_bg + V_bg)|^2
/// The target is a constant, so dL/dx_bg = -(2 w_b / (B G)) V_bg.
DriftLossValue drifting_loss_from_field(const PointSets<double>& field, const VectorXd& weights);

/// Builds the drift inputs of a candidate batch: x = candidates of each
/// observation, y_pos = its rollout action, y_neg = x, self mask on.
DriftInputs<double> podpo_drift_inputs(const CandidateBatch& candidates, const MatrixXd& actions_pos,
                                       const std::vector<double>& temps);

struct DriftLossResult {
  double loss = 0.0;
  MlpParamsd actor_grad;
  PointSets<double> field;     ///< V under stop-gradient, empty for an empty batch
  DriftInputs<double> inputs;  ///< inputs used to compute the field
};

/// Full PODPO actor objective for one minibatch of positives: field from the
/// candidates (no gradient), loss, and actor-parameter gradient through the
/// candidate actions. An empty batch yields zero loss and zero gradient.
DriftLossResult drifting_loss(const GenerativeActor& actor, const CandidateBatch& candidates,
                              const MatrixXd& actions_pos, const VectorXd& adv_pos, const DriftLossOptions& options);

struct ValueLossResult {
  double loss = 0.0;
  VectorXd value_grad;  ///< dL/dv_new
};

/// c_v * mean max((v - R)^2, (v_old + clamp(v - v_old, -eps, eps) - R)^2).
ValueLossResult value_loss_clipped(const VectorXd& v_new, const VectorXd& v_old, const VectorXd& returns,
                                   double eps_v, double c_v);

struct SurrogateLossResult {
  double loss = 0.0;
  VectorXd logp_grad;  ///< dL/dlogp_new
};

/// -mean min(r A, clip(r, 1 - eps, 1 + eps) A), r = exp(logp_new - logp_old).
SurrogateLossResult ppo_surrogate_loss(const VectorXd& logp_new, const VectorXd& logp_old, const VectorXd& adv,
                                       double eps_clip);

struct GaussianGrad {
  MlpParamsd mean_net;
  VectorXd log_std;
};

/// Pulls dL/dlogp back to the Gaussian actor's parameters.
GaussianGrad gaussian_log_prob_backward(const GaussianActor& actor, const MatrixXd& obs, const MatrixXd& action,
                                        const VectorXd& logp_grad);

/// Pulls dL/dv back to the critic's parameters.
MlpParamsd critic_backward(const Critic& critic, const MatrixXd& obs, const VectorXd& value_grad);

}  // namespace podpo

#endif  // PODPO_LOSSES_HPP
