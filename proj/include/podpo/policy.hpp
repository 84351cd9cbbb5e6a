#ifndef PODPO_POLICY_HPP
#define PODPO_POLICY_HPP

#include <Eigen/Core>

#include "podpo/nn.hpp"
#include "podpo/rng.hpp"

namespace podpo {

/// Single-step generative actor: concat(obs, noise) -> action in one pass.
/// Multimodality comes only from the noise input.
struct GenerativeActor {
  MlpParamsd net;
  Eigen::Index noise_dim = 1;

  [[nodiscard]] Eigen::Index obs_dim() const { return net.input_dim() - noise_dim; }
  [[nodiscard]] Eigen::Index action_dim() const { return net.output_dim(); }
};

/// Diagonal Gaussian actor with a state-independent log standard deviation.
struct GaussianActor {
  MlpParamsd mean_net;
  VectorXd log_std;

  [[nodiscard]] Eigen::Index obs_dim() const { return mean_net.input_dim(); }
  [[nodiscard]] Eigen::Index action_dim() const { return mean_net.output_dim(); }
};

struct Critic {
  MlpParamsd net;

  [[nodiscard]] Eigen::Index obs_dim() const { return net.input_dim(); }
};

struct NetworkShape {
  Eigen::Index obs_dim = 1;
  Eigen::Index action_dim = 1;
  Eigen::Index hidden_width = 64;
  Eigen::Index hidden_layers = 2;
  Eigen::Index noise_dim = 0;  ///< 0 means "same as action_dim"
};

GenerativeActor make_generative_actor(const NetworkShape& shape, RngStream& rng);
GaussianActor make_gaussian_actor(const NetworkShape& shape, RngStream& rng);
Critic make_critic(const NetworkShape& shape, RngStream& rng);

/// Concatenates observations and noise column-wise.
MatrixXd actor_input(const MatrixXd& obs, const MatrixXd& noise);

MatrixXd generate_action(const GenerativeActor& actor, const MatrixXd& obs, const MatrixXd& noise);

/// G candidates per observation row, each from fresh standard-normal noise.
struct CandidateBatch {
  MatrixXd input;   ///< (B*G) x (Dobs + Dz), row b*G + g
  MatrixXd noise;   ///< (B*G) x Dz
  MatrixXd actions; ///< (B*G) x D
  Eigen::Index batch = 0;
  Eigen::Index group = 0;

  /// Actions of observation b as a G x D matrix.
  [[nodiscard]] MatrixXd item(Eigen::Index b) const { return actions.middleRows(b * group, group); }
};

/// Noise is drawn observation by observation, candidate by candidate, so the
/// noise for observation b occupies a fixed window of the stream.
CandidateBatch sample_candidates(const GenerativeActor& actor, const MatrixXd& obs_pos, Eigen::Index group,
                                 RngStream& rng);

VectorXd gaussian_log_prob(const GaussianActor& actor, const MatrixXd& obs, const MatrixXd& action);

/// Gaussian mean and standard deviation for a batch of observations.
MatrixXd gaussian_mean(const GaussianActor& actor, const MatrixXd& obs);

VectorXd critic_value(const Critic& critic, const MatrixXd& obs);

}  // namespace podpo

#endif  // PODPO_POLICY_HPP
