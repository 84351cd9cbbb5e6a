#ifndef PODPO_SRC_UPDATES_HPP
#define PODPO_SRC_UPDATES_HPP

#include <vector>

#include "podpo/trainer.hpp"

namespace podpo::detail {

/// Contiguous near-equal split of `order` into `parts` chunks; chunk k.
std::vector<Eigen::Index> chunk(const std::vector<Eigen::Index>& order, Eigen::Index parts, Eigen::Index k);

MatrixXd gather_rows(const MatrixXd& m, const std::vector<Eigen::Index>& rows);
VectorXd gather(const VectorXd& v, const std::vector<Eigen::Index>& rows);

/// Critic update term shared by both algorithms.
struct ValueTerm {
  double loss = 0.0;
  MlpParamsd grad;
};
ValueTerm value_term(const TrainState& state, const MatrixXd& obs, const VectorXd& v_old, const VectorXd& returns);

void fill_episode_stats(MetricsRow& row, const Trajectory& traj);

MetricsRow podpo_iteration(TrainState& state);
MetricsRow ppo_iteration(TrainState& state);

}  // namespace podpo::detail

#endif  // PODPO_SRC_UPDATES_HPP
