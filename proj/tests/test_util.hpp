#ifndef PODPO_TESTS_TEST_UTIL_HPP
#define PODPO_TESTS_TEST_UTIL_HPP

#include <vector>

#include "oracles.hpp"
#include "podpo/drift.hpp"
#include "podpo/nn.hpp"

namespace podpo::testing {

inline oracle::Points to_points(const MatrixXd& m) {
  oracle::Points out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

inline std::vector<oracle::Points> to_points(const PointSets<double>& sets) {
  std::vector<oracle::Points> out;
  for (const auto& s : sets) out.push_back(to_points(s));
  return out;
}

inline double max_abs_diff(const PointSets<double>& a, const std::vector<oracle::Points>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (Eigen::Index r = 0; r < a[i].rows(); ++r)
      for (Eigen::Index c = 0; c < a[i].cols(); ++c) worst = std::max(worst, std::abs(a[i](r, c) - b[i][r][c]));
  return worst;
}

/// Random drift instance with the given shape.
inline DriftInputs<double> random_drift_inputs(RngStream& rng, Eigen::Index batch, Eigen::Index group,
                                               Eigen::Index n_pos, Eigen::Index m_neg, Eigen::Index dim,
                                               bool mask_self, bool neg_is_x = false) {
  DriftInputs<double> in;
  in.mask_self = mask_self;
  for (Eigen::Index b = 0; b < batch; ++b) {
    in.x.push_back(rng.normal_matrix(group, dim));
    in.y_pos.push_back(rng.normal_matrix(n_pos, dim));
    in.y_neg.push_back(neg_is_x && m_neg == group ? in.x.back() : rng.normal_matrix(m_neg, dim));
  }
  return in;
}

inline double oracle_mlp_row(const MlpParamsd& p, const Eigen::RowVectorXd& input) {
  std::vector<std::vector<std::vector<double>>> w;
  std::vector<std::vector<double>> bias;
  for (const auto& layer : p.layers) {
    w.push_back(to_points(layer.weight));
    bias.emplace_back(layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  const std::vector<double> x(input.data(), input.data() + input.size());
  return oracle::mlp(w, bias, x)[0];
}

}  // namespace podpo::testing

#endif  // PODPO_TESTS_TEST_UTIL_HPP
