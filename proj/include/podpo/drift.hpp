#ifndef PODPO_DRIFT_HPP
#define PODPO_DRIFT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "podpo/errors.hpp"
#include "podpo/nn.hpp"

/**
 * \file
 * \brief Multi-temperature contrastive drifting field and its diagnostics.
 *
 * A batch of point clouds is a `PointSets`: one G x D matrix per batch item,
 * one point per row. The drifting vector for candidate g of item b pulls it
 * toward the positive targets and pushes it away from the negatives, with
 * weights from a doubly normalized softmax over scaled distances. The field is
 * a plain value: no gradient flows through it.
 */

namespace podpo {

template <class Scalar>
using PointSets = std::vector<Matrix<Scalar>>;

/// Offset added to candidate-to-self distances when negatives are the candidates.
inline constexpr double kSelfMaskOffset = 1e6;
/// Distances at or above this value are treated as masked.
inline constexpr double kMaskedDistance = 1e5;
/// Lower clamp for the adaptive distance scale.
inline constexpr double kMinScale = 1e-3;

inline std::vector<double> default_temperatures() { return {0.02, 0.15, 2.0}; }

template <class Scalar>
struct DriftInputs {
  PointSets<Scalar> x;      ///< B items of G x D candidates
  PointSets<Scalar> y_pos;  ///< B items of N_pos x D positives
  PointSets<Scalar> y_neg;  ///< B items of M_neg x D negatives
  std::vector<Scalar> temps{Scalar(0.02), Scalar(0.15), Scalar(2.0)};
  bool mask_self = true;
};

/// Distances after masking, plus the shared adaptive scale.
template <class Scalar>
struct DriftDistances {
  PointSets<Scalar> d_pos;  ///< B items of G x N_pos
  PointSets<Scalar> d_neg;  ///< B items of G x M_neg, diagonal offset when masked
  bool masked = false;
  Scalar scale = Scalar(1);
};

/// Per-temperature weight matrices, W_pos (G x N_pos) and W_neg (G x M_neg) per item.
template <class Scalar>
struct DriftWeights {
  PointSets<Scalar> w_pos;
  PointSets<Scalar> w_neg;
};

namespace detail {

template <class Scalar>
void check_finite(const PointSets<Scalar>& sets, const char* name) {
  for (std::size_t b = 0; b < sets.size(); ++b) {
    if (!sets[b].allFinite()) {
      throw NonFiniteError(std::string(name) + " item " + std::to_string(b) + " contains non-finite values");
    }
  }
}

template <class Scalar>
void validate(const DriftInputs<Scalar>& in) {
  const auto batch = static_cast<long>(in.x.size());
  if (batch == 0) {
    throw ShapeError("drift batch size", 1, 0);
  }
  if (static_cast<long>(in.y_pos.size()) != batch) {
    throw ShapeError("y_pos batch size", batch, static_cast<long>(in.y_pos.size()));
  }
  if (static_cast<long>(in.y_neg.size()) != batch) {
    throw ShapeError("y_neg batch size", batch, static_cast<long>(in.y_neg.size()));
  }
  if (in.temps.empty()) {
    throw ShapeError("temperature count", 1, 0);
  }
  for (const Scalar t : in.temps) {
    if (!(t > Scalar(0)) || !std::isfinite(static_cast<double>(t))) {
      throw Error("temperatures must be finite and > 0");
    }
  }
  const auto g = in.x.front().rows();
  const auto d = in.x.front().cols();
  const auto n = in.y_pos.front().rows();
  const auto m = in.y_neg.front().rows();
  if (g < 1) throw ShapeError("candidate count G", 1, g);
  if (n < 1) throw ShapeError("positive count N_pos", 1, n);
  if (m < 1) throw ShapeError("negative count M_neg", 1, m);
  for (std::size_t b = 0; b < in.x.size(); ++b) {
    if (in.x[b].rows() != g) throw ShapeError("x rows (G)", g, in.x[b].rows());
    if (in.x[b].cols() != d) throw ShapeError("x cols (D)", d, in.x[b].cols());
    if (in.y_pos[b].rows() != n) throw ShapeError("y_pos rows (N_pos)", n, in.y_pos[b].rows());
    if (in.y_pos[b].cols() != d) throw ShapeError("y_pos cols (D)", d, in.y_pos[b].cols());
    if (in.y_neg[b].rows() != m) throw ShapeError("y_neg rows (M_neg)", m, in.y_neg[b].rows());
    if (in.y_neg[b].cols() != d) throw ShapeError("y_neg cols (D)", d, in.y_neg[b].cols());
  }
  check_finite(in.x, "x");
  check_finite(in.y_pos, "y_pos");
  check_finite(in.y_neg, "y_neg");
}

/// Softmax along rows (over columns) and along columns (over rows).
template <class Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    out.row(r).array() -= out.row(r).maxCoeff();
    out.row(r) = out.row(r).array().exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

template <class Scalar>
Matrix<Scalar> softmax_cols(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out = logits;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    out.col(c).array() -= out.col(c).maxCoeff();
    out.col(c) = out.col(c).array().exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

/// Target logits [-d_pos/tau, -d_neg/tau] / scale, G x (N_pos + M_neg).
template <class Scalar>
Matrix<Scalar> target_logits(const Matrix<Scalar>& d_pos, const Matrix<Scalar>& d_neg, Scalar tau, Scalar scale) {
  Matrix<Scalar> logits(d_pos.rows(), d_pos.cols() + d_neg.cols());
  logits.leftCols(d_pos.cols()) = (-d_pos.array() / tau) / scale;
  logits.rightCols(d_neg.cols()) = (-d_neg.array() / tau) / scale;
  return logits;
}

}  // namespace detail

/// Euclidean distance between every row of x[b] and every row of y[b].
template <class Scalar>
PointSets<Scalar> pairwise_distances(const PointSets<Scalar>& x, const PointSets<Scalar>& y) {
  if (x.size() != y.size()) {
    throw ShapeError("pairwise_distances batch size", static_cast<long>(x.size()), static_cast<long>(y.size()));
  }
  PointSets<Scalar> out;
  out.reserve(x.size());
  for (std::size_t b = 0; b < x.size(); ++b) {
    if (x[b].cols() != y[b].cols()) {
      throw ShapeError("pairwise_distances point dim", x[b].cols(), y[b].cols());
    }
    if (!x[b].allFinite() || !y[b].allFinite()) {
      throw NonFiniteError("pairwise_distances: non-finite input in item " + std::to_string(b));
    }
    Matrix<Scalar> d(x[b].rows(), y[b].rows());
    for (Eigen::Index g = 0; g < x[b].rows(); ++g) {
      for (Eigen::Index n = 0; n < y[b].rows(); ++n) {
        d(g, n) = (x[b].row(g) - y[b].row(n)).norm();
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

/// Mean of all unmasked distances, clamped below at kMinScale.
template <class Scalar>
Scalar adaptive_scale(const PointSets<Scalar>& d_pos, const PointSets<Scalar>& d_neg) {
  Scalar sum = 0;
  long count = 0;
  auto accumulate = [&](const PointSets<Scalar>& sets) {
    for (const auto& d : sets) {
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d.data()[i] < Scalar(kMaskedDistance)) {
          sum += d.data()[i];
          ++count;
        }
      }
    }
  };
  accumulate(d_pos);
  accumulate(d_neg);
  if (count == 0) {
    return Scalar(kMinScale);
  }
  return std::max(sum / static_cast<Scalar>(count), Scalar(kMinScale));
}

/// Distances, self mask and scale: everything that is shared across temperatures.
template <class Scalar>
DriftDistances<Scalar> drift_distances(const DriftInputs<Scalar>& in, std::optional<Scalar> scale = std::nullopt) {
  detail::validate(in);
  DriftDistances<Scalar> out;
  out.d_pos = pairwise_distances(in.x, in.y_pos);
  out.d_neg = pairwise_distances(in.x, in.y_neg);
  out.masked = in.mask_self && in.x.front().rows() == in.y_neg.front().rows();
  if (out.masked) {
    for (auto& d : out.d_neg) {
      d.diagonal().array() += Scalar(kSelfMaskOffset);
    }
  }
  out.scale = scale ? *scale : adaptive_scale(out.d_pos, out.d_neg);
  return out;
}

/// W_pos and W_neg at one temperature.
template <class Scalar>
DriftWeights<Scalar> drift_weights(const DriftDistances<Scalar>& dist, Scalar tau) {
  DriftWeights<Scalar> out;
  out.w_pos.reserve(dist.d_pos.size());
  out.w_neg.reserve(dist.d_neg.size());
  for (std::size_t b = 0; b < dist.d_pos.size(); ++b) {
    const auto n_pos = dist.d_pos[b].cols();
    const auto m_neg = dist.d_neg[b].cols();
    const Matrix<Scalar> logits = detail::target_logits(dist.d_pos[b], dist.d_neg[b], tau, dist.scale);
    // A = sqrt(P) with P the product of both softmaxes. A_pos[g,n] * sum_m A_neg[g,m] is
    // evaluated as sum_m sqrt(P_pos[g,n] * P_neg[g,m]): the same quantity with one rounding
    // fewer, which keeps symmetric configurations exact. Both sums run in the same order so
    // that coincident positive and negative sets give bitwise-equal weights.
    const Matrix<Scalar> p = (detail::softmax_rows(logits).array() * detail::softmax_cols(logits).array()).matrix();
    Matrix<Scalar> w_pos = Matrix<Scalar>::Zero(p.rows(), n_pos);
    Matrix<Scalar> w_neg = Matrix<Scalar>::Zero(p.rows(), m_neg);
    for (Eigen::Index g = 0; g < p.rows(); ++g) {
      for (Eigen::Index n = 0; n < n_pos; ++n) {
        for (Eigen::Index m = 0; m < m_neg; ++m) {
          w_pos(g, n) += std::sqrt(p(g, n) * p(g, n_pos + m));
          w_neg(g, m) += std::sqrt(p(g, n_pos + m) * p(g, n));
        }
      }
    }
    out.w_pos.push_back(std::move(w_pos));
    out.w_neg.push_back(std::move(w_neg));
  }
  return out;
}

/// Drifting vector at each temperature, all sharing one scale.
template <class Scalar>
std::vector<PointSets<Scalar>> compute_v_per_temperature(const DriftInputs<Scalar>& in,
                                                         std::optional<Scalar> scale = std::nullopt) {
  const auto dist = drift_distances(in, scale);
  std::vector<PointSets<Scalar>> per_temp;
  per_temp.reserve(in.temps.size());
  for (const Scalar tau : in.temps) {
    const auto w = drift_weights(dist, tau);
    PointSets<Scalar> v;
    v.reserve(in.x.size());
    for (std::size_t b = 0; b < in.x.size(); ++b) {
      Matrix<Scalar> vb = w.w_pos[b] * in.y_pos[b];
      vb.noalias() -= w.w_neg[b] * in.y_neg[b];
      v.push_back(std::move(vb));
    }
    per_temp.push_back(std::move(v));
  }
  return per_temp;
}

/// Non-normalized sum of the per-temperature drifting vectors. Shape equals x.
///
/// `scale` overrides the adaptive distance scale; leave it empty outside tests.
template <class Scalar>
PointSets<Scalar> compute_v(const DriftInputs<Scalar>& in, std::optional<Scalar> scale = std::nullopt) {
  auto per_temp = compute_v_per_temperature(in, scale);
  PointSets<Scalar> total = std::move(per_temp.front());
  for (std::size_t t = 1; t < per_temp.size(); ++t) {
    for (std::size_t b = 0; b < total.size(); ++b) {
      total[b] += per_temp[t][b];
    }
  }
  return total;
}

/// RV(V) = |mean V|^2 / mean |V|^2 over the rows of `samples` (S x D).
template <class Scalar>
Scalar relative_variance(const Matrix<Scalar>& samples) {
  if (samples.rows() == 0) {
    throw Error("relative_variance: empty sample");
  }
  const Vector<Scalar> mean = samples.colwise().mean().transpose();
  const Scalar second = samples.rowwise().squaredNorm().mean();
  if (second == Scalar(0)) {
    return Scalar(0);
  }
  return mean.squaredNorm() / second;
}

/// Stacks every per-candidate vector of a batch into one S x D sample.
template <class Scalar>
Matrix<Scalar> stack_rows(const PointSets<Scalar>& sets) {
  Eigen::Index rows = 0;
  for (const auto& s : sets) rows += s.rows();
  const Eigen::Index cols = sets.empty() ? 0 : sets.front().cols();
  Matrix<Scalar> out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& s : sets) {
    out.middleRows(r, s.rows()) = s;
    r += s.rows();
  }
  return out;
}

template <class Scalar>
struct EssMetrics {
  Scalar ess_ratio = 1;
  Scalar max_p = 1;
};

/// Normalized effective sample size and peak probability of the per-candidate
/// softmax over unmasked targets, averaged over candidates and batch items.
template <class Scalar>
EssMetrics<Scalar> ess_metrics(const DriftDistances<Scalar>& dist, Scalar tau) {
  Scalar ess_sum = 0;
  Scalar max_sum = 0;
  long count = 0;
  for (std::size_t b = 0; b < dist.d_pos.size(); ++b) {
    const Matrix<Scalar> logits = detail::target_logits(dist.d_pos[b], dist.d_neg[b], tau, dist.scale);
    const auto n_pos = dist.d_pos[b].cols();
    for (Eigen::Index g = 0; g < logits.rows(); ++g) {
      std::vector<Scalar> kept;
      kept.reserve(static_cast<std::size_t>(logits.cols()));
      for (Eigen::Index k = 0; k < logits.cols(); ++k) {
        const bool self = dist.masked && k - n_pos == g;
        if (!self) kept.push_back(logits(g, k));
      }
      const Scalar top = *std::max_element(kept.begin(), kept.end());
      Scalar z = 0;
      for (auto& l : kept) {
        l = std::exp(l - top);
        z += l;
      }
      Scalar sq = 0;
      Scalar peak = 0;
      for (const auto l : kept) {
        const Scalar p = l / z;
        sq += p * p;
        peak = std::max(peak, p);
      }
      ess_sum += Scalar(1) / (static_cast<Scalar>(kept.size()) * sq);
      max_sum += peak;
      ++count;
    }
  }
  return {ess_sum / static_cast<Scalar>(count), max_sum / static_cast<Scalar>(count)};
}

template <class Scalar>
EssMetrics<Scalar> ess_metrics(const DriftInputs<Scalar>& in, Scalar tau) {
  return ess_metrics(drift_distances(in), tau);
}

template <class Scalar>
struct DriftDiagnostics {
  std::vector<Scalar> temps;
  std::vector<Scalar> ess_ratio;
  std::vector<Scalar> max_p;
  std::vector<Scalar> rv_per_temperature;
  Scalar rv_total = 0;
};

/// RV of the total and per-temperature fields plus ESS / Max_p per temperature.
/// Every candidate vector of the batch is one sample.
template <class Scalar>
DriftDiagnostics<Scalar> drift_diagnostics(const DriftInputs<Scalar>& in) {
  const auto dist = drift_distances(in);
  const auto per_temp = compute_v_per_temperature(in, std::optional<Scalar>(dist.scale));
  DriftDiagnostics<Scalar> out;
  out.temps = in.temps;
  Matrix<Scalar> total;
  for (std::size_t t = 0; t < in.temps.size(); ++t) {
    const auto ess = ess_metrics(dist, in.temps[t]);
    out.ess_ratio.push_back(ess.ess_ratio);
    out.max_p.push_back(ess.max_p);
    const Matrix<Scalar> samples = stack_rows(per_temp[t]);
    out.rv_per_temperature.push_back(relative_variance(samples));
    if (t == 0) {
      total = samples;
    } else {
      total += samples;
    }
  }
  out.rv_total = relative_variance(total);
  return out;
}

}  // namespace podpo

#endif  // PODPO_DRIFT_HPP
