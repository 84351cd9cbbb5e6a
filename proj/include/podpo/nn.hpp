#ifndef PODPO_NN_HPP
#define PODPO_NN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "podpo/errors.hpp"
#include "podpo/rng.hpp"

/**
 * \file
 * \brief Dense feed-forward network with hand-written backward pass and Adam.
 *
 * Batches are stored one sample per row. Hidden layers use tanh, the output
 * layer is linear. Everything is templated on the scalar type; the rest of the
 * library instantiates it with double.
 */

namespace podpo {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// One affine layer: y = W x + b, with W shaped out x in.
template <class Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;
  Vector<Scalar> bias;
};

/// Ordered stack of dense layers. tanh between layers, linear output.
template <class Scalar>
struct MlpParams {
  std::vector<DenseLayer<Scalar>> layers;

  [[nodiscard]] Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
  [[nodiscard]] Eigen::Index output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }

  [[nodiscard]] Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& layer : layers) {
      n += layer.weight.size() + layer.bias.size();
    }
    return n;
  }

  [[nodiscard]] bool all_finite() const {
    for (const auto& layer : layers) {
      if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
        return false;
      }
    }
    return true;
  }

  /// Throws ShapeError if consecutive layers do not compose.
  void validate() const {
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto& layer = layers[k];
      if (layer.bias.size() != layer.weight.rows()) {
        throw ShapeError("layer " + std::to_string(k) + " bias length", layer.weight.rows(), layer.bias.size());
      }
      if (k + 1 < layers.size() && layers[k + 1].weight.cols() != layer.weight.rows()) {
        throw ShapeError(
            "layer " + std::to_string(k + 1) + " input dim", layer.weight.rows(), layers[k + 1].weight.cols());
      }
    }
  }

  bool operator==(const MlpParams& other) const {
    if (layers.size() != other.layers.size()) {
      return false;
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto& a = layers[k];
      const auto& b = other.layers[k];
      if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() || a.bias.size() != b.bias.size()) {
        return false;
      }
      if (a.weight != b.weight || a.bias != b.bias) {
        return false;
      }
    }
    return true;
  }
};

using MlpParamsd = MlpParams<double>;

/// Same shapes as `params`, all zeros.
template <class Scalar>
MlpParams<Scalar> zeros_like(const MlpParams<Scalar>& params) {
  MlpParams<Scalar> out;
  out.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) {
    out.layers.push_back({Matrix<Scalar>::Zero(layer.weight.rows(), layer.weight.cols()),
                          Vector<Scalar>::Zero(layer.bias.size())});
  }
  return out;
}

/// Builds a network for the given layer widths (input, hidden..., output).
///
/// Weights are uniform in +-sqrt(6 / (fan_in + fan_out)), biases are zero.
template <class Scalar = double>
MlpParams<Scalar> init_mlp(std::span<const Eigen::Index> widths, RngStream& rng) {
  if (widths.size() < 2) {
    throw ShapeError("mlp widths", 2, static_cast<long>(widths.size()));
  }
  MlpParams<Scalar> params;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const Eigen::Index in = widths[k];
    const Eigen::Index out = widths[k + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer<Scalar> layer{Matrix<Scalar>(out, in), Vector<Scalar>::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) {
        layer.weight(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
      }
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

template <class Scalar = double>
MlpParams<Scalar> init_mlp(std::initializer_list<Eigen::Index> widths, RngStream& rng) {
  const std::vector<Eigen::Index> w(widths);
  return init_mlp<Scalar>(std::span<const Eigen::Index>(w), rng);
}

namespace detail {

/// tanh through exp, which Eigen vectorizes for double (tanh is scalar libm).
template <class Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return Scalar(1) - Scalar(2) / ((Scalar(2) * x).exp() + Scalar(1));
}

template <class Scalar>
void check_input(const MlpParams<Scalar>& params, const Matrix<Scalar>& input) {
  if (params.layers.empty()) {
    throw ShapeError("mlp layer count", 1, 0);
  }
  if (input.cols() != params.input_dim()) {
    throw ShapeError("mlp input width", params.input_dim(), input.cols());
  }
  if (!input.allFinite()) {
    throw NonFiniteError("mlp input contains non-finite values");
  }
}

/// Post-activation outputs of every layer; entry 0 is the input itself.
template <class Scalar>
std::vector<Matrix<Scalar>> forward_trace(const MlpParams<Scalar>& params, const Matrix<Scalar>& input) {
  std::vector<Matrix<Scalar>> trace;
  trace.reserve(params.layers.size() + 1);
  trace.push_back(input);
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& layer = params.layers[k];
    Matrix<Scalar> z = trace.back() * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (k + 1 < params.layers.size()) {
      z = fast_tanh(z.array()).matrix();
    }
    trace.push_back(std::move(z));
  }
  return trace;
}

}  // namespace detail

/// Batched forward pass; row i of the result depends only on row i of `input`.
template <class Scalar>
Matrix<Scalar> mlp_forward(const MlpParams<Scalar>& params, const Matrix<Scalar>& input) {
  detail::check_input(params, input);
  Matrix<Scalar> h = input;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& layer = params.layers[k];
    Matrix<Scalar> z = h * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (k + 1 < params.layers.size()) {
      h = detail::fast_tanh(z.array()).matrix();
    } else {
      h = std::move(z);
    }
  }
  return h;
}

template <class Scalar>
struct MlpBackward {
  MlpParams<Scalar> param_grads;
  Matrix<Scalar> input_grad;
};

/// Exact gradients of sum(forward(input) .* output_grad) with respect to the
/// parameters and the input.
template <class Scalar>
MlpBackward<Scalar> mlp_backward(const MlpParams<Scalar>& params,
                                 const Matrix<Scalar>& input,
                                 const Matrix<Scalar>& output_grad) {
  detail::check_input(params, input);
  if (output_grad.rows() != input.rows()) {
    throw ShapeError("mlp output_grad rows", input.rows(), output_grad.rows());
  }
  if (output_grad.cols() != params.output_dim()) {
    throw ShapeError("mlp output_grad cols", params.output_dim(), output_grad.cols());
  }
  const auto trace = detail::forward_trace(params, input);

  MlpBackward<Scalar> result{zeros_like(params), Matrix<Scalar>()};
  Matrix<Scalar> delta = output_grad;
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const auto& layer = params.layers[k];
    const auto& below = trace[k];
    result.param_grads.layers[k].weight.noalias() = delta.transpose() * below;
    result.param_grads.layers[k].bias = delta.colwise().sum().transpose();
    Matrix<Scalar> next = delta * layer.weight;
    if (k > 0) {
      // `below` is tanh output of the previous layer.
      next.array() *= (Scalar(1) - below.array().square());
    }
    delta = std::move(next);
  }
  result.input_grad = std::move(delta);
  return result;
}

template <class Scalar>
struct AdamConfig {
  Scalar lr = Scalar(3e-4);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
};

/// Adam moments shaped like the parameters they optimize.
template <class Scalar>
struct AdamState {
  MlpParams<Scalar> first_moment;
  MlpParams<Scalar> second_moment;
  long step = 0;
  AdamConfig<Scalar> config;
};

template <class Scalar>
AdamState<Scalar> make_adam_state(const MlpParams<Scalar>& params, AdamConfig<Scalar> config = {}) {
  return {zeros_like(params), zeros_like(params), 0, config};
}

namespace detail {

/// In-place Adam update for one array; `step` is the already-incremented count.
template <class P, class G, class M, class V, class Scalar>
void adam_apply(Eigen::MatrixBase<P>& param,
                const Eigen::MatrixBase<G>& grad,
                Eigen::MatrixBase<M>& m,
                Eigen::MatrixBase<V>& v,
                long step,
                const AdamConfig<Scalar>& cfg) {
  m.array() = cfg.beta1 * m.array() + (Scalar(1) - cfg.beta1) * grad.array();
  v.array() = cfg.beta2 * v.array() + (Scalar(1) - cfg.beta2) * grad.array().square();
  const Scalar bc1 = Scalar(1) - std::pow(cfg.beta1, static_cast<Scalar>(step));
  const Scalar bc2 = Scalar(1) - std::pow(cfg.beta2, static_cast<Scalar>(step));
  param.array() -= cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
}

}  // namespace detail

/// One Adam update with bias correction. No gradient clipping of any kind:
/// non-finite gradients are rejected before anything is modified.
template <class Scalar>
void adam_step(MlpParams<Scalar>& params, const MlpParams<Scalar>& grads, AdamState<Scalar>& state) {
  if (!(state.config.lr > Scalar(0))) {
    throw ConfigError("lr", "must be > 0");
  }
  if (grads.layers.size() != params.layers.size()) {
    throw ShapeError("adam gradient layer count", static_cast<long>(params.layers.size()),
                     static_cast<long>(grads.layers.size()));
  }
  if (state.first_moment.layers.size() != params.layers.size()) {
    throw ShapeError("adam moment layer count", static_cast<long>(params.layers.size()),
                     static_cast<long>(state.first_moment.layers.size()));
  }
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    if (grads.layers[k].weight.size() != params.layers[k].weight.size()) {
      throw ShapeError("adam gradient layer " + std::to_string(k) + " weight size", params.layers[k].weight.size(),
                       grads.layers[k].weight.size());
    }
    if (grads.layers[k].bias.size() != params.layers[k].bias.size()) {
      throw ShapeError("adam gradient layer " + std::to_string(k) + " bias size", params.layers[k].bias.size(),
                       grads.layers[k].bias.size());
    }
    if (!grads.layers[k].weight.allFinite()) {
      throw NonFiniteError("non-finite gradient in layer " + std::to_string(k) + " weight");
    }
    if (!grads.layers[k].bias.allFinite()) {
      throw NonFiniteError("non-finite gradient in layer " + std::to_string(k) + " bias");
    }
  }
  ++state.step;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    detail::adam_apply(params.layers[k].weight, grads.layers[k].weight, state.first_moment.layers[k].weight,
                       state.second_moment.layers[k].weight, state.step, state.config);
    detail::adam_apply(params.layers[k].bias, grads.layers[k].bias, state.first_moment.layers[k].bias,
                       state.second_moment.layers[k].bias, state.step, state.config);
  }
}

/// Visits every parameter array (W0, b0, W1, b1, ...) as a mutable matrix view.
template <class Scalar, class F>
void for_each_array(MlpParams<Scalar>& params, F&& f) {
  for (auto& layer : params.layers) {
    f(layer.weight);
    Eigen::Map<Matrix<Scalar>> bias(layer.bias.data(), layer.bias.size(), 1);
    f(bias);
  }
}

/// Central-difference gradient of a scalar function of the parameters.
/// Used only as a test oracle.
template <class Scalar, class F>
MlpParams<Scalar> finite_diff_gradient(F&& f, const MlpParams<Scalar>& params, Scalar eps) {
  MlpParams<Scalar> work = params;
  MlpParams<Scalar> grad = zeros_like(params);
  for (std::size_t k = 0; k < work.layers.size(); ++k) {
    auto probe = [&](auto& array, auto& out) {
      for (Eigen::Index i = 0; i < array.size(); ++i) {
        const Scalar saved = array.data()[i];
        array.data()[i] = saved + eps;
        const Scalar plus = f(std::as_const(work));
        array.data()[i] = saved - eps;
        const Scalar minus = f(std::as_const(work));
        array.data()[i] = saved;
        out.data()[i] = (plus - minus) / (Scalar(2) * eps);
      }
    };
    probe(work.layers[k].weight, grad.layers[k].weight);
    probe(work.layers[k].bias, grad.layers[k].bias);
  }
  return grad;
}

/// Largest |a - b| / max(|a|, |b|, floor) over all parameters.
template <class Scalar>
Scalar max_relative_error(const MlpParams<Scalar>& a, const MlpParams<Scalar>& b, Scalar floor = Scalar(1e-6)) {
  Scalar worst = 0;
  auto visit = [&](const auto& x, const auto& y) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const Scalar denom = std::max({std::abs(x.data()[i]), std::abs(y.data()[i]), floor});
      worst = std::max(worst, std::abs(x.data()[i] - y.data()[i]) / denom);
    }
  };
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    visit(a.layers[k].weight, b.layers[k].weight);
    visit(a.layers[k].bias, b.layers[k].bias);
  }
  return worst;
}

}  // namespace podpo

#endif  // PODPO_NN_HPP
