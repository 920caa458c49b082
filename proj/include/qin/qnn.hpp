#pragma once

#include <span>
#include <vector>

#include "qin/linalg.hpp"
#include "qin/model.hpp"

namespace qin {

struct QnnOptions {
  QnnActivation activation = QnnActivation::prelu;
  bool residual = true;
  /// Apply the activation to the summed head transforms before the
  /// elementwise product instead of after it.
  bool mid_activation = false;
  double dropout_p = 0.0;

  static QnnOptions from(const HyperParams& hp);
};

struct QnnLayerTrace {
  std::vector<double> x;     // layer input X_l
  std::vector<double> z;     // sum_m W[m] X_l
  std::vector<double> h;     // activation input (H for post, z for mid)
  std::vector<double> keep;  // dropout multipliers on the branch
  std::vector<double> out;   // X_{l+1}
};

struct QnnTrace {
  std::vector<QnnLayerTrace> layers;
};

struct QnnGrads {
  std::vector<Tensor3> w;
  std::vector<double> prelu_slope;
  std::vector<double> x1;
};

std::vector<double> assemble_x1(std::span<const double> x_t, std::span<const double> o,
                                const HyperParams& hp);

/// One quadratic layer:
///   Z = sum_m W[m] X,  H = X * Z (elementwise),
///   X' = X + dropout(act(H))   (residual optional)
/// so H[i] = X[i] * sum_m sum_j W[m,i,j] X[j].
QnnLayerTrace qnn_layer_forward(const QnnLayerParams& layer, const QnnOptions& opts,
                                std::span<const double> x, Rng* dropout_rng = nullptr);

/// Evaluates the same layer by building every output's D x D quadratic-form
/// coefficient table and summing all D^2 monomials x_j x_k explicitly.
/// Post-activation placement only; dropout is never applied.
std::vector<double> brute_force_expansion(const QnnLayerParams& layer, const QnnOptions& opts,
                                          std::span<const double> x);

QnnTrace qnn_forward(std::span<const QnnLayerParams> layers, const QnnOptions& opts,
                     std::span<const double> x1, Rng* dropout_rng = nullptr);

/// Output of the last layer, or X_1 itself when there are no layers.
std::span<const double> qnn_output(const QnnTrace& trace, std::span<const double> x1);

QnnGrads qnn_backward(std::span<const QnnLayerParams> layers, const QnnOptions& opts,
                      const QnnTrace& trace, std::span<const double> upstream);

struct MlpTrace {
  std::vector<std::vector<double>> inputs;  // per layer
  std::vector<std::vector<double>> pre;     // per layer, before ReLU
  std::vector<double> out;
};

struct MlpGrads {
  std::vector<Matrix> w;
  std::vector<std::vector<double>> b;
  std::vector<double> x1;
};

/// Affine + ReLU stack.
MlpTrace mlp_forward(std::span<const MlpLayerParams> layers, std::span<const double> x);
MlpGrads mlp_backward(std::span<const MlpLayerParams> layers, const MlpTrace& trace,
                      std::span<const double> upstream);

}  // namespace qin
