#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qin/linalg.hpp"
#include "qin/model.hpp"

namespace qin {

struct AttentionConfig {
  AttnKind kind = AttnKind::relu;
  std::size_t d_a = 0;
  std::size_t d_t = 0;
  std::size_t d_b = 0;
  std::size_t seq_len = 0;
  bool dropout = false;
  double dropout_p = 0.0;

  double scale() const;
  static AttentionConfig from(const HyperParams& hp);
};

/// Everything the backward pass needs from one sample's forward pass.
struct AttentionTrace {
  std::vector<double> x_t;
  Matrix x_b;                       // S x d_b
  std::vector<std::uint8_t> mask;   // S
  std::vector<double> q;            // d_a
  Matrix k;                         // S x d_a, masked rows zero
  Matrix v;                         // S x d_a, masked rows zero
  std::vector<double> scores;       // S, scaled QK^T
  std::vector<double> weights;      // S, transformed, masked = 0
  std::vector<double> keep;         // S, dropout multipliers (0 or 1/(1-p)); 1 when off
  std::vector<double> o;            // d_a
};

struct AttentionGrads {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
  std::vector<double> x_t;
  Matrix x_b;
};

/// Sparse target attention for one sample:
///   o = transform(Q K^T / sqrt(d_a)) V + x_t
/// Masked positions never contribute. `dropout_rng` enables training-mode
/// dropout on the transformed weights; pass nullptr for evaluation.
AttentionTrace asta_forward(const ModelParams& p, const AttentionConfig& cfg,
                            std::span<const double> x_t, const Matrix& x_b,
                            std::span<const std::uint8_t> mask, Rng* dropout_rng = nullptr);

AttentionGrads asta_backward(const ModelParams& p, const AttentionConfig& cfg,
                             const AttentionTrace& trace, std::span<const double> d_o);

struct MeanPoolTrace {
  std::vector<double> mean;  // d_b, zero when the history is empty
  std::vector<std::uint8_t> mask;
  std::size_t count = 0;
  std::vector<double> o;
};

/// o = W_v * mean(unmasked x_b rows) + x_t; o = x_t for an empty history.
MeanPoolTrace mean_pool_forward(const Matrix& w_v, std::span<const double> x_t, const Matrix& x_b,
                                std::span<const std::uint8_t> mask);

/// Fills w_v, x_t and x_b of the result; w_q and w_k stay empty.
AttentionGrads mean_pool_backward(const Matrix& w_v, const MeanPoolTrace& trace,
                                  std::size_t seq_len, std::span<const double> d_o);

}  // namespace qin
