#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qin/embedding.hpp"
#include "qin/model.hpp"

namespace qin {

/// Training-mode dropout. Each sample draws its masks from
/// Rng(mix_seed(seed, step, index_in_batch)), so a step can be replayed.
struct DropoutStream {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

struct ForwardOptions {
  /// nullptr = evaluation mode (no dropout).
  const DropoutStream* dropout = nullptr;
  /// When set, receives every pre-activation that sits at a ReLU/PReLU
  /// kink (attention scores, QNN activation inputs, MLP pre-activations).
  std::vector<double>* kinks = nullptr;
};

struct BatchResult {
  double loss = 0.0;
  std::vector<double> logits;
};

/// Full pipeline: embedding lookup -> pooling -> interaction -> head -> BCE.
/// When `grads` is non-null the batch gradient is accumulated into it.
BatchResult forward_backward(const ModelParams& p, const HyperParams& hp,
                             const EmbeddingStore& store, const Batch& batch, Gradients* grads,
                             const ForwardOptions& opts = {});

/// Evaluation-mode logit for one sample.
double predict_logit(const ModelParams& p, const HyperParams& hp, const EmbeddingStore& store,
                     const Sample& sample);

std::vector<double> predict_logits(const ModelParams& p, const HyperParams& hp,
                                   const EmbeddingStore& store, std::span<const Sample> samples);

}  // namespace qin
