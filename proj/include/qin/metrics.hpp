#pragma once

#include <span>
#include <vector>

namespace qin {

struct HeadOutput {
  double logit = 0.0;
  double prob = 0.5;
};

/// logit = w . x + b, prob = sigmoid(logit).
HeadOutput head_forward(std::span<const double> head_w, double head_b, std::span<const double> x);

inline constexpr double kProbClamp = 1e-12;

/// Mean binary cross-entropy; probabilities are clamped to [1e-12, 1 - 1e-12].
double bce_loss(std::span<const double> probs, std::span<const int> labels);

/// dL/dlogit_i = (sigmoid(logit_i) - y_i) / N, computed from the logits
/// directly, so it ignores the clamp used by bce_loss.
std::vector<double> bce_backward(std::span<const double> logits, std::span<const int> labels);

/// Rank-sum (Mann-Whitney) AUC with average ranks for ties, O(N log N).
/// Throws SingleClassError when either class is absent.
double auc(std::span<const double> scores, std::span<const int> labels);

/// O(N^2) pairwise definition: P(s+ > s-) + P(s+ == s-) / 2.
double auc_bruteforce(std::span<const double> scores, std::span<const int> labels);

/// bce_loss over sigmoid(logits).
double logloss_from_logits(std::span<const double> logits, std::span<const int> labels);

}  // namespace qin
