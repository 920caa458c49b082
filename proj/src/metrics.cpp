#include "qin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qin/errors.hpp"
#include "qin/linalg.hpp"

namespace qin {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* who) {
  if (a != b) {
    throw ShapeError(std::string(who) + ": " + std::to_string(a) + " scores vs " +
                     std::to_string(b) + " labels");
  }
}

struct ClassCounts {
  double pos = 0;
  double neg = 0;
};

ClassCounts count_classes(std::span<const int> labels) {
  ClassCounts c;
  for (int y : labels) (y == 1 ? c.pos : c.neg) += 1;
  if (c.pos == 0 || c.neg == 0) throw SingleClassError("AUC undefined: only one class present");
  return c;
}

}  // namespace

HeadOutput head_forward(std::span<const double> head_w, double head_b, std::span<const double> x) {
  if (head_w.size() != x.size()) {
    throw ShapeError("head: weight length " + std::to_string(head_w.size()) + " vs input " +
                     std::to_string(x.size()));
  }
  HeadOutput out;
  out.logit = dot(head_w, x) + head_b;
  out.prob = sigmoid(out.logit);
  return out;
}

double bce_loss(std::span<const double> probs, std::span<const int> labels) {
  check_lengths(probs.size(), labels.size(), "bce_loss");
  if (probs.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    total += labels[i] == 1 ? std::log(p) : std::log1p(-p);
  }
  return -total / static_cast<double>(probs.size());
}

std::vector<double> bce_backward(std::span<const double> logits, std::span<const int> labels) {
  check_lengths(logits.size(), labels.size(), "bce_backward");
  std::vector<double> g(logits.size());
  const double n = static_cast<double>(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) g[i] = (sigmoid(logits[i]) - labels[i]) / n;
  return g;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "auc");
  const auto counts = count_classes(labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of (1-based) average ranks over positives; every value is a
  // multiple of 1/2 and stays exact in a double.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum += avg_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum - counts.pos * (counts.pos + 1) / 2.0;
  return u / (counts.pos * counts.neg);
}

double auc_bruteforce(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "auc_bruteforce");
  const auto counts = count_classes(labels);
  double wins = 0.0;
  double ties = 0.0;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (labels[a] != 1) continue;
    for (std::size_t b = 0; b < scores.size(); ++b) {
      if (labels[b] == 1) continue;
      if (scores[a] > scores[b]) {
        wins += 1;
      } else if (scores[a] == scores[b]) {
        ties += 1;
      }
    }
  }
  return (wins + 0.5 * ties) / (counts.pos * counts.neg);
}

double logloss_from_logits(std::span<const double> logits, std::span<const int> labels) {
  std::vector<double> probs(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) probs[i] = sigmoid(logits[i]);
  return bce_loss(probs, labels);
}

}  // namespace qin
