#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qin/embedding.hpp"
#include "qin/model.hpp"

namespace qin {

/// Objective under test. When `kinks` is non-null the function appends the
/// pre-activations that sit at non-differentiable points (ReLU/PReLU inputs).
using ProbedFn = std::function<double(std::span<const double> x, std::vector<double>* kinks)>;

struct ClassReport {
  std::string name;
  double max_rel_err = 0.0;
  std::string worst_tensor;  // tensor holding the worst coordinate
  std::size_t argmax = 0;    // flattened coordinate within worst_tensor
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates dropped by the kink guard

  double skipped_fraction() const;
};

struct GradReport {
  std::vector<ClassReport> classes;
  double step = 1e-5;
  std::uint64_t seed = 0;

  double worst() const;
  bool passed(double tol) const { return worst() < tol; }
  const ClassReport* find(const std::string& name) const;
};

inline constexpr double kDefaultStep = 1e-5;
inline constexpr double kKinkGuard = 1e-6;

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every
/// coordinate. A coordinate is skipped when, at x - h or x + h, some probed
/// pre-activation is within 1e-6 of zero or changes sign between the two.
/// Throws NonFiniteError when f is not finite at a probe point.
ClassReport check(const std::string& name, const ProbedFn& f, std::span<const double> analytic,
                  std::span<const double> point, double step = kDefaultStep);

/// Gradient class a tensor belongs to: w_q, w_k, w_v, embeddings, qnn.w,
/// qnn.prelu_slope, mlp, head.
std::string grad_class(const std::string& tensor_name);

/// Certifies the full model on one batch: analytic gradients from
/// forward_backward against central differences of the mean batch loss,
/// with training-mode dropout replayed identically for every evaluation.
/// `sabotage` names a class whose analytic gradient is negated (harness
/// self-test); empty for none.
GradReport check_model(const ModelParams& params, const HyperParams& hp,
                       const EmbeddingStore& store, const Batch& batch, std::uint64_t seed,
                       double step = kDefaultStep, const std::string& sabotage = {});

struct GradInstance {
  HyperParams hp;
  EmbeddingStore store;
  ModelParams params;
  Batch batch;
};

/// Random desk-scale instance (d = 16, S = 8, L = M = 2 unless overridden
/// through `base`) with a handful of samples and a small vocabulary.
GradInstance random_instance(std::uint64_t seed, HyperParams base);
HyperParams gradcheck_hyperparams();

/// Runs check_model over `seeds` independent instances and keeps the worst
/// error per class.
GradReport check_seeds(const HyperParams& base, std::uint64_t first_seed, std::size_t seeds,
                       double step = kDefaultStep, const std::string& sabotage = {});

}  // namespace qin
