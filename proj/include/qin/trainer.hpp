#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qin/embedding.hpp"
#include "qin/model.hpp"

namespace qin {

struct TrainConfig {
  double lr = 2e-3;
  double emb_weight_decay = 2e-4;
  std::size_t batch_size = 256;
  std::size_t epochs = 10;
  std::size_t patience = 2;
  std::uint64_t seed = 7;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::uint64_t step = 0;

  static AdamState for_params(const ModelParams& p);
};

/// One Adam update with bias correction. Coupled L2 decay
/// (g += decay * theta) is applied to embedding tables only.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg);

struct Metrics {
  double auc = 0.0;
  double logloss = 0.0;
};

/// Full pass in evaluation mode (no dropout).
Metrics evaluate(const ModelParams& p, const HyperParams& hp, const EmbeddingStore& store,
                 std::span<const Sample> data);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_auc = 0.0;
  double val_logloss = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// `epoch=<k> loss=<f> val_auc=<f> val_logloss=<f>`
std::string format_history_line(const EpochRecord& r);

struct TrainResult {
  ModelParams best;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  Metrics best_metrics;
};

/// init_params on the run seed's dedicated initialization stream.
ModelParams initial_params(const HyperParams& hp, std::uint64_t seed);

/// Seeded-shuffle mini-batch training with early stopping on valid AUC.
/// `on_epoch`, when given, is called after each epoch's evaluation.
TrainResult train(ModelParams init, const HyperParams& hp, const EmbeddingStore& store,
                  std::span<const Sample> train_data, std::span<const Sample> valid_data,
                  const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace qin
