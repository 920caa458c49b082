#include "qin/trainer.hpp"

#include <cmath>
#include <cstdio>

#include "qin/datagen.hpp"
#include "qin/metrics.hpp"
#include "qin/network.hpp"

namespace qin {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(emb_weight_decay >= 0.0)) throw ConfigError("emb_weight_decay must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
}

AdamState AdamState::for_params(const ModelParams& p) {
  return AdamState{zeros_like(p), zeros_like(p), 0};
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg) {
  auto pv = param_views(params);
  const auto gv = param_views(grads);
  auto mv = param_views(state.m);
  auto vv = param_views(state.v);
  if (gv.size() != pv.size() || mv.size() != pv.size() || vv.size() != pv.size()) {
    throw ShapeError("adam_step: parameter/gradient layouts differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);

  for (std::size_t k = 0; k < pv.size(); ++k) {
    auto& p = pv[k];
    if (gv[k].data.size() != p.data.size() || mv[k].data.size() != p.data.size()) {
      throw ShapeError("adam_step: shape mismatch on " + p.name);
    }
    const double decay = p.is_embedding ? cfg.emb_weight_decay : 0.0;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double g = gv[k].data[i] + decay * p.data[i];
      double& m = mv[k].data[i];
      double& v = vv[k].data[i];
      m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
      v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      p.data[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

Metrics evaluate(const ModelParams& p, const HyperParams& hp, const EmbeddingStore& store,
                 std::span<const Sample> data) {
  if (data.empty()) throw SingleClassError("cannot evaluate on an empty dataset");
  const auto logits = predict_logits(p, hp, store, data);
  std::vector<int> labels(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) labels[i] = data[i].label;
  return Metrics{auc(logits, labels), logloss_from_logits(logits, labels)};
}

std::string format_history_line(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "epoch=%zu loss=%.6f val_auc=%.6f val_logloss=%.6f", r.epoch,
                r.train_loss, r.val_auc, r.val_logloss);
  return buf;
}

ModelParams initial_params(const HyperParams& hp, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x696e6974ULL));
  return init_params(hp, rng);
}

TrainResult train(ModelParams init, const HyperParams& hp, const EmbeddingStore& store,
                  std::span<const Sample> train_data, std::span<const Sample> valid_data,
                  const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  hp.validate();
  TrainResult result;
  result.best = init;
  if (cfg.epochs == 0) return result;
  if (train_data.empty()) throw ConfigError("training split is empty");
  if (valid_data.empty()) throw SingleClassError("validation split is empty");
  {
    bool pos = false;
    bool neg = false;
    for (const auto& s : valid_data) (s.label == 1 ? pos : neg) = true;
    if (!pos || !neg) throw SingleClassError("validation split contains a single class");
  }

  ModelParams params = std::move(init);
  Gradients grads = zeros_like(params);
  AdamState adam = AdamState::for_params(params);
  Rng shuffle_rng(mix_seed(cfg.seed, 0x5348554646ULL));
  const std::uint64_t dropout_seed = mix_seed(cfg.seed, 0x44524f50ULL);
  double best_auc = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = make_batches(train_data, cfg.batch_size, hp.seq_len, shuffle_rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : batches) {
      set_zero(grads);
      const DropoutStream stream{dropout_seed, adam.step};
      ForwardOptions opts;
      opts.dropout = &stream;
      const auto r = forward_backward(params, hp, store, batch, &grads, opts);
      if (!std::isfinite(r.loss)) {
        throw NonFiniteError("non-finite training loss at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(adam.step));
      }
      loss_sum += r.loss * static_cast<double>(batch.size());
      seen += batch.size();
      adam_step(params, grads, adam, cfg);
    }

    const auto m = evaluate(params, hp, store, valid_data);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(seen), m.auc, m.logloss};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (m.auc > best_auc) {
      best_auc = m.auc;
      result.best = params;
      result.best_epoch = epoch;
      result.best_metrics = m;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace qin
