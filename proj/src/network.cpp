#include "qin/network.hpp"

#include <optional>

#include "qin/asta.hpp"
#include "qin/metrics.hpp"
#include "qin/qnn.hpp"

namespace qin {

namespace {

struct SampleForward {
  std::vector<double> x_t;
  Matrix x_b;
  std::optional<AttentionTrace> attn;
  std::optional<MeanPoolTrace> pool;
  std::vector<double> x1;
  QnnTrace qnn;
  MlpTrace mlp;
  double logit = 0.0;

  std::span<const double> head_input(const HyperParams& hp) const {
    if (hp.interaction == Interaction::mlp) return mlp.out;
    return qnn_output(qnn, x1);
  }
};

SampleForward run_sample(const ModelParams& p, const HyperParams& hp, const EmbeddingStore& store,
                         const Sample& s, std::span<const std::uint8_t> mask, Rng* rng,
                         std::vector<double>* kinks) {
  SampleForward f;
  f.x_t = lookup_target(store, p.id_embedding, s.target_id);
  f.x_b = lookup_sequence(store, p.id_embedding, s.seq_ids, hp.seq_len);

  std::span<const double> o;
  if (hp.pooling == Pooling::asta) {
    f.attn = asta_forward(p, AttentionConfig::from(hp), f.x_t, f.x_b, mask, rng);
    o = f.attn->o;
    if (kinks && hp.attn_kind == AttnKind::relu) {
      for (std::size_t j = 0; j < mask.size(); ++j) {
        if (mask[j]) kinks->push_back(f.attn->scores[j]);
      }
    }
  } else {
    f.pool = mean_pool_forward(p.w_v, f.x_t, f.x_b, mask);
    o = f.pool->o;
  }

  f.x1 = assemble_x1(f.x_t, o, hp);
  if (hp.interaction == Interaction::qnn) {
    f.qnn = qnn_forward(p.qnn, QnnOptions::from(hp), f.x1, rng);
    if (kinks && hp.qnn_activation != QnnActivation::identity) {
      for (const auto& layer : f.qnn.layers) kinks->insert(kinks->end(), layer.h.begin(), layer.h.end());
    }
  } else {
    f.mlp = mlp_forward(p.mlp, f.x1);
    if (kinks) {
      for (const auto& pre : f.mlp.pre) kinks->insert(kinks->end(), pre.begin(), pre.end());
    }
  }
  f.logit = head_forward(p.head_w, p.head_b, f.head_input(hp)).logit;
  return f;
}

void accumulate(Matrix& into, const Matrix& g) {
  auto dst = into.flat();
  auto src = g.flat();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void backward_sample(const ModelParams& p, const HyperParams& hp, const EmbeddingStore& store,
                     const Sample& s, const SampleForward& f, double d_logit, Gradients& g) {
  const auto x_l = f.head_input(hp);
  for (std::size_t i = 0; i < x_l.size(); ++i) g.head_w[i] += d_logit * x_l[i];
  g.head_b += d_logit;
  std::vector<double> d_xl(p.head_w.size());
  for (std::size_t i = 0; i < d_xl.size(); ++i) d_xl[i] = d_logit * p.head_w[i];

  std::vector<double> d_x1;
  if (hp.interaction == Interaction::qnn) {
    auto qg = qnn_backward(p.qnn, QnnOptions::from(hp), f.qnn, d_xl);
    for (std::size_t l = 0; l < qg.w.size(); ++l) {
      auto dst = g.qnn[l].w.flat();
      auto src = qg.w[l].flat();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      g.qnn[l].prelu_slope += qg.prelu_slope[l];
    }
    d_x1 = std::move(qg.x1);
  } else {
    auto mg = mlp_backward(p.mlp, f.mlp, d_xl);
    for (std::size_t l = 0; l < mg.w.size(); ++l) {
      accumulate(g.mlp[l].w, mg.w[l]);
      for (std::size_t i = 0; i < mg.b[l].size(); ++i) g.mlp[l].b[i] += mg.b[l][i];
    }
    d_x1 = std::move(mg.x1);
  }

  const std::span<const double> d_xt_direct(d_x1.data(), hp.d_t);
  const std::span<const double> d_o(d_x1.data() + hp.d_t, hp.d_a);
  AttentionGrads ag;
  if (f.attn) {
    ag = asta_backward(p, AttentionConfig::from(hp), *f.attn, d_o);
    accumulate(g.w_q, ag.w_q);
    accumulate(g.w_k, ag.w_k);
  } else {
    ag = mean_pool_backward(p.w_v, *f.pool, hp.seq_len, d_o);
  }
  accumulate(g.w_v, ag.w_v);

  std::vector<double> d_xt(d_xt_direct.begin(), d_xt_direct.end());
  for (std::size_t i = 0; i < d_xt.size(); ++i) d_xt[i] += ag.x_t[i];
  embedding_grad_accumulate(g.id_embedding, store, s.target_id, d_xt);
  embedding_grad_accumulate(g.id_embedding, store, s.seq_ids, ag.x_b);
}

}  // namespace

BatchResult forward_backward(const ModelParams& p, const HyperParams& hp,
                             const EmbeddingStore& store, const Batch& batch, Gradients* grads,
                             const ForwardOptions& opts) {
  if (batch.seq_len != hp.seq_len) throw ShapeError("batch padded to a different S than configured");
  check_embedding_dims(store, p.id_embedding, hp);
  const std::size_t n = batch.size();
  BatchResult result;
  result.logits.resize(n);
  std::vector<int> labels(n);
  std::vector<SampleForward> fwd;
  if (grads) fwd.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    std::optional<Rng> rng;
    if (opts.dropout) rng.emplace(mix_seed(opts.dropout->seed, opts.dropout->step, i));
    auto f = run_sample(p, hp, store, batch.samples[i], batch.mask_row(i), rng ? &*rng : nullptr,
                        opts.kinks);
    result.logits[i] = f.logit;
    labels[i] = batch.samples[i].label;
    if (grads) fwd.push_back(std::move(f));
  }
  result.loss = logloss_from_logits(result.logits, labels);
  if (!grads) return result;

  const auto d_logits = bce_backward(result.logits, labels);
  for (std::size_t i = 0; i < n; ++i) {
    backward_sample(p, hp, store, batch.samples[i], fwd[i], d_logits[i], *grads);
  }
  return result;
}

double predict_logit(const ModelParams& p, const HyperParams& hp, const EmbeddingStore& store,
                     const Sample& sample) {
  if (sample.seq_len() > hp.seq_len) throw ShapeError("history longer than S");
  std::vector<std::uint8_t> mask(hp.seq_len, 0);
  std::fill_n(mask.begin(), sample.seq_len(), 1);
  return run_sample(p, hp, store, sample, mask, nullptr, nullptr).logit;
}

std::vector<double> predict_logits(const ModelParams& p, const HyperParams& hp,
                                   const EmbeddingStore& store, std::span<const Sample> samples) {
  check_embedding_dims(store, p.id_embedding, hp);
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = predict_logit(p, hp, store, samples[i]);
  return out;
}

}  // namespace qin
