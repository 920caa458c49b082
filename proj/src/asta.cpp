#include "qin/asta.hpp"

#include <cmath>
#include <limits>

namespace qin {

double AttentionConfig::scale() const { return 1.0 / std::sqrt(static_cast<double>(d_a)); }

AttentionConfig AttentionConfig::from(const HyperParams& hp) {
  return AttentionConfig{hp.attn_kind, hp.d_a,          hp.d_t,          hp.d_b,
                         hp.seq_len,   hp.attn_dropout, hp.attn_dropout_p};
}

namespace {

void check_shapes(const ModelParams& p, const AttentionConfig& cfg, std::size_t xt_len,
                  const Matrix& x_b, std::size_t mask_len) {
  if (xt_len != cfg.d_t) throw ShapeError("asta: x_t has length " + std::to_string(xt_len));
  if (cfg.d_a != cfg.d_t) throw ShapeError("asta: residual requires d_a == d_t");
  if (x_b.rows() != cfg.seq_len || x_b.cols() != cfg.d_b) {
    throw ShapeError("asta: x_b has shape " + x_b.shape_str());
  }
  if (mask_len != cfg.seq_len) throw ShapeError("asta: mask length mismatch");
  if (p.w_q.rows() != cfg.d_a || p.w_q.cols() != cfg.d_t || p.w_k.rows() != cfg.d_a ||
      p.w_k.cols() != cfg.d_b || p.w_v.rows() != cfg.d_a || p.w_v.cols() != cfg.d_b) {
    throw ShapeError("asta: projection shapes do not match configuration");
  }
}

Unary transform_of(AttnKind kind) {
  switch (kind) {
    case AttnKind::relu2: return Unary::relu2;
    case AttnKind::silu: return Unary::silu;
    default: return Unary::relu;
  }
}

}  // namespace

AttentionTrace asta_forward(const ModelParams& p, const AttentionConfig& cfg,
                            std::span<const double> x_t, const Matrix& x_b,
                            std::span<const std::uint8_t> mask, Rng* dropout_rng) {
  check_shapes(p, cfg, x_t.size(), x_b, mask.size());
  const std::size_t S = cfg.seq_len;
  AttentionTrace tr;
  tr.x_t.assign(x_t.begin(), x_t.end());
  tr.x_b = x_b;
  tr.mask.assign(mask.begin(), mask.end());
  tr.q = matvec(p.w_q, x_t);
  tr.k = Matrix(S, cfg.d_a);
  tr.v = Matrix(S, cfg.d_a);
  tr.scores.assign(S, 0.0);
  tr.weights.assign(S, 0.0);
  tr.keep.assign(S, 1.0);

  const double scale = cfg.scale();
  for (std::size_t s = 0; s < S; ++s) {
    if (!mask[s]) continue;
    const auto k = matvec(p.w_k, x_b.row(s));
    const auto v = matvec(p.w_v, x_b.row(s));
    std::copy(k.begin(), k.end(), tr.k.row(s).begin());
    std::copy(v.begin(), v.end(), tr.v.row(s).begin());
    tr.scores[s] = dot(tr.q, k) * scale;
  }

  if (cfg.kind == AttnKind::softmax) {
    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < S; ++s) {
      if (mask[s]) max_score = std::max(max_score, tr.scores[s]);
    }
    double denom = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      if (!mask[s]) continue;
      tr.weights[s] = std::exp(tr.scores[s] - max_score);
      denom += tr.weights[s];
    }
    // Fully masked history: every weight stays zero.
    if (denom > 0.0) {
      for (auto& w : tr.weights) w /= denom;
    }
  } else {
    const Unary f = transform_of(cfg.kind);
    for (std::size_t s = 0; s < S; ++s) {
      if (mask[s]) tr.weights[s] = apply_unary(f, tr.scores[s]);
    }
  }

  if (cfg.dropout && dropout_rng != nullptr && cfg.dropout_p > 0.0) {
    const double inv_keep = 1.0 / (1.0 - cfg.dropout_p);
    for (std::size_t s = 0; s < S; ++s) {
      tr.keep[s] = dropout_rng->uniform() < cfg.dropout_p ? 0.0 : inv_keep;
    }
  }

  tr.o.assign(x_t.begin(), x_t.end());
  for (std::size_t s = 0; s < S; ++s) {
    const double w = tr.weights[s] * tr.keep[s];
    if (!mask[s] || w == 0.0) continue;
    const auto v = tr.v.row(s);
    for (std::size_t a = 0; a < cfg.d_a; ++a) tr.o[a] += w * v[a];
  }
  return tr;
}

AttentionGrads asta_backward(const ModelParams& p, const AttentionConfig& cfg,
                             const AttentionTrace& tr, std::span<const double> d_o) {
  const std::size_t S = cfg.seq_len;
  if (d_o.size() != cfg.d_a || tr.o.size() != cfg.d_a || tr.mask.size() != S ||
      tr.weights.size() != S || tr.x_b.rows() != S) {
    throw ShapeError("asta_backward: trace does not match configuration");
  }
  AttentionGrads g{Matrix(cfg.d_a, cfg.d_t), Matrix(cfg.d_a, cfg.d_b), Matrix(cfg.d_a, cfg.d_b),
                   std::vector<double>(d_o.begin(), d_o.end()), Matrix(S, cfg.d_b)};

  // Gradient w.r.t. the post-transform (pre-dropout) weights.
  std::vector<double> d_weight(S, 0.0);
  const auto wv_t_do = matvec_t(p.w_v, d_o);
  const auto wk_t_q = matvec_t(p.w_k, tr.q);
  for (std::size_t s = 0; s < S; ++s) {
    if (!tr.mask[s]) continue;
    const double w = tr.weights[s] * tr.keep[s];
    if (w != 0.0) {
      add_outer(g.w_v, d_o, tr.x_b.row(s), w);
      auto row = g.x_b.row(s);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += w * wv_t_do[j];
    }
    d_weight[s] = dot(d_o, tr.v.row(s)) * tr.keep[s];
  }

  std::vector<double> d_score(S, 0.0);
  if (cfg.kind == AttnKind::softmax) {
    double inner = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      if (tr.mask[s]) inner += tr.weights[s] * d_weight[s];
    }
    for (std::size_t s = 0; s < S; ++s) {
      if (tr.mask[s]) d_score[s] = tr.weights[s] * (d_weight[s] - inner);
    }
  } else {
    const Unary f = transform_of(cfg.kind);
    for (std::size_t s = 0; s < S; ++s) {
      if (tr.mask[s]) d_score[s] = d_weight[s] * unary_grad(f, tr.scores[s]);
    }
  }

  const double scale = cfg.scale();
  std::vector<double> d_q(cfg.d_a, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const double ds = d_score[s] * scale;
    if (!tr.mask[s] || ds == 0.0) continue;
    const auto k = tr.k.row(s);
    for (std::size_t a = 0; a < cfg.d_a; ++a) d_q[a] += ds * k[a];
    // dK_s = ds * Q
    add_outer(g.w_k, tr.q, tr.x_b.row(s), ds);
    auto row = g.x_b.row(s);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += ds * wk_t_q[j];
  }
  add_outer(g.w_q, d_q, tr.x_t);
  const auto dxt = matvec_t(p.w_q, d_q);
  for (std::size_t j = 0; j < g.x_t.size(); ++j) g.x_t[j] += dxt[j];
  return g;
}

MeanPoolTrace mean_pool_forward(const Matrix& w_v, std::span<const double> x_t, const Matrix& x_b,
                                std::span<const std::uint8_t> mask) {
  if (mask.size() != x_b.rows()) throw ShapeError("mean_pool: mask length mismatch");
  if (w_v.cols() != x_b.cols() || w_v.rows() != x_t.size()) {
    throw ShapeError("mean_pool: W_v " + w_v.shape_str() + " incompatible with inputs");
  }
  MeanPoolTrace tr;
  tr.mask.assign(mask.begin(), mask.end());
  tr.mean.assign(x_b.cols(), 0.0);
  for (std::size_t s = 0; s < x_b.rows(); ++s) {
    if (!mask[s]) continue;
    ++tr.count;
    const auto r = x_b.row(s);
    for (std::size_t j = 0; j < r.size(); ++j) tr.mean[j] += r[j];
  }
  tr.o.assign(x_t.begin(), x_t.end());
  if (tr.count == 0) return tr;
  for (auto& m : tr.mean) m /= static_cast<double>(tr.count);
  const auto proj = matvec(w_v, tr.mean);
  for (std::size_t a = 0; a < proj.size(); ++a) tr.o[a] += proj[a];
  return tr;
}

AttentionGrads mean_pool_backward(const Matrix& w_v, const MeanPoolTrace& tr, std::size_t seq_len,
                                  std::span<const double> d_o) {
  AttentionGrads g;
  g.w_v = Matrix(w_v.rows(), w_v.cols());
  g.x_t.assign(d_o.begin(), d_o.end());
  g.x_b = Matrix(seq_len, w_v.cols());
  if (tr.count == 0) return g;
  add_outer(g.w_v, d_o, tr.mean);
  auto d_mean = matvec_t(w_v, d_o);
  const double inv = 1.0 / static_cast<double>(tr.count);
  for (std::size_t s = 0; s < seq_len; ++s) {
    if (!tr.mask[s]) continue;
    auto row = g.x_b.row(s);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = d_mean[j] * inv;
  }
  return g;
}

}  // namespace qin
