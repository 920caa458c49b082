#include "qin/model.hpp"

#include <cmath>

namespace qin {

std::string to_string(AttnKind k) {
  switch (k) {
    case AttnKind::relu: return "relu";
    case AttnKind::softmax: return "softmax";
    case AttnKind::relu2: return "relu2";
    case AttnKind::silu: return "silu";
  }
  return "?";
}

std::string to_string(Pooling p) { return p == Pooling::asta ? "asta" : "mean"; }
std::string to_string(Interaction i) { return i == Interaction::qnn ? "qnn" : "mlp"; }

std::string to_string(QnnActivation a) {
  switch (a) {
    case QnnActivation::prelu: return "prelu";
    case QnnActivation::relu: return "relu";
    case QnnActivation::identity: return "identity";
  }
  return "?";
}

AttnKind parse_attn_kind(std::string_view s) {
  if (s == "relu") return AttnKind::relu;
  if (s == "softmax") return AttnKind::softmax;
  if (s == "relu2") return AttnKind::relu2;
  if (s == "silu") return AttnKind::silu;
  throw ConfigError("unknown attention kind '" + std::string(s) + "'");
}

Pooling parse_pooling(std::string_view s) {
  if (s == "asta") return Pooling::asta;
  if (s == "mean") return Pooling::mean;
  throw ConfigError("unknown pooling '" + std::string(s) + "'");
}

Interaction parse_interaction(std::string_view s) {
  if (s == "qnn") return Interaction::qnn;
  if (s == "mlp") return Interaction::mlp;
  throw ConfigError("unknown interaction '" + std::string(s) + "'");
}

QnnActivation parse_qnn_activation(std::string_view s) {
  if (s == "prelu") return QnnActivation::prelu;
  if (s == "relu") return QnnActivation::relu;
  if (s == "identity") return QnnActivation::identity;
  throw ConfigError("unknown qnn activation '" + std::string(s) + "'");
}

std::size_t HyperParams::head_dim() const {
  if (interaction == Interaction::mlp) return mlp_dims.empty() ? qnn_dim : mlp_dims.back();
  return qnn_dim;
}

void HyperParams::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
  };
  positive(vocab, "vocab");
  positive(d_t, "d_t");
  positive(d_b, "d_b");
  positive(d_a, "d_a");
  positive(seq_len, "seq_len");
  positive(qnn_dim, "qnn_dim");
  positive(qnn_capacity, "qnn_capacity");
  if (d_a != d_t) {
    throw ConfigError("d_a (" + std::to_string(d_a) + ") must equal d_t (" + std::to_string(d_t) +
                      ") for the target residual");
  }
  if (qnn_dim != d_t + d_a) {
    throw ConfigError("qnn_dim (" + std::to_string(qnn_dim) + ") must equal d_t + d_a (" +
                      std::to_string(d_t + d_a) + ")");
  }
  // Target and behavior rows come from the same item tables.
  if (d_b != d_t) throw ConfigError("d_b must equal d_t (shared item embedding)");
  if (frozen_dim > d_t) throw ConfigError("frozen embedding dim exceeds d_t");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(attn_dropout_p >= 0.0 && attn_dropout_p < 1.0)) {
    throw ConfigError("attn_dropout_p must lie in [0, 1)");
  }
  for (auto w : mlp_dims) positive(w, "mlp width");
}

namespace {

template <typename P, typename View>
std::vector<View> collect_views(P& p) {
  std::vector<View> out;
  auto push = [&](std::string name, std::vector<std::size_t> shape, auto span, bool emb) {
    out.push_back(View{std::move(name), std::move(shape), span, emb});
  };
  push("id_embedding", {p.id_embedding.rows(), p.id_embedding.cols()}, p.id_embedding.flat(), true);
  push("w_q", {p.w_q.rows(), p.w_q.cols()}, p.w_q.flat(), false);
  push("w_k", {p.w_k.rows(), p.w_k.cols()}, p.w_k.flat(), false);
  push("w_v", {p.w_v.rows(), p.w_v.cols()}, p.w_v.flat(), false);
  for (std::size_t l = 0; l < p.qnn.size(); ++l) {
    auto& layer = p.qnn[l];
    const auto tag = std::to_string(l);
    push("qnn" + tag + ".w", {layer.w.dim0(), layer.w.dim1(), layer.w.dim2()}, layer.w.flat(),
         false);
    push("qnn" + tag + ".prelu_slope", {1}, std::span(&layer.prelu_slope, 1), false);
  }
  for (std::size_t l = 0; l < p.mlp.size(); ++l) {
    auto& layer = p.mlp[l];
    const auto tag = std::to_string(l);
    push("mlp" + tag + ".w", {layer.w.rows(), layer.w.cols()}, layer.w.flat(), false);
    push("mlp" + tag + ".b", {layer.b.size()}, std::span(layer.b), false);
  }
  push("head_w", {p.head_w.size()}, std::span(p.head_w), false);
  push("head_b", {1}, std::span(&p.head_b, 1), false);
  return out;
}

void fill_normal(std::span<double> xs, Rng& rng, double std) {
  for (auto& x : xs) x = rng.normal(0.0, std);
}

}  // namespace

std::vector<ParamView> param_views(ModelParams& p) {
  return collect_views<ModelParams, ParamView>(p);
}

std::vector<ConstParamView> param_views(const ModelParams& p) {
  return collect_views<const ModelParams, ConstParamView>(p);
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  set_zero(z);
  return z;
}

void set_zero(ModelParams& p) {
  for (auto& v : param_views(p)) std::fill(v.data.begin(), v.data.end(), 0.0);
}

std::size_t param_count(const ModelParams& p) {
  std::size_t n = 0;
  for (const auto& v : param_views(p)) n += v.data.size();
  return n;
}

ModelParams init_params(const HyperParams& hp, Rng& rng) {
  hp.validate();
  ModelParams p;
  p.id_embedding = Matrix(hp.vocab, hp.id_dim());
  fill_normal(p.id_embedding.flat(), rng, 0.01);

  p.w_q = Matrix(hp.d_a, hp.d_t);
  p.w_k = Matrix(hp.d_a, hp.d_b);
  p.w_v = Matrix(hp.d_a, hp.d_b);
  fill_normal(p.w_q.flat(), rng, std::sqrt(1.0 / static_cast<double>(hp.d_t)));
  fill_normal(p.w_k.flat(), rng, std::sqrt(1.0 / static_cast<double>(hp.d_b)));
  fill_normal(p.w_v.flat(), rng, std::sqrt(1.0 / static_cast<double>(hp.d_b)));

  double qnn_std = std::sqrt(1.0 / static_cast<double>(hp.qnn_dim));
  if (hp.interaction == Interaction::qnn) {
    for (std::size_t l = 0; l < hp.qnn_layers; ++l) {
      QnnLayerParams layer{Tensor3(hp.qnn_capacity, hp.qnn_dim, hp.qnn_dim), 0.25};
      fill_normal(layer.w.flat(), rng, qnn_std);
      p.qnn.push_back(std::move(layer));
    }
  } else {
    std::size_t in = hp.qnn_dim;
    for (auto out : hp.mlp_dims) {
      MlpLayerParams layer{Matrix(out, in), std::vector<double>(out, 0.0)};
      fill_normal(layer.w.flat(), rng, std::sqrt(1.0 / static_cast<double>(in)));
      p.mlp.push_back(std::move(layer));
      in = out;
    }
  }

  p.head_w.resize(hp.head_dim());
  fill_normal(p.head_w, rng, std::sqrt(1.0 / static_cast<double>(hp.head_dim())));
  p.head_b = 0.0;
  return p;
}

}  // namespace qin
