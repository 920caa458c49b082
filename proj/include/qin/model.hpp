#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qin/linalg.hpp"

namespace qin {

enum class AttnKind { relu, softmax, relu2, silu };
enum class Pooling { asta, mean };
enum class Interaction { qnn, mlp };
/// Activation of the quadratic branch. `relu` is the "w/o PReLU" ablation;
/// `identity` exists for the symbolic degree checks.
enum class QnnActivation { prelu, relu, identity };

std::string to_string(AttnKind k);
std::string to_string(Pooling p);
std::string to_string(Interaction i);
std::string to_string(QnnActivation a);
AttnKind parse_attn_kind(std::string_view s);
Pooling parse_pooling(std::string_view s);
Interaction parse_interaction(std::string_view s);
QnnActivation parse_qnn_activation(std::string_view s);

struct HyperParams {
  // Item vocabulary and frozen (pretrained) embedding width; the trainable
  // ID table supplies the remaining d_t - frozen_dim columns.
  std::size_t vocab = 1;
  std::size_t frozen_dim = 0;

  std::size_t d_t = 16;
  std::size_t d_b = 16;
  std::size_t d_a = 16;
  std::size_t seq_len = 32;  // S
  std::size_t qnn_dim = 32;  // D = d_t + d_a
  std::size_t qnn_layers = 2;    // L
  std::size_t qnn_capacity = 2;  // M
  double dropout_p = 0.1;        // QNN branch dropout

  AttnKind attn_kind = AttnKind::relu;
  bool attn_dropout = false;
  double attn_dropout_p = 0.1;
  Pooling pooling = Pooling::asta;

  Interaction interaction = Interaction::qnn;
  QnnActivation qnn_activation = QnnActivation::prelu;
  bool qnn_residual = true;
  bool qnn_mid_activation = false;
  std::vector<std::size_t> mlp_dims{64, 32};

  std::size_t id_dim() const { return d_t - frozen_dim; }
  /// Width of the vector the head consumes.
  std::size_t head_dim() const;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
};

struct QnnLayerParams {
  Tensor3 w;  // M x D x D
  double prelu_slope = 0.25;

  friend bool operator==(const QnnLayerParams&, const QnnLayerParams&) = default;
};

struct MlpLayerParams {
  Matrix w;  // out x in
  std::vector<double> b;

  friend bool operator==(const MlpLayerParams&, const MlpLayerParams&) = default;
};

struct ModelParams {
  Matrix id_embedding;  // vocab x id_dim
  Matrix w_q;           // d_a x d_t
  Matrix w_k;           // d_a x d_b
  Matrix w_v;           // d_a x d_b
  std::vector<QnnLayerParams> qnn;
  std::vector<MlpLayerParams> mlp;
  std::vector<double> head_w;
  double head_b = 0.0;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Gradients share the parameter layout slot for slot.
using Gradients = ModelParams;

/// One learnable tensor as seen by generic code (optimizer, checkpoint,
/// gradient checks).
template <typename T>
struct TensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<T> data;
  bool is_embedding = false;
};

using ParamView = TensorView<double>;
using ConstParamView = TensorView<const double>;

/// Enumerates every learnable tensor in a fixed order.
std::vector<ParamView> param_views(ModelParams& p);
std::vector<ConstParamView> param_views(const ModelParams& p);

ModelParams zeros_like(const ModelParams& p);
void set_zero(ModelParams& p);
std::size_t param_count(const ModelParams& p);

/// Projection/QNN weights ~ N(0, 1/fan_in), PReLU slopes 0.25, head_b 0,
/// ID embeddings ~ N(0, 0.01^2).
ModelParams init_params(const HyperParams& hp, Rng& rng);

/// Checkpoint layout (all integers little-endian):
///   "QINCKPT1"
///   u32 tensor_count
///   per tensor: u32 name_len, name bytes, u32 rank, rank x u64 dims
///   raw f64 values of every tensor in table order
void save_checkpoint(const ModelParams& p, const std::filesystem::path& path);
/// Validates the stored shape table against the layout `hp` implies.
ModelParams load_checkpoint(const std::filesystem::path& path, const HyperParams& hp);

}  // namespace qin
