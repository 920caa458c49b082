#include "qin/qnn.hpp"

namespace qin {

namespace {

Unary unary_of(QnnActivation a) {
  switch (a) {
    case QnnActivation::prelu: return Unary::prelu;
    case QnnActivation::relu: return Unary::relu;
    case QnnActivation::identity: return Unary::identity;
  }
  return Unary::identity;
}

void check_layer(const QnnLayerParams& layer, std::size_t d) {
  if (layer.w.dim1() != d || layer.w.dim2() != d) {
    throw ShapeError("qnn: layer expects D=" + std::to_string(layer.w.dim1()) + ", got input of " +
                     std::to_string(d));
  }
}

std::vector<double> head_sum(const QnnLayerParams& layer, std::span<const double> x) {
  const std::size_t D = x.size();
  std::vector<double> z(D, 0.0);
  for (std::size_t m = 0; m < layer.w.dim0(); ++m) {
    for (std::size_t i = 0; i < D; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < D; ++j) acc += layer.w(m, i, j) * x[j];
      z[i] += acc;
    }
  }
  return z;
}

}  // namespace

QnnOptions QnnOptions::from(const HyperParams& hp) {
  return QnnOptions{hp.qnn_activation, hp.qnn_residual, hp.qnn_mid_activation, hp.dropout_p};
}

std::vector<double> assemble_x1(std::span<const double> x_t, std::span<const double> o,
                                const HyperParams& hp) {
  if (hp.qnn_dim != hp.d_t + hp.d_a) {
    throw ConfigError("qnn_dim must equal d_t + d_a");
  }
  if (x_t.size() != hp.d_t || o.size() != hp.d_a) {
    throw ShapeError("assemble_x1: got x_t of " + std::to_string(x_t.size()) + " and o of " +
                     std::to_string(o.size()));
  }
  std::vector<double> x1(x_t.begin(), x_t.end());
  x1.insert(x1.end(), o.begin(), o.end());
  return x1;
}

QnnLayerTrace qnn_layer_forward(const QnnLayerParams& layer, const QnnOptions& opts,
                                std::span<const double> x, Rng* dropout_rng) {
  check_layer(layer, x.size());
  const std::size_t D = x.size();
  const Unary act = unary_of(opts.activation);
  QnnLayerTrace tr;
  tr.x.assign(x.begin(), x.end());
  tr.z = head_sum(layer, x);
  tr.keep.assign(D, 1.0);
  if (dropout_rng != nullptr && opts.dropout_p > 0.0) {
    const double inv_keep = 1.0 / (1.0 - opts.dropout_p);
    for (auto& k : tr.keep) k = dropout_rng->uniform() < opts.dropout_p ? 0.0 : inv_keep;
  }

  tr.h.resize(D);
  tr.out.resize(D);
  for (std::size_t i = 0; i < D; ++i) {
    double branch;
    if (opts.mid_activation) {
      tr.h[i] = tr.z[i];
      branch = x[i] * apply_unary(act, tr.z[i], layer.prelu_slope);
    } else {
      tr.h[i] = x[i] * tr.z[i];
      branch = apply_unary(act, tr.h[i], layer.prelu_slope);
    }
    tr.out[i] = (opts.residual ? x[i] : 0.0) + branch * tr.keep[i];
  }
  return tr;
}

std::vector<double> brute_force_expansion(const QnnLayerParams& layer, const QnnOptions& opts,
                                          std::span<const double> x) {
  if (opts.mid_activation) {
    throw ConfigError("brute_force_expansion covers the post-activation layer only");
  }
  check_layer(layer, x.size());
  const std::size_t D = x.size();
  const Unary act = unary_of(opts.activation);
  std::vector<double> out(D);
  Matrix coeff(D, D);
  for (std::size_t i = 0; i < D; ++i) {
    // H[i] = sum_{j,k} A_i(j,k) x_j x_k with A_i(j,k) = [j == i] sum_m W[m,i,k].
    for (std::size_t j = 0; j < D; ++j) {
      for (std::size_t k = 0; k < D; ++k) {
        double a = 0.0;
        if (j == i) {
          for (std::size_t m = 0; m < layer.w.dim0(); ++m) a += layer.w(m, i, k);
        }
        coeff(j, k) = a;
      }
    }
    double h = 0.0;
    for (std::size_t j = 0; j < D; ++j) {
      for (std::size_t k = 0; k < D; ++k) h += coeff(j, k) * x[j] * x[k];
    }
    out[i] = (opts.residual ? x[i] : 0.0) + apply_unary(act, h, layer.prelu_slope);
  }
  return out;
}

QnnTrace qnn_forward(std::span<const QnnLayerParams> layers, const QnnOptions& opts,
                     std::span<const double> x1, Rng* dropout_rng) {
  QnnTrace tr;
  tr.layers.reserve(layers.size());
  std::span<const double> cur = x1;
  for (const auto& layer : layers) {
    tr.layers.push_back(qnn_layer_forward(layer, opts, cur, dropout_rng));
    cur = tr.layers.back().out;
  }
  return tr;
}

std::span<const double> qnn_output(const QnnTrace& trace, std::span<const double> x1) {
  return trace.layers.empty() ? x1 : std::span<const double>(trace.layers.back().out);
}

QnnGrads qnn_backward(std::span<const QnnLayerParams> layers, const QnnOptions& opts,
                      const QnnTrace& trace, std::span<const double> upstream) {
  if (trace.layers.size() != layers.size()) {
    throw ShapeError("qnn_backward: trace has " + std::to_string(trace.layers.size()) +
                     " layers, model has " + std::to_string(layers.size()));
  }
  const Unary act = unary_of(opts.activation);
  QnnGrads g;
  g.w.resize(layers.size());
  g.prelu_slope.assign(layers.size(), 0.0);
  std::vector<double> grad(upstream.begin(), upstream.end());

  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const auto& tr = trace.layers[l];
    const std::size_t D = tr.x.size();
    if (grad.size() != D) throw ShapeError("qnn_backward: upstream length mismatch");
    check_layer(layer, D);
    const double slope = layer.prelu_slope;

    std::vector<double> dx(D, 0.0);
    if (opts.residual) dx = grad;
    std::vector<double> dz(D, 0.0);
    double dslope = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
      const double d_branch = grad[i] * tr.keep[i];
      if (opts.mid_activation) {
        const double a = apply_unary(act, tr.z[i], slope);
        dx[i] += d_branch * a;
        const double d_act = d_branch * tr.x[i];
        dz[i] = d_act * unary_grad(act, tr.z[i], slope);
        if (tr.z[i] < 0) dslope += d_act * tr.z[i];
      } else {
        const double dh = d_branch * unary_grad(act, tr.h[i], slope);
        if (tr.h[i] < 0) dslope += d_branch * tr.h[i];
        dx[i] += dh * tr.z[i];
        dz[i] = dh * tr.x[i];
      }
    }
    if (opts.activation == QnnActivation::prelu) g.prelu_slope[l] = dslope;

    Tensor3 dw(layer.w.dim0(), D, D);
    for (std::size_t i = 0; i < D; ++i) {
      if (dz[i] == 0.0) continue;
      for (std::size_t j = 0; j < D; ++j) {
        const double v = dz[i] * tr.x[j];
        double w_sum = 0.0;
        for (std::size_t m = 0; m < layer.w.dim0(); ++m) {
          dw(m, i, j) = v;
          w_sum += layer.w(m, i, j);
        }
        dx[j] += w_sum * dz[i];
      }
    }
    g.w[l] = std::move(dw);
    grad = std::move(dx);
  }
  g.x1 = std::move(grad);
  return g;
}

MlpTrace mlp_forward(std::span<const MlpLayerParams> layers, std::span<const double> x) {
  MlpTrace tr;
  std::vector<double> cur(x.begin(), x.end());
  for (const auto& layer : layers) {
    if (layer.w.cols() != cur.size() || layer.b.size() != layer.w.rows()) {
      throw ShapeError("mlp: layer " + layer.w.shape_str() + " cannot take input of length " +
                       std::to_string(cur.size()));
    }
    auto pre = matvec(layer.w, cur);
    for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += layer.b[i];
    tr.inputs.push_back(std::move(cur));
    cur = elementwise(Unary::relu, pre);
    tr.pre.push_back(std::move(pre));
  }
  tr.out = std::move(cur);
  return tr;
}

MlpGrads mlp_backward(std::span<const MlpLayerParams> layers, const MlpTrace& tr,
                      std::span<const double> upstream) {
  if (tr.pre.size() != layers.size()) throw ShapeError("mlp_backward: trace mismatch");
  MlpGrads g;
  g.w.resize(layers.size());
  g.b.resize(layers.size());
  std::vector<double> grad(upstream.begin(), upstream.end());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    if (grad.size() != layer.w.rows()) throw ShapeError("mlp_backward: upstream length mismatch");
    std::vector<double> d_pre(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
      d_pre[i] = grad[i] * unary_grad(Unary::relu, tr.pre[l][i]);
    }
    g.w[l] = Matrix(layer.w.rows(), layer.w.cols());
    add_outer(g.w[l], d_pre, tr.inputs[l]);
    g.b[l] = d_pre;
    grad = matvec_t(layer.w, d_pre);
  }
  g.x1 = std::move(grad);
  return g;
}

}  // namespace qin
