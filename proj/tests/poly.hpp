#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "qin/qnn.hpp"

namespace qin::testing {

// Integer polynomial in D variables: exponent vector -> coefficient.
using Poly = std::map<std::vector<int>, long long>;

inline Poly variable(std::size_t D, std::size_t i) {
  std::vector<int> e(D, 0);
  e[i] = 1;
  return {{e, 1}};
}

inline Poly operator+(Poly a, const Poly& b) {
  for (const auto& [e, c] : b) a[e] += c;
  return a;
}

inline Poly operator*(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ea, ca] : a) {
    for (const auto& [eb, cb] : b) {
      auto e = ea;
      for (std::size_t i = 0; i < e.size(); ++i) e[i] += eb[i];
      out[e] += ca * cb;
    }
  }
  return out;
}

inline Poly scaled(const Poly& a, long long k) {
  Poly out;
  for (const auto& [e, c] : a) out[e] = c * k;
  return out;
}

inline long long eval(const Poly& p, const std::vector<long long>& x) {
  long long s = 0;
  for (const auto& [e, c] : p) {
    long long term = c;
    for (std::size_t i = 0; i < e.size(); ++i) {
      for (int k = 0; k < e[i]; ++k) term *= x[i];
    }
    s += term;
  }
  return s;
}

inline int degree(const Poly& p) {
  int d = 0;
  for (const auto& [e, c] : p) {
    if (c == 0) continue;
    int t = 0;
    for (int v : e) t += v;
    d = std::max(d, t);
  }
  return d;
}

/// Symbolic outputs of every layer (identity activation, residual off)
/// over integer weights.
inline std::vector<std::vector<Poly>> symbolic_qnn(const std::vector<QnnLayerParams>& layers,
                                                   std::size_t D) {
  std::vector<Poly> xs;
  for (std::size_t i = 0; i < D; ++i) xs.push_back(variable(D, i));
  std::vector<std::vector<Poly>> per_layer;
  for (const auto& layer : layers) {
    std::vector<Poly> next(D);
    for (std::size_t i = 0; i < D; ++i) {
      Poly z;
      for (std::size_t m = 0; m < layer.w.dim0(); ++m) {
        for (std::size_t j = 0; j < D; ++j) {
          z = z + scaled(xs[j], static_cast<long long>(layer.w(m, i, j)));
        }
      }
      next[i] = xs[i] * z;
    }
    per_layer.push_back(next);
    xs = next;
  }
  return per_layer;
}

}  // namespace qin::testing
