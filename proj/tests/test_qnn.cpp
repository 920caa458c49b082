#include <doctest.h>

#include <cmath>
#include <map>

#include "qin/gradcheck.hpp"
#include "qin/qnn.hpp"
#include "poly.hpp"
#include "test_util.hpp"

using namespace qin;
using namespace qin::testing;

namespace {

QnnLayerParams random_layer(std::size_t M, std::size_t D, Rng& rng) {
  QnnLayerParams l;
  l.w = Tensor3(M, D, D);
  fill_normal(l.w.flat(), rng);
  l.prelu_slope = rng.uniform();
  return l;
}

QnnOptions plain() {
  QnnOptions o;
  o.activation = QnnActivation::identity;
  o.residual = false;
  return o;
}

}  // namespace

TEST_CASE("hand-evaluated layer and oracle agree") {
  QnnLayerParams l;
  l.w = Tensor3(1, 2, 2);
  l.w(0, 0, 0) = l.w(0, 1, 1) = 1.0;
  l.prelu_slope = 1.0;
  QnnOptions o;
  const std::vector<double> x{1, 2};
  const auto tr = qnn_layer_forward(l, o, x);
  CHECK(tr.z == std::vector<double>{1, 2});
  CHECK(tr.h == std::vector<double>{1, 4});
  CHECK(tr.out == std::vector<double>{2, 6});
  CHECK(brute_force_expansion(l, o, x) == std::vector<double>{2, 6});
}

TEST_CASE("zero input and zero weights") {
  Rng rng(1);
  const auto l = random_layer(2, 3, rng);
  const std::vector<double> zero(3, 0.0);
  CHECK(qnn_layer_forward(l, {}, zero).out == zero);

  QnnLayerParams z;
  z.w = Tensor3(2, 3, 3);
  const std::vector<double> x{0.5, -2, 3};
  CHECK(qnn_layer_forward(z, {}, x).out == x);
  CHECK(brute_force_expansion(z, {}, x) == x);
}

TEST_CASE("layer forward equals the brute-force expansion") {
  Rng rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t D = 1 + rng.below(5), M = 1 + rng.below(3);
    const auto l = random_layer(M, D, rng);
    std::vector<double> x(D);
    fill_normal(x, rng);
    for (auto act : {QnnActivation::prelu, QnnActivation::relu, QnnActivation::identity}) {
      for (bool residual : {true, false}) {
        QnnOptions o;
        o.activation = act;
        o.residual = residual;
        const auto a = qnn_layer_forward(l, o, x).out;
        const auto b = brute_force_expansion(l, o, x);
        for (std::size_t i = 0; i < D; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
      }
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("symbolic integer check: degree doubles per layer") {
  const std::size_t D = 3, M = 2;
  Rng rng(3);
  std::vector<QnnLayerParams> layers;
  for (int l = 0; l < 2; ++l) {
    QnnLayerParams p;
    p.w = Tensor3(M, D, D);
    for (auto& v : p.w.flat()) v = static_cast<double>(static_cast<int>(rng.below(5)) - 2);
    layers.push_back(p);
  }

  const auto per_layer = symbolic_qnn(layers, D);
  for (std::size_t i = 0; i < D; ++i) {
    CHECK(degree(per_layer[0][i]) <= 2);
    CHECK(degree(per_layer[1][i]) <= 4);
  }

  std::size_t points = 0;
  std::vector<long long> xi(D, -2);
  while (true) {
    const std::vector<double> x(xi.begin(), xi.end());
    const auto tr = qnn_forward(layers, plain(), x);
    for (std::size_t l = 0; l < 2; ++l) {
      for (std::size_t i = 0; i < D; ++i) {
        CHECK(tr.layers[l].out[i] == static_cast<double>(eval(per_layer[l][i], xi)));
      }
    }
    ++points;
    std::size_t k = 0;
    while (k < D && ++xi[k] > 2) xi[k++] = -2;
    if (k == D) break;
  }
  CHECK(points == 125);
}

TEST_CASE("pre-activation branch is homogeneous of degree two") {
  Rng rng(4);
  const auto l = random_layer(2, 4, rng);
  std::vector<double> x(4);
  fill_normal(x, rng);
  std::vector<double> x3 = x;
  for (auto& v : x3) v *= 3.0;
  const auto a = qnn_layer_forward(l, plain(), x).h;
  const auto b = qnn_layer_forward(l, plain(), x3).h;
  for (std::size_t i = 0; i < 4; ++i) CHECK(b[i] == doctest::Approx(9.0 * a[i]).epsilon(1e-14));
}

TEST_CASE("L = 0 is identity; zero upstream gives zero gradients") {
  const std::vector<double> x{1, 2, 3};
  const auto tr = qnn_forward({}, {}, x);
  const auto out = qnn_output(tr, x);
  CHECK(std::vector<double>(out.begin(), out.end()) == x);
  const std::vector<double> up{0.1, 0.2, 0.3};
  CHECK(qnn_backward({}, {}, tr, up).x1 == up);

  Rng rng(5);
  std::vector<QnnLayerParams> layers{random_layer(2, 3, rng), random_layer(2, 3, rng)};
  const auto t2 = qnn_forward(layers, {}, x);
  const auto g = qnn_backward(layers, {}, t2, std::vector<double>(3, 0.0));
  for (const auto& w : g.w) {
    for (double v : w.flat()) CHECK(v == 0.0);
  }
  for (double v : g.prelu_slope) CHECK(v == 0.0);
  for (double v : g.x1) CHECK(v == 0.0);
}

TEST_CASE("assemble_x1 layout") {
  HyperParams hp;
  hp.d_t = hp.d_a = hp.d_b = 2;
  hp.qnn_dim = 4;
  const std::vector<double> xt{1, 2}, o{3, 4};
  CHECK(assemble_x1(xt, o, hp) == std::vector<double>{1, 2, 3, 4});
  CHECK(assemble_x1(std::vector<double>(2, 0.0), std::vector<double>(2, 0.0), hp) ==
        std::vector<double>(4, 0.0));
  hp.qnn_dim = 5;
  CHECK_THROWS(assemble_x1(xt, o, hp));
}

TEST_CASE("qnn_backward matches finite differences (L=2, D=4, M=2)") {
  for (bool mid : {false, true}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(70 + seed);
      std::vector<QnnLayerParams> layers{random_layer(2, 4, rng), random_layer(2, 4, rng)};
      std::vector<double> x1(4), up(4);
      fill_normal(x1, rng);
      fill_normal(up, rng);
      QnnOptions o;
      o.mid_activation = mid;
      const auto g = qnn_backward(layers, o, qnn_forward(layers, o, x1), up);

      std::vector<double> point, analytic;
      for (std::size_t l = 0; l < 2; ++l) {
        point.insert(point.end(), layers[l].w.flat().begin(), layers[l].w.flat().end());
        analytic.insert(analytic.end(), g.w[l].flat().begin(), g.w[l].flat().end());
        point.push_back(layers[l].prelu_slope);
        analytic.push_back(g.prelu_slope[l]);
      }
      point.insert(point.end(), x1.begin(), x1.end());
      analytic.insert(analytic.end(), g.x1.begin(), g.x1.end());

      const ProbedFn f = [&](std::span<const double> x, std::vector<double>* kinks) {
        auto ls = layers;
        std::size_t at = 0;
        for (auto& l : ls) {
          for (auto& v : l.w.flat()) v = x[at++];
          l.prelu_slope = x[at++];
        }
        const std::vector<double> in(x.begin() + at, x.end());
        const auto tr = qnn_forward(ls, o, in);
        if (kinks) {
          for (const auto& lt : tr.layers) kinks->insert(kinks->end(), lt.h.begin(), lt.h.end());
        }
        return dot(qnn_output(tr, in), up);
      };
      CHECK(check("qnn", f, analytic, point).max_rel_err < 1e-4);
    }
  }
}

TEST_CASE("mlp forward contracts and gradients") {
  std::vector<MlpLayerParams> zero{{Matrix(3, 2), std::vector<double>(3, 0.0)}};
  const std::vector<double> x{1.5, 2.5};
  CHECK(mlp_forward(zero, x).out == std::vector<double>(3, 0.0));

  std::vector<MlpLayerParams> ident{{Matrix::identity(2), std::vector<double>(2, 0.0)}};
  CHECK(mlp_forward(ident, x).out == x);

  Rng rng(8);
  std::vector<MlpLayerParams> layers{{Matrix(5, 4), std::vector<double>(5)},
                                     {Matrix(3, 5), std::vector<double>(3)}};
  for (auto& l : layers) {
    fill_normal(l.w.flat(), rng);
    fill_normal(l.b, rng);
  }
  std::vector<double> in(4), up(3);
  fill_normal(in, rng);
  fill_normal(up, rng);
  const auto g = mlp_backward(layers, mlp_forward(layers, in), up);
  std::vector<double> point, analytic;
  for (std::size_t l = 0; l < 2; ++l) {
    point.insert(point.end(), layers[l].w.flat().begin(), layers[l].w.flat().end());
    point.insert(point.end(), layers[l].b.begin(), layers[l].b.end());
    analytic.insert(analytic.end(), g.w[l].flat().begin(), g.w[l].flat().end());
    analytic.insert(analytic.end(), g.b[l].begin(), g.b[l].end());
  }
  point.insert(point.end(), in.begin(), in.end());
  analytic.insert(analytic.end(), g.x1.begin(), g.x1.end());
  const ProbedFn f = [&](std::span<const double> x, std::vector<double>* kinks) {
    auto ls = layers;
    std::size_t at = 0;
    for (auto& l : ls) {
      for (auto& v : l.w.flat()) v = x[at++];
      for (auto& v : l.b) v = x[at++];
    }
    const std::vector<double> xin(x.begin() + at, x.end());
    const auto tr = mlp_forward(ls, xin);
    if (kinks) {
      for (const auto& pre : tr.pre) kinks->insert(kinks->end(), pre.begin(), pre.end());
    }
    return dot(tr.out, up);
  };
  CHECK(check("mlp", f, analytic, point).max_rel_err < 1e-4);
}
