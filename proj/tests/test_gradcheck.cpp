#include <doctest.h>

#include <cmath>

#include "qin/gradcheck.hpp"

using namespace qin;

TEST_CASE("relative error definition") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(2.0, 1.0) == 0.5);
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1e-9, 0.0) == doctest::Approx(0.1));
}

TEST_CASE("quadratic bowl and constant function") {
  const std::vector<double> x{0.3, -1.2, 2.5, 0.7};
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2 * x[i];
  const ProbedFn bowl = [](std::span<const double> p, std::vector<double>*) { return dot(p, p); };
  const auto r = check("bowl", bowl, g, x);
  CHECK(r.max_rel_err < 1e-9);
  CHECK(r.checked == 4);
  CHECK(r.skipped == 0);

  const ProbedFn constant = [](std::span<const double>, std::vector<double>*) { return 3.0; };
  CHECK(check("const", constant, std::vector<double>(4, 0.0), x).max_rel_err == 0.0);
  CHECK(check("const", constant, std::vector<double>(4, 1.0), x).max_rel_err == 1.0);
}

TEST_CASE("step-size robustness on a smooth function") {
  const std::vector<double> x{0.4, -0.9, 1.1};
  const ProbedFn f = [](std::span<const double> p, std::vector<double>*) {
    double s = 0.0;
    for (double v : p) s += std::exp(0.5 * v);
    return s;
  };
  std::vector<double> g;
  for (double v : x) g.push_back(0.5 * std::exp(0.5 * v));
  const double e4 = check("f", f, g, x, 1e-4).max_rel_err;
  const double e6 = check("f", f, g, x, 1e-6).max_rel_err;
  CHECK(e4 < 1e-6);
  CHECK(e6 < 1e-6);
  CHECK(std::abs(std::log10(std::max(e4, 1e-16)) - std::log10(std::max(e6, 1e-16))) <= 1.0);
}

TEST_CASE("kink guard skips coordinates at a ReLU hinge") {
  const std::vector<double> x{0.0, 1.0};
  const ProbedFn f = [](std::span<const double> p, std::vector<double>* kinks) {
    if (kinks) kinks->push_back(p[0]);
    return std::max(p[0], 0.0) + p[1];
  };
  const auto r = check("relu", f, std::vector<double>{0.0, 1.0}, x);
  CHECK(r.skipped >= 1);
  CHECK(r.max_rel_err < 1e-9);
}

TEST_CASE("non-finite objective is an error") {
  const ProbedFn f = [](std::span<const double>, std::vector<double>*) { return NAN; };
  CHECK_THROWS_AS(check("nan", f, std::vector<double>{0.0}, std::vector<double>{1.0}),
                  NonFiniteError);
}

TEST_CASE("gradient classes") {
  CHECK(grad_class("id_embedding") == "embeddings");
  CHECK(grad_class("w_q") == "w_q");
  CHECK(grad_class("qnn1.w") == "qnn.w");
  CHECK(grad_class("qnn0.prelu_slope") == "qnn.prelu_slope");
  CHECK(grad_class("mlp0.b") == "mlp");
  CHECK(grad_class("head_b") == "head");
}

TEST_CASE("full model passes; sabotage is caught") {
  const auto hp = gradcheck_hyperparams();
  CHECK(hp.d_t == 16);
  CHECK(hp.seq_len == 8);
  CHECK(hp.qnn_layers == 2);
  CHECK(hp.qnn_capacity == 2);
  const auto r = check_seeds(hp, 1, 2);
  for (const auto* name : {"embeddings", "w_q", "w_k", "w_v", "qnn.w", "qnn.prelu_slope", "head"}) {
    const auto* c = r.find(name);
    REQUIRE_MESSAGE(c != nullptr, name);
    CHECK_MESSAGE(c->max_rel_err < 1e-4, name);
    CHECK(c->skipped_fraction() < 0.05);
  }
  const auto bad = check_seeds(hp, 1, 1, kDefaultStep, "head");
  CHECK(bad.find("head")->max_rel_err > 1e-4);
  CHECK(bad.find("w_q")->max_rel_err < 1e-4);
}

TEST_CASE("ablation variants pass gradcheck") {
  for (int v = 0; v < 5; ++v) {
    auto hp = gradcheck_hyperparams();
    double step = kDefaultStep;
    if (v == 0) hp.interaction = Interaction::mlp;
    if (v == 1) hp.pooling = Pooling::mean;
    if (v == 2) hp.attn_kind = AttnKind::softmax, hp.attn_dropout = true;
    if (v == 3) hp.qnn_residual = false, hp.qnn_activation = QnnActivation::relu;
    // x * act(z) leaves many ~1e-8 weight gradients whose central
    // differences are round-off dominated at 1e-5.
    if (v == 4) hp.qnn_mid_activation = true, step = 1e-4;
    const auto r = check_seeds(hp, 3, 2, step);
    CHECK_MESSAGE(r.passed(1e-4), v);
  }
}
