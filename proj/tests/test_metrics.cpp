#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qin/errors.hpp"
#include "qin/linalg.hpp"
#include "qin/metrics.hpp"

using namespace qin;

TEST_CASE("head_forward") {
  const std::vector<double> w0{0, 0}, x{3, 7};
  CHECK(head_forward(w0, 0.0, x).prob == 0.5);
  const std::vector<double> w{1, 0};
  const auto h = head_forward(w, -3.0, x);
  CHECK(h.logit == 0.0);
  CHECK(h.prob == 0.5);
  const std::vector<double> one{1};
  const std::vector<double> ln3{std::log(3.0)};
  CHECK(head_forward(one, 0.0, ln3).prob == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(head_forward(one, 0.0, x), ShapeError);
}

TEST_CASE("bce_loss values") {
  const std::vector<int> y1{1};
  CHECK(bce_loss(std::vector<double>{0.5}, y1) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(bce_loss(std::vector<double>{1.0, 0.0}, std::vector<int>{1, 0}) <= 1e-11);
  CHECK(bce_loss(std::vector<double>{0.9, 0.2}, std::vector<int>{1, 0}) ==
        doctest::Approx(-(std::log(0.9) + std::log(0.8)) / 2).epsilon(1e-12));
  CHECK(bce_loss(std::vector<double>{0.9, 0.2}, std::vector<int>{1, 0}) ==
        doctest::Approx(0.164252).epsilon(1e-6));
  CHECK(std::isfinite(bce_loss(std::vector<double>{0.0}, y1)));
  CHECK_THROWS(bce_loss(std::vector<double>{0.5}, std::vector<int>{1, 0}));
}

TEST_CASE("bce gradient matches finite differences of the loss") {
  Rng rng(1);
  std::vector<double> logits(7);
  std::vector<int> labels(7);
  for (std::size_t i = 0; i < 7; ++i) {
    logits[i] = rng.normal(0.0, 2.0);
    labels[i] = static_cast<int>(rng.below(2));
  }
  const auto g = bce_backward(logits, labels);
  for (std::size_t i = 0; i < 7; ++i) {
    const double h = 1e-6;
    auto lp = logits, lm = logits;
    lp[i] += h;
    lm[i] -= h;
    const double num = (logloss_from_logits(lp, labels) - logloss_from_logits(lm, labels)) / (2 * h);
    CHECK(std::abs(g[i] - num) / std::max({std::abs(g[i]), std::abs(num), 1e-8}) < 1e-6);
  }
}

TEST_CASE("loss is permutation invariant over the batch") {
  const std::vector<double> p{0.1, 0.7, 0.4, 0.95};
  const std::vector<int> y{0, 1, 1, 0};
  const std::vector<double> pr{0.95, 0.4, 0.7, 0.1};
  const std::vector<int> yr{0, 1, 1, 0};
  CHECK(bce_loss(p, y) == doctest::Approx(bce_loss(pr, yr)).epsilon(1e-15));
}

TEST_CASE("auc examples") {
  CHECK(auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == 1.0);
  CHECK(auc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{1, 0, 1}) == 0.5);
  const std::vector<double> s{0.8, 0.7, 0.6, 0.5};
  const std::vector<int> y{1, 0, 1, 0};
  CHECK(auc(s, y) == 0.75);
  CHECK(auc_bruteforce(s, y) == 0.75);
  CHECK(auc_bruteforce(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 0}) == 0.0);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 1}), SingleClassError);
  CHECK_THROWS_AS(auc_bruteforce(std::vector<double>{0.1}, std::vector<int>{0}), SingleClassError);
}

TEST_CASE("rank auc equals pairwise oracle with ties; monotone invariance") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(999);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid so ties are common.
      s[i] = static_cast<double>(rng.below(1 + n / 4)) / 8.0 - 2.0;
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 1;
    y[1] = 0;
    const double a = auc(s, y);
    CHECK(a == auc_bruteforce(s, y));

    std::vector<double> lin(n), sig(n);
    std::transform(s.begin(), s.end(), lin.begin(), [](double x) { return 2 * x + 1; });
    std::transform(s.begin(), s.end(), sig.begin(), [](double x) { return sigmoid(x); });
    CHECK(auc(lin, y) == a);
    CHECK(auc(sig, y) == a);
  }
}
