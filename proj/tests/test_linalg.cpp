#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qin/linalg.hpp"

using namespace qin;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (auto& v : m.flat()) v = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("matmul: identity, hand product, mismatch") {
  const Matrix a(2, 2, {1, 2, 3, 4});
  CHECK(matmul(Matrix::identity(2), a) == a);

  const Matrix ones(2, 1, {1, 1});
  const auto p = matmul(a, ones);
  CHECK(p.rows() == 2);
  CHECK(p.cols() == 1);
  CHECK(p(0, 0) == 3.0);
  CHECK(p(1, 0) == 7.0);

  const Matrix a23(2, 3);
  const Matrix b22(2, 2);
  try {
    matmul(a23, b22);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(2x3)") != std::string::npos);
    CHECK(msg.find("(2x2)") != std::string::npos);
  }
}

TEST_CASE("matmul is associative on random 4x4 triples") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_matrix(rng, 4, 4);
    const auto b = random_matrix(rng, 4, 4);
    const auto c = random_matrix(rng, 4, 4);
    const auto left = matmul(matmul(a, b), c);
    const auto right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(left.flat()[i] - right.flat()[i]) < 1e-9);
  }
}

TEST_CASE("activation definitions") {
  const std::vector<double> x{-1, 0, 2};
  CHECK(elementwise(Unary::relu, x) == std::vector<double>{0, 0, 2});
  CHECK(elementwise(Unary::relu2, x) == std::vector<double>{0, 0, 4});
  CHECK(elementwise(Unary::prelu, std::vector<double>{-2}, 0.25) == std::vector<double>{-0.5});
  CHECK(elementwise(Unary::silu, std::vector<double>{0})[0] == 0.0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(apply_unary(Unary::silu, 1.5) == doctest::Approx(1.5 / (1 + std::exp(-1.5))));

  SUBCASE("subgradients at zero") {
    CHECK(unary_grad(Unary::relu, 0.0) == 0.0);
    CHECK(unary_grad(Unary::prelu, 0.0, 0.25) == 1.0);
    CHECK(unary_grad(Unary::prelu, -1.0, 0.25) == 0.25);
  }

  SUBCASE("binary ops check shapes") {
    CHECK(add(std::vector<double>{1, 2}, std::vector<double>{3, 4}) == std::vector<double>{4, 6});
    CHECK(mul(std::vector<double>{1, 2}, std::vector<double>{3, 4}) == std::vector<double>{3, 8});
    CHECK_THROWS_AS(add(std::vector<double>{1}, std::vector<double>{1, 2}), ShapeError);
    CHECK_THROWS_AS(mul(Matrix(2, 2), Matrix(2, 3)), ShapeError);
  }
}

TEST_CASE("monotone activations preserve order on sorted inputs") {
  Rng rng(3);
  std::vector<double> x(200);
  for (auto& v : x) v = rng.normal(0.0, 3.0);
  std::sort(x.begin(), x.end());
  for (Unary op : {Unary::relu, Unary::sigmoid, Unary::identity}) {
    const auto y = elementwise(op, x);
    CHECK(std::is_sorted(y.begin(), y.end()));
  }
  const auto p = elementwise(Unary::prelu, x, 0.25);
  CHECK(std::is_sorted(p.begin(), p.end()));
  // relu2 is flat on negatives, so check the piecewise definition instead.
  for (double v : x) CHECK(apply_unary(Unary::relu2, v) == (v > 0 ? v * v : 0.0));
  // silu is monotone only for x above its minimum near -1.278.
  std::vector<double> pos;
  for (double v : x) {
    if (v > -1.2) pos.push_back(v);
  }
  const auto s = elementwise(Unary::silu, pos);
  CHECK(std::is_sorted(s.begin(), s.end()));
}

TEST_CASE("rng_normal") {
  Rng a(5);
  const auto flat = rng_normal(a, 7, 1.5, 0.0);
  CHECK(std::all_of(flat.begin(), flat.end(), [](double v) { return v == 1.5; }));

  Rng r1(42), r2(42);
  CHECK(rng_normal(r1, 5, 0, 1) == rng_normal(r2, 5, 0, 1));

  Rng big(2024);
  const auto xs = rng_normal(big, 100000, 0.0, 1.0);
  double mean = 0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(xs.size());
  CHECK(std::abs(mean) < 0.02);
}

TEST_CASE("rng stream is pinned") {
  // Guards against silently changing the generator: acceptance seeds depend on it.
  Rng rng(0);
  const auto first = rng.next_u64();
  Rng again(0);
  CHECK(again.next_u64() == first);
  Rng other(1);
  CHECK(other.next_u64() != first);
  Rng u(9);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  Rng b(9);
  for (int i = 0; i < 1000; ++i) CHECK(b.below(7) < 7);
}
