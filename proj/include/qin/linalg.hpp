#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qin/errors.hpp"

namespace qin {

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  std::string shape_str() const;

  static Matrix identity(std::size_t n);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Rank-3 tensor stored as dim0 stacked (dim1 x dim2) row-major slices.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t d0, std::size_t d1, std::size_t d2, double fill = 0.0)
      : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, fill) {}

  std::size_t dim0() const { return d0_; }
  std::size_t dim1() const { return d1_; }
  std::size_t dim2() const { return d2_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * d1_ + j) * d2_ + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * d1_ + j) * d2_ + k];
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t d0_ = 0;
  std::size_t d1_ = 0;
  std::size_t d2_ = 0;
  std::vector<double> data_;
};

// xoshiro256** seeded through splitmix64. The stream is fixed: acceptance
// tests pin seeds, so never swap the generator without bumping every pin.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Box-Muller; always consumes exactly two uniforms.
  double normal(double mean = 0.0, double std = 1.0);

 private:
  std::uint64_t s_[4];
};

/// Mixes several words into one seed; used to derive independent streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

std::vector<double> rng_normal(Rng& rng, std::size_t n, double mean, double std);

Matrix matmul(const Matrix& a, const Matrix& b);
/// y = A x
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
/// y = A^T x
std::vector<double> matvec_t(const Matrix& a, std::span<const double> x);
/// A += alpha * u v^T
void add_outer(Matrix& a, std::span<const double> u, std::span<const double> v, double alpha = 1.0);
double dot(std::span<const double> a, std::span<const double> b);

enum class Unary { relu, relu2, silu, sigmoid, prelu, identity };

double sigmoid(double x);
double apply_unary(Unary op, double x, double slope = 0.0);
/// Derivative of apply_unary. relu' (0) = 0, prelu'(0) = 1.
double unary_grad(Unary op, double x, double slope = 0.0);

std::vector<double> elementwise(Unary op, std::span<const double> x, double slope = 0.0);
std::vector<double> add(std::span<const double> a, std::span<const double> b);
std::vector<double> mul(std::span<const double> a, std::span<const double> b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix mul(const Matrix& a, const Matrix& b);

bool all_finite(std::span<const double> x);

}  // namespace qin
