#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "regnet/rng.hpp"

namespace regnet {

// Dense row-major matrix of doubles. Vectors are columns, shape (n, 1).
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  // Nested-list literal, one inner list per row.
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor column(std::initializer_list<double> values);
  static Tensor column(std::span<const double> values);
  static Tensor identity(std::size_t n);
  static Tensor scalar(double value) { return Tensor(1, 1, value); }

  // Entries i.i.d. uniform in [lo, hi).
  static Tensor random_uniform(std::size_t rows, std::size_t cols, Rng& rng,
                               double lo = -1.0, double hi = 1.0);
  static Tensor random_normal(std::size_t rows, std::size_t cols, Rng& rng,
                              double stddev = 1.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_vector() const noexcept { return cols_ == 1; }
  bool is_scalar() const noexcept { return rows_ == 1 && cols_ == 1; }
  bool same_shape(const Tensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Value of a 1x1 tensor.
  double item() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  Tensor col(std::size_t c) const;
  // Columns [begin, begin + count).
  Tensor cols_range(std::size_t begin, std::size_t count) const;
  void set_col(std::size_t c, const Tensor& v);

  bool all_finite() const noexcept;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);
Tensor operator*(double s, Tensor a);

Tensor matmul(const Tensor& a, const Tensor& b);
// a^T b without materializing the transpose.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// a b^T without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor outer(const Tensor& u, const Tensor& v);
Tensor hstack(std::span<const Tensor> blocks);
Tensor vstack(std::span<const Tensor> blocks);

double frobenius_norm_sq(const Tensor& a);
double frobenius_norm(const Tensor& a);
// Euclidean norm of a column vector; rejects matrices with more than one column.
double l2_norm(const Tensor& v);
double sum(const Tensor& a);
double dot(const Tensor& a, const Tensor& b);

// Lower-triangular Cholesky factor L with A = L L^T. Only the lower triangle
// of A is read. Throws ConditioningError naming the first non-positive pivot.
Tensor cholesky(const Tensor& a);

// Solves A X = B for symmetric positive-definite A via Cholesky.
Tensor solve_spd(const Tensor& a, const Tensor& b);
// Same, reusing an existing factor.
Tensor cholesky_solve(const Tensor& lower, const Tensor& b);

}  // namespace regnet
