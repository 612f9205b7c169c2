#include "regnet/tensor.hpp"

#include <cmath>
#include <sstream>

#include "regnet/error.hpp"

namespace regnet {
namespace {

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() +
                   " and " + b.shape_str());
}

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Tensor: " + std::to_string(data_.size()) +
                     " values do not fill shape (" + std::to_string(rows) + "x" +
                     std::to_string(cols) + ")");
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Tensor::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(data));
}

Tensor Tensor::column(std::initializer_list<double> values) {
  return Tensor(values.size(), 1, std::vector<double>(values));
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::random_uniform(std::size_t rows, std::size_t cols, Rng& rng,
                              double lo, double hi) {
  Tensor t(rows, cols);
  for (auto& x : t.data_) x = rng.uniform(lo, hi);
  return t;
}

Tensor Tensor::random_normal(std::size_t rows, std::size_t cols, Rng& rng,
                             double stddev) {
  Tensor t(rows, cols);
  for (auto& x : t.data_) x = stddev * rng.normal();
  return t;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(" << rows_ << "x" << cols_ << ")";
  return os.str();
}

double Tensor::item() const {
  if (!is_scalar()) throw ShapeError("Tensor::item: expected 1x1, got " + shape_str());
  return data_[0];
}

Tensor Tensor::col(std::size_t c) const { return cols_range(c, 1); }

Tensor Tensor::cols_range(std::size_t begin, std::size_t count) const {
  if (begin + count > cols_) {
    throw ShapeError("Tensor::cols_range: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of " + shape_str());
  }
  Tensor out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, begin + c);
  }
  return out;
}

void Tensor::set_col(std::size_t c, const Tensor& v) {
  if (c >= cols_ || v.rows() != rows_ || v.cols() != 1) {
    throw ShapeError("Tensor::set_col: cannot place " + v.shape_str() + " into column " +
                     std::to_string(c) + " of " + shape_str());
  }
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

bool Tensor::all_finite() const noexcept {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!same_shape(other)) shape_fail("add", *this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (!same_shape(other)) shape_fail("sub", *this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (auto& x : data_) x *= s;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(Tensor a, double s) { return a *= s; }
Tensor operator*(double s, Tensor a) { return a *= s; }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_fail("matmul", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out(m, n);
  const auto ad = a.data();
  const auto bd = b.data();
  auto od = out.data();
  // i-k-j order walks b and out contiguously.
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = od.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ad[i * k + p];
      const double* brow = bd.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) shape_fail("matmul_tn", a, b);
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  Tensor out(m, n);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < m; ++i) {
      const double api = a(p, i);
      for (std::size_t j = 0; j < n; ++j) out(i, j) += api * b(p, j);
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) shape_fail("matmul_nt", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a(i, p) * b(j, p);
      out(i, j) = acc;
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  }
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) shape_fail("hadamard", a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

Tensor outer(const Tensor& u, const Tensor& v) {
  if (!u.is_vector() || !v.is_vector()) shape_fail("outer", u, v);
  Tensor out(u.rows(), v.rows());
  for (std::size_t i = 0; i < u.rows(); ++i) {
    for (std::size_t j = 0; j < v.rows(); ++j) out(i, j) = u[i] * v[j];
  }
  return out;
}

Tensor hstack(std::span<const Tensor> blocks) {
  if (blocks.empty()) return {};
  const std::size_t rows = blocks.front().rows();
  std::size_t cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) shape_fail("hstack", blocks.front(), b);
    cols += b.cols();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < b.cols(); ++c) out(r, offset + c) = b(r, c);
    }
    offset += b.cols();
  }
  return out;
}

Tensor vstack(std::span<const Tensor> blocks) {
  if (blocks.empty()) return {};
  const std::size_t cols = blocks.front().cols();
  std::vector<double> data;
  std::size_t rows = 0;
  for (const auto& b : blocks) {
    if (b.cols() != cols) shape_fail("vstack", blocks.front(), b);
    data.insert(data.end(), b.data().begin(), b.data().end());
    rows += b.rows();
  }
  return Tensor(rows, cols, std::move(data));
}

double frobenius_norm_sq(const Tensor& a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x * x;
  return acc;
}

double frobenius_norm(const Tensor& a) { return std::sqrt(frobenius_norm_sq(a)); }

double l2_norm(const Tensor& v) {
  if (!v.is_vector()) {
    throw ShapeError("l2_norm: expected a column vector, got " + v.shape_str());
  }
  return std::sqrt(frobenius_norm_sq(v));
}

double sum(const Tensor& a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x;
  return acc;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) shape_fail("dot", a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

Tensor cholesky(const Tensor& a) {
  if (a.rows() != a.cols()) {
    throw ShapeError("cholesky: matrix must be square, got " + a.shape_str());
  }
  const std::size_t n = a.rows();
  Tensor l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t p = 0; p < j; ++p) diag -= l(j, p) * l(j, p);
    if (!(diag > 0.0)) {
      throw ConditioningError("cholesky: non-positive pivot " + std::to_string(diag) +
                                  " at index " + std::to_string(j),
                              j);
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = a(i, j);
      for (std::size_t p = 0; p < j; ++p) acc -= l(i, p) * l(j, p);
      l(i, j) = acc / ljj;
    }
  }
  return l;
}

Tensor cholesky_solve(const Tensor& lower, const Tensor& b) {
  const std::size_t n = lower.rows();
  if (b.rows() != n) shape_fail("cholesky_solve", lower, b);
  Tensor x = b;
  const std::size_t m = b.cols();
  // Forward substitution: L y = b.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < i; ++p) {
      const double lip = lower(i, p);
      for (std::size_t c = 0; c < m; ++c) x(i, c) -= lip * x(p, c);
    }
    const double lii = lower(i, i);
    for (std::size_t c = 0; c < m; ++c) x(i, c) /= lii;
  }
  // Back substitution: L^T x = y.
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t p = ii + 1; p < n; ++p) {
      const double lpi = lower(p, ii);
      for (std::size_t c = 0; c < m; ++c) x(ii, c) -= lpi * x(p, c);
    }
    const double lii = lower(ii, ii);
    for (std::size_t c = 0; c < m; ++c) x(ii, c) /= lii;
  }
  return x;
}

Tensor solve_spd(const Tensor& a, const Tensor& b) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) shape_fail("solve_spd", a, b);
  return cholesky_solve(cholesky(a), b);
}

}  // namespace regnet
