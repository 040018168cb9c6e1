#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "robustnmf/errors.hpp"

namespace robustnmf {

inline constexpr double kDivisionGuard = 1e-12;

// Dense row-major matrix of doubles. Every constructor rejects NaN/Inf, so a
// DenseMatrix held by value is always finite; nonneg_checked additionally
// enforces entrywise nonnegativity.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    check_dims(rows, cols);
    if (!std::isfinite(fill)) throw NumericError("DenseMatrix: non-finite fill value");
  }

  static DenseMatrix from_data(std::size_t rows, std::size_t cols, std::vector<double> data) {
    check_dims(rows, cols);
    if (data.size() != rows * cols) {
      throw ShapeError("DenseMatrix: data length " + std::to_string(data.size()) +
                       " != " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (double v : data) {
      if (!std::isfinite(v)) throw NumericError("DenseMatrix: non-finite entry");
    }
    DenseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.data_ = std::move(data);
    return m;
  }

  static DenseMatrix nonneg_checked(std::size_t rows, std::size_t cols, std::vector<double> data) {
    DenseMatrix m = from_data(rows, cols, std::move(data));
    for (double v : m.data_) {
      if (v < 0.0) throw NumericError("DenseMatrix: negative entry in nonnegative matrix");
    }
    return m;
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  static void check_dims(std::size_t rows, std::size_t cols) {
    if (rows < 1 || cols < 1) throw ShapeError("DenseMatrix: rows and cols must be >= 1");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const EigenRowMajor> eigen_view(const DenseMatrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

inline Eigen::Map<EigenRowMajor> eigen_view(DenseMatrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

// Neumaier compensated summation. Keeps the big reductions (norms, inner
// products in the objective identities) accurate to ~1 ulp independent of
// length, with a fixed association order so results are run-to-run identical.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace detail

// a (m x k) times b (k x n). The product itself is delegated to Eigen; its
// blocked kernels use a fixed association order, so results are deterministic.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()));
  }
  DenseMatrix c(a.rows(), b.cols());
  detail::eigen_view(c).noalias() = detail::eigen_view(a) * detail::eigen_view(b);
  return c;
}

// aT b without materializing the transpose: a (m x k), b (m x n) -> (k x n).
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row counts " + std::to_string(a.rows()) + " vs " +
                     std::to_string(b.rows()));
  }
  DenseMatrix c(a.cols(), b.cols());
  detail::eigen_view(c).noalias() = detail::eigen_view(a).transpose() * detail::eigen_view(b);
  return c;
}

// a bT: a (m x k), b (n x k) -> (m x n).
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: column counts " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()));
  }
  DenseMatrix c(a.rows(), b.rows());
  detail::eigen_view(c).noalias() = detail::eigen_view(a) * detail::eigen_view(b).transpose();
  return c;
}

inline double sum_squares(const DenseMatrix& a) {
  detail::CompensatedSum s;
  for (double v : a.values()) s.add(v * v);
  return s.value();
}

inline double frobenius_norm(const DenseMatrix& a) { return std::sqrt(sum_squares(a)); }

// Entrywise inner product of two same-shape matrices.
inline double dot(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw ShapeError("dot: shape mismatch");
  detail::CompensatedSum s;
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) s.add(pa[i] * pb[i]);
  return s.value();
}

// Median over the flattened entries; even count averages the two central
// order statistics. nth_element gives exact order statistics, so this agrees
// with a sort-based computation exactly.
inline double global_median(const DenseMatrix& a) {
  if (a.empty()) throw ShapeError("global_median: empty matrix");
  std::vector<double> v = a.values();
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return (lo + hi) / 2.0;
}

enum class ElementOp { kAdd, kSub, kMul, kDiv };

// Entrywise binary op. Division clamps the denominator below by
// kDivisionGuard, the same stabilization used in the multiplicative updates.
inline DenseMatrix elementwise(const DenseMatrix& a, const DenseMatrix& b, ElementOp op) {
  if (!a.same_shape(b)) throw ShapeError("elementwise: shape mismatch");
  DenseMatrix c(a.rows(), a.cols());
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const std::size_t n = a.size();
  switch (op) {
    case ElementOp::kAdd:
      for (std::size_t i = 0; i < n; ++i) pc[i] = pa[i] + pb[i];
      break;
    case ElementOp::kSub:
      for (std::size_t i = 0; i < n; ++i) pc[i] = pa[i] - pb[i];
      break;
    case ElementOp::kMul:
      for (std::size_t i = 0; i < n; ++i) pc[i] = pa[i] * pb[i];
      break;
    case ElementOp::kDiv:
      for (std::size_t i = 0; i < n; ++i) {
        const double d = pb[i];
        pc[i] = pa[i] / (std::abs(d) < kDivisionGuard ? std::copysign(kDivisionGuard, d == 0.0 ? 1.0 : d) : d);
      }
      break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(pc[i])) throw NumericError("elementwise: non-finite result");
  }
  return c;
}

}  // namespace robustnmf
