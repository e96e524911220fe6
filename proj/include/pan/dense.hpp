#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pan/sparse.hpp"

namespace pan {

/// Row-major dense matrix of 64-bit reals.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// a^T b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
// a b^T
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

// s x
DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& x);
// out += alpha * s x
void spmm_accumulate(const SparseMatrix& s, const DenseMatrix& x, double alpha,
                     DenseMatrix& out);
// s^T x, without materializing the transpose
DenseMatrix spmm_tn(const SparseMatrix& s, const DenseMatrix& x);

// y += alpha * x
void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y);

double frobenius_dot(const DenseMatrix& a, const DenseMatrix& b);

// Scales row r by d[r].
void scale_rows_inplace(DenseMatrix& m, std::span<const double> d);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix to_dense(const SparseMatrix& s);

}  // namespace pan
