#include "pan/dense.hpp"

#include <algorithm>
#include <cmath>

#include "pan/error.hpp"

namespace pan {

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorCode::ShapeMismatch, std::string(op) + ": operand shapes differ");
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorCode::ShapeMismatch, "dense buffer size does not match shape");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorCode::ShapeMismatch, "matmul: inner dimensions differ");
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    fail(ErrorCode::ShapeMismatch, "matmul_tn: row counts differ");
  }
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    fail(ErrorCode::ShapeMismatch, "matmul_nt: column counts differ");
  }
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto b_row = b.row(j);
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a_row[k] * b_row[k];
      out(i, j) = sum;
    }
  }
  return out;
}

void spmm_accumulate(const SparseMatrix& s, const DenseMatrix& x, double alpha,
                     DenseMatrix& out) {
  if (s.n_cols() != x.rows() || out.rows() != s.n_rows() || out.cols() != x.cols()) {
    fail(ErrorCode::ShapeMismatch, "spmm: operand shapes differ");
  }
  for (std::size_t r = 0; r < s.n_rows(); ++r) {
    auto cols = s.row_cols(r);
    auto vals = s.row_values(r);
    auto out_row = out.row(r);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      const double v = alpha * vals[p];
      auto x_row = x.row(cols[p]);
      for (std::size_t j = 0; j < x.cols(); ++j) out_row[j] += v * x_row[j];
    }
  }
}

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& x) {
  DenseMatrix out(s.n_rows(), x.cols());
  spmm_accumulate(s, x, 1.0, out);
  return out;
}

DenseMatrix spmm_tn(const SparseMatrix& s, const DenseMatrix& x) {
  if (s.n_rows() != x.rows()) {
    fail(ErrorCode::ShapeMismatch, "spmm_tn: row counts differ");
  }
  DenseMatrix out(s.n_cols(), x.cols());
  for (std::size_t r = 0; r < s.n_rows(); ++r) {
    auto cols = s.row_cols(r);
    auto vals = s.row_values(r);
    auto x_row = x.row(r);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      auto out_row = out.row(cols[p]);
      for (std::size_t j = 0; j < x.cols(); ++j) out_row[j] += vals[p] * x_row[j];
    }
  }
  return out;
}

void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y) {
  require_same_shape(x, y, "axpy");
  auto xs = x.data();
  auto ys = y.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] += alpha * xs[i];
}

double frobenius_dot(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "frobenius_dot");
  auto as = a.data();
  auto bs = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < as.size(); ++i) sum += as[i] * bs[i];
  return sum;
}

void scale_rows_inplace(DenseMatrix& m, std::span<const double> d) {
  if (d.size() != m.rows()) {
    fail(ErrorCode::ShapeMismatch, "row scaling length mismatch");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (double& v : m.row(r)) v *= d[r];
  }
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  auto as = a.data();
  auto bs = b.data();
  for (std::size_t i = 0; i < as.size(); ++i) {
    worst = std::max(worst, std::abs(as[i] - bs[i]));
  }
  return worst;
}

DenseMatrix to_dense(const SparseMatrix& s) {
  DenseMatrix out(s.n_rows(), s.n_cols());
  for (std::size_t r = 0; r < s.n_rows(); ++r) {
    auto cols = s.row_cols(r);
    auto vals = s.row_values(r);
    for (std::size_t p = 0; p < cols.size(); ++p) out(r, cols[p]) = vals[p];
  }
  return out;
}

}  // namespace pan
