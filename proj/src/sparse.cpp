#include "pan/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pan/error.hpp"

namespace pan {

SparseMatrix::SparseMatrix(std::size_t n_rows, std::size_t n_cols,
                           std::vector<std::size_t> row_offsets,
                           std::vector<Index> col_indices,
                           std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != n_rows_ + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != values_.size() ||
      col_indices_.size() != values_.size()) {
    fail(ErrorCode::Format, "malformed CSR arrays");
  }
  for (std::size_t r = 0; r < n_rows_; ++r) {
    if (row_offsets_[r] > row_offsets_[r + 1]) {
      fail(ErrorCode::Format, "CSR row offsets must be nondecreasing");
    }
  }
  for (Index c : col_indices_) {
    if (c >= n_cols_) {
      fail(ErrorCode::IndexOutOfRange,
           "column index " + std::to_string(c) + " out of range for " +
               std::to_string(n_cols_) + " columns");
    }
  }
  canonicalize();
}

void SparseMatrix::canonicalize() {
  std::vector<std::size_t> offsets(n_rows_ + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(col_indices_.size());
  vals.reserve(values_.size());
  std::vector<std::size_t> order;
  for (std::size_t r = 0; r < n_rows_; ++r) {
    const std::size_t begin = row_offsets_[r];
    const std::size_t end = row_offsets_[r + 1];
    order.resize(end - begin);
    std::iota(order.begin(), order.end(), begin);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return col_indices_[a] < col_indices_[b];
    });
    for (std::size_t k = 0; k < order.size();) {
      const Index c = col_indices_[order[k]];
      double sum = 0.0;
      for (; k < order.size() && col_indices_[order[k]] == c; ++k) {
        sum += values_[order[k]];
      }
      if (sum != 0.0) {
        cols.push_back(c);
        vals.push_back(sum);
      }
    }
    offsets[r + 1] = cols.size();
  }
  row_offsets_ = std::move(offsets);
  col_indices_ = std::move(cols);
  values_ = std::move(vals);
}

SparseMatrix SparseMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                         std::vector<Triplet> triplets) {
  std::vector<std::size_t> offsets(n_rows + 1, 0);
  for (const auto& t : triplets) {
    if (t.row >= n_rows || t.col >= n_cols) {
      fail(ErrorCode::IndexOutOfRange,
           "triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
               ") out of range");
    }
    ++offsets[t.row + 1];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<Index> cols(triplets.size());
  std::vector<double> vals(triplets.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const auto& t : triplets) {
    const std::size_t pos = cursor[t.row]++;
    cols[pos] = t.col;
    vals[pos] = t.value;
  }
  return SparseMatrix(n_rows, n_cols, std::move(offsets), std::move(cols),
                      std::move(vals));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<double> ones(n, 1.0);
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> diag) {
  const std::size_t n = diag.size();
  std::vector<std::size_t> offsets(n + 1);
  std::vector<Index> cols(n);
  std::iota(offsets.begin(), offsets.end(), std::size_t{0});
  std::iota(cols.begin(), cols.end(), Index{0});
  return SparseMatrix(n, n, std::move(offsets), std::move(cols),
                      std::vector<double>(diag.begin(), diag.end()));
}

double SparseMatrix::at(std::size_t row, std::size_t col) const {
  if (row >= n_rows_ || col >= n_cols_) {
    fail(ErrorCode::IndexOutOfRange, "entry lookup out of range");
  }
  auto cols = row_cols(row);
  auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<Index>(col));
  if (it == cols.end() || *it != col) return 0.0;
  return row_values(row)[static_cast<std::size_t>(it - cols.begin())];
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.n_cols() != b.n_rows()) {
    fail(ErrorCode::ShapeMismatch, "sparse product inner dimensions differ");
  }
  // Gustavson's row-by-row product with a dense accumulator.
  std::vector<double> acc(b.n_cols(), 0.0);
  std::vector<char> occupied(b.n_cols(), 0);
  std::vector<Index> touched;
  std::vector<std::size_t> offsets(a.n_rows() + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    auto a_cols = a.row_cols(r);
    auto a_vals = a.row_values(r);
    for (std::size_t p = 0; p < a_cols.size(); ++p) {
      const double av = a_vals[p];
      auto b_cols = b.row_cols(a_cols[p]);
      auto b_vals = b.row_values(a_cols[p]);
      for (std::size_t q = 0; q < b_cols.size(); ++q) {
        const Index c = b_cols[q];
        if (!occupied[c]) {
          occupied[c] = 1;
          touched.push_back(c);
        }
        acc[c] += av * b_vals[q];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (Index c : touched) {
      if (acc[c] != 0.0) {
        cols.push_back(c);
        vals.push_back(acc[c]);
      }
      acc[c] = 0.0;
      occupied[c] = 0;
    }
    touched.clear();
    offsets[r + 1] = cols.size();
  }
  return SparseMatrix(a.n_rows(), b.n_cols(), std::move(offsets), std::move(cols),
                      std::move(vals));
}

SparseMatrix transpose(const SparseMatrix& m) {
  std::vector<std::size_t> offsets(m.n_cols() + 1, 0);
  for (Index c : m.col_indices()) ++offsets[c + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<Index> cols(m.nnz());
  std::vector<double> vals(m.nnz());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    auto rc = m.row_cols(r);
    auto rv = m.row_values(r);
    for (std::size_t p = 0; p < rc.size(); ++p) {
      const std::size_t pos = cursor[rc[p]]++;
      cols[pos] = static_cast<Index>(r);
      vals[pos] = rv[p];
    }
  }
  return SparseMatrix(m.n_cols(), m.n_rows(), std::move(offsets), std::move(cols),
                      std::move(vals));
}

SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha,
                 double beta) {
  if (a.n_rows() != b.n_rows() || a.n_cols() != b.n_cols()) {
    fail(ErrorCode::ShapeMismatch, "sparse sum operands differ in shape");
  }
  std::vector<std::size_t> offsets(a.n_rows() + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(a.nnz() + b.nnz());
  vals.reserve(a.nnz() + b.nnz());
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    auto ac = a.row_cols(r);
    auto av = a.row_values(r);
    auto bc = b.row_cols(r);
    auto bv = b.row_values(r);
    std::size_t i = 0, j = 0;
    while (i < ac.size() || j < bc.size()) {
      Index c;
      double v;
      if (j == bc.size() || (i < ac.size() && ac[i] < bc[j])) {
        c = ac[i];
        v = alpha * av[i++];
      } else if (i == ac.size() || bc[j] < ac[i]) {
        c = bc[j];
        v = beta * bv[j++];
      } else {
        c = ac[i];
        v = alpha * av[i++] + beta * bv[j++];
      }
      if (v != 0.0) {
        cols.push_back(c);
        vals.push_back(v);
      }
    }
    offsets[r + 1] = cols.size();
  }
  return SparseMatrix(a.n_rows(), a.n_cols(), std::move(offsets), std::move(cols),
                      std::move(vals));
}

SparseMatrix scale(const SparseMatrix& m, std::span<const double> left,
                   std::span<const double> right) {
  if ((!left.empty() && left.size() != m.n_rows()) ||
      (!right.empty() && right.size() != m.n_cols())) {
    fail(ErrorCode::ShapeMismatch, "diagonal scaling length mismatch");
  }
  std::vector<std::size_t> offsets(m.row_offsets().begin(), m.row_offsets().end());
  std::vector<Index> cols(m.col_indices().begin(), m.col_indices().end());
  std::vector<double> vals(m.values().begin(), m.values().end());
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    const double l = left.empty() ? 1.0 : left[r];
    for (std::size_t p = offsets[r]; p < offsets[r + 1]; ++p) {
      vals[p] *= l * (right.empty() ? 1.0 : right[cols[p]]);
    }
  }
  return SparseMatrix(m.n_rows(), m.n_cols(), std::move(offsets), std::move(cols),
                      std::move(vals));
}

std::vector<double> row_sums(const SparseMatrix& m) {
  std::vector<double> sums(m.n_rows(), 0.0);
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    for (double v : m.row_values(r)) sums[r] += v;
  }
  return sums;
}

double symmetry_residual(const SparseMatrix& m) {
  if (m.n_rows() != m.n_cols()) {
    fail(ErrorCode::ShapeMismatch, "symmetry check needs a square matrix");
  }
  const SparseMatrix diff = add(m, transpose(m), 1.0, -1.0);
  double worst = 0.0;
  for (double v : diff.values()) worst = std::max(worst, std::abs(v));
  return worst;
}

}  // namespace pan
