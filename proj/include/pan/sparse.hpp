#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pan {

using Index = std::uint32_t;

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed sparse row matrix of 64-bit reals.
///
/// Every constructed matrix is canonical: column indices strictly increase
/// within each row and no explicit zero is stored. Duplicate (row, col)
/// entries passed to the constructors are summed.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Builds from raw CSR arrays and canonicalizes them. Throws on malformed
  /// offsets or out-of-range column indices.
  SparseMatrix(std::size_t n_rows, std::size_t n_cols,
               std::vector<std::size_t> row_offsets,
               std::vector<Index> col_indices, std::vector<double> values);

  static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                    std::vector<Triplet> triplets);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix diagonal(std::span<const double> diag);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const Index> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const Index> row_cols(std::size_t row) const noexcept {
    return {col_indices_.data() + row_offsets_[row],
            row_offsets_[row + 1] - row_offsets_[row]};
  }
  std::span<const double> row_values(std::size_t row) const noexcept {
    return {values_.data() + row_offsets_[row],
            row_offsets_[row + 1] - row_offsets_[row]};
  }

  /// Entry lookup by binary search within the row; 0 when not stored.
  double at(std::size_t row, std::size_t col) const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  void canonicalize();

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);
SparseMatrix transpose(const SparseMatrix& m);

// alpha * a + beta * b
SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha = 1.0,
                 double beta = 1.0);

// diag(left) * m * diag(right); an empty span means the identity on that side.
SparseMatrix scale(const SparseMatrix& m, std::span<const double> left,
                   std::span<const double> right);

std::vector<double> row_sums(const SparseMatrix& m);

/// Largest |m_ij - m_ji|; requires a square matrix.
double symmetry_residual(const SparseMatrix& m);

}  // namespace pan
