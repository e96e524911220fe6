#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "pan/error.hpp"
#include "pan/sparse.hpp"

namespace pan {

/// Undirected simple graph. The adjacency is symmetric, binary and has an
/// empty diagonal; both constructors enforce this.
class Graph {
 public:
  Graph() = default;

  /// Validates an existing adjacency matrix.
  explicit Graph(SparseMatrix adjacency);

  std::size_t n_nodes() const noexcept { return adjacency_.n_rows(); }
  std::size_t n_edges() const noexcept { return adjacency_.nnz() / 2; }
  const SparseMatrix& adjacency() const noexcept { return adjacency_; }

  std::vector<std::size_t> degrees() const;

 private:
  SparseMatrix adjacency_;
};

using Edge = std::pair<std::size_t, std::size_t>;

/// Symmetrizes and deduplicates `edges`. Throws IndexOutOfRange or SelfLoop.
Graph build_csr(std::size_t n_nodes, const std::vector<Edge>& edges);

/// The list [M^0, M^1, ..., M^L] for a square matrix M.
std::vector<SparseMatrix> matrix_powers(const SparseMatrix& m, std::size_t max_power);

/// [A^0, ..., A^L]; entry (i, j) of A^n counts the length-n walks from i to j.
std::vector<SparseMatrix> matrix_power_terms(const Graph& g, std::size_t max_length);

enum class PathKind { AllWalks, ShortestPaths, SelfAvoiding };

inline constexpr std::size_t kOracleMaxNodes = 12;
inline constexpr std::size_t kOracleMaxLength = 8;

/// Exhaustive enumeration of length-n paths of the given kind. Exponential;
/// refuses graphs above kOracleMaxNodes nodes or lengths above
/// kOracleMaxLength with GuardExceeded.
std::uint64_t count_paths_bruteforce(const Graph& g, std::size_t from, std::size_t to,
                                     std::size_t length, PathKind kind);

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
};

/// Raised when power iteration runs out of iterations; carries the last iterate.
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, EigenPair last, double residual)
      : Error(ErrorCode::NotConverged, what),
        last_(std::move(last)),
        residual_(residual) {}

  const EigenPair& last_iterate() const noexcept { return last_; }
  double residual() const noexcept { return residual_; }

 private:
  EigenPair last_;
  double residual_;
};

/// Dominant eigenpair of a symmetric nonnegative matrix by power iteration
/// from the all-ones vector. The iteration runs on M + I so that bipartite
/// graphs (where -lambda_1 is also an eigenvalue) still converge. Stops once
/// ||M v - lambda v|| <= tol. The eigenvector has unit norm and its first
/// nonzero component is positive.
EigenPair estimate_lambda1(const SparseMatrix& m, double tol = 1e-12,
                           std::size_t max_iters = 100000);

}  // namespace pan
