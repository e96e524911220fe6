#include "pan/graph.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace pan {

namespace {

// Walk counts are stored as doubles; they stay exact while row sums are below
// 2^53.
constexpr double kExactIntegerLimit = 9007199254740992.0;

}  // namespace

Graph::Graph(SparseMatrix adjacency) : adjacency_(std::move(adjacency)) {
  if (adjacency_.n_rows() != adjacency_.n_cols()) {
    fail(ErrorCode::InvalidArgument, "adjacency matrix must be square");
  }
  for (std::size_t r = 0; r < adjacency_.n_rows(); ++r) {
    auto cols = adjacency_.row_cols(r);
    auto vals = adjacency_.row_values(r);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (cols[p] == r) {
        fail(ErrorCode::SelfLoop, "adjacency has a self-loop at node " + std::to_string(r));
      }
      if (vals[p] != 1.0) {
        fail(ErrorCode::InvalidArgument, "adjacency entries must be binary");
      }
    }
  }
  if (symmetry_residual(adjacency_) != 0.0) {
    fail(ErrorCode::InvalidArgument, "adjacency matrix is not symmetric");
  }
}

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> deg(n_nodes());
  for (std::size_t r = 0; r < n_nodes(); ++r) deg[r] = adjacency_.row_cols(r).size();
  return deg;
}

Graph build_csr(std::size_t n_nodes, const std::vector<Edge>& edges) {
  std::vector<Triplet> triplets;
  triplets.reserve(2 * edges.size());
  for (const auto& [i, j] : edges) {
    if (i >= n_nodes || j >= n_nodes) {
      fail(ErrorCode::IndexOutOfRange,
           "edge (" + std::to_string(i) + ", " + std::to_string(j) +
               ") out of range for " + std::to_string(n_nodes) + " nodes");
    }
    if (i == j) {
      fail(ErrorCode::SelfLoop, "self-loop at node " + std::to_string(i));
    }
    triplets.push_back({static_cast<Index>(i), static_cast<Index>(j), 1.0});
    triplets.push_back({static_cast<Index>(j), static_cast<Index>(i), 1.0});
  }
  SparseMatrix summed = SparseMatrix::from_triplets(n_nodes, n_nodes, std::move(triplets));
  // Duplicates were summed; collapse them back to 1.
  std::vector<std::size_t> offsets(summed.row_offsets().begin(), summed.row_offsets().end());
  std::vector<Index> cols(summed.col_indices().begin(), summed.col_indices().end());
  std::vector<double> ones(cols.size(), 1.0);
  return Graph(SparseMatrix(n_nodes, n_nodes, std::move(offsets), std::move(cols),
                            std::move(ones)));
}

std::vector<SparseMatrix> matrix_powers(const SparseMatrix& m, std::size_t max_power) {
  if (m.n_rows() != m.n_cols()) {
    fail(ErrorCode::ShapeMismatch, "matrix powers need a square matrix");
  }
  std::vector<SparseMatrix> powers;
  powers.reserve(max_power + 1);
  powers.push_back(SparseMatrix::identity(m.n_rows()));
  for (std::size_t n = 1; n <= max_power; ++n) {
    powers.push_back(multiply(powers.back(), m));
  }
  return powers;
}

std::vector<SparseMatrix> matrix_power_terms(const Graph& g, std::size_t max_length) {
  auto powers = matrix_powers(g.adjacency(), max_length);
  for (const auto& p : powers) {
    for (double s : row_sums(p)) {
      if (s >= kExactIntegerLimit) {
        fail(ErrorCode::GuardExceeded,
             "walk counts exceed the exactly representable range; lower L");
      }
    }
  }
  return powers;
}

namespace {

std::vector<std::size_t> bfs_distances(const Graph& g, std::size_t source) {
  constexpr auto kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(g.n_nodes(), kUnreached);
  std::deque<std::size_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (Index v : g.adjacency().row_cols(u)) {
      if (dist[v] == kUnreached) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

std::uint64_t count_walks(const Graph& g, std::size_t at, std::size_t to,
                          std::size_t remaining, std::vector<char>* visited) {
  if (remaining == 0) return at == to ? 1 : 0;
  std::uint64_t total = 0;
  for (Index next : g.adjacency().row_cols(at)) {
    if (visited != nullptr) {
      if ((*visited)[next]) continue;
      (*visited)[next] = 1;
    }
    total += count_walks(g, next, to, remaining - 1, visited);
    if (visited != nullptr) (*visited)[next] = 0;
  }
  return total;
}

}  // namespace

std::uint64_t count_paths_bruteforce(const Graph& g, std::size_t from, std::size_t to,
                                     std::size_t length, PathKind kind) {
  if (g.n_nodes() > kOracleMaxNodes || length > kOracleMaxLength) {
    fail(ErrorCode::GuardExceeded,
         "brute-force path counting is limited to " + std::to_string(kOracleMaxNodes) +
             " nodes and length " + std::to_string(kOracleMaxLength) +
             "; use matrix_power_terms instead");
  }
  if (from >= g.n_nodes() || to >= g.n_nodes()) {
    fail(ErrorCode::IndexOutOfRange, "path endpoint out of range");
  }
  switch (kind) {
    case PathKind::AllWalks:
      return count_walks(g, from, to, length, nullptr);
    case PathKind::ShortestPaths:
      // Every walk whose length equals the geodesic distance is a geodesic.
      if (bfs_distances(g, from)[to] != length) return 0;
      return count_walks(g, from, to, length, nullptr);
    case PathKind::SelfAvoiding: {
      std::vector<char> visited(g.n_nodes(), 0);
      visited[from] = 1;
      return count_walks(g, from, to, length, &visited);
    }
  }
  return 0;
}

EigenPair estimate_lambda1(const SparseMatrix& m, double tol, std::size_t max_iters) {
  const std::size_t n = m.n_rows();
  if (n == 0 || m.n_cols() != n) {
    fail(ErrorCode::InvalidArgument, "power iteration needs a nonempty square matrix");
  }
  auto apply = [&](const std::vector<double>& v) {
    std::vector<double> out(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      auto cols = m.row_cols(r);
      auto vals = m.row_values(r);
      for (std::size_t p = 0; p < cols.size(); ++p) out[r] += vals[p] * v[cols[p]];
    }
    return out;
  };
  auto normalize = [](std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) fail(ErrorCode::NotConverged, "power iteration collapsed to zero");
    for (double& x : v) x /= norm;
  };

  std::vector<double> v(n, 1.0);
  normalize(v);
  EigenPair pair;
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < max_iters; ++it) {
    const std::vector<double> mv = apply(v);
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < n; ++i) rayleigh += v[i] * mv[i];
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = mv[i] - rayleigh * v[i];
      residual += d * d;
    }
    residual = std::sqrt(residual);
    pair.value = rayleigh;
    pair.vector = v;
    if (residual <= tol) break;
    // Shifted step: (M + I) v.
    for (std::size_t i = 0; i < n; ++i) v[i] += mv[i];
    normalize(v);
  }
  for (double x : pair.vector) {
    if (x != 0.0) {
      if (x < 0.0) {
        for (double& y : pair.vector) y = -y;
      }
      break;
    }
  }
  if (residual > tol) {
    throw NotConvergedError("power iteration did not reach residual " + std::to_string(tol) +
                                " (last " + std::to_string(residual) + ")",
                            pair, residual);
  }
  return pair;
}

}  // namespace pan
