#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pan/dense.hpp"
#include "pan/error.hpp"
#include "pan/graph.hpp"
#include "pan/met.hpp"
#include "pan/nn.hpp"
#include "pan/sparse.hpp"

namespace testing {

using Dense = std::vector<std::vector<double>>;

template <class F>
pan::ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const pan::Error& e) {
    return e.code();
  }
  return static_cast<pan::ErrorCode>(0);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline pan::Graph complete_graph(std::size_t n) {
  std::vector<pan::Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e.push_back({i, j});
  return pan::build_csr(n, e);
}

inline pan::Graph path_graph(std::size_t n) {
  std::vector<pan::Edge> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return pan::build_csr(n, e);
}

inline pan::Graph ring_graph(std::size_t n) {
  std::vector<pan::Edge> e;
  for (std::size_t i = 0; i < n; ++i) e.push_back({i, (i + 1) % n});
  return pan::build_csr(n, e);
}

inline std::size_t grid_id(std::size_t r, std::size_t c, std::size_t cols) { return r * cols + c; }

inline pan::Graph grid_graph(std::size_t rows, std::size_t cols) {
  std::vector<pan::Edge> e;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) e.push_back({grid_id(r, c, cols), grid_id(r, c + 1, cols)});
      if (r + 1 < rows) e.push_back({grid_id(r, c, cols), grid_id(r + 1, c, cols)});
    }
  return pan::build_csr(rows * cols, e);
}

// Random spanning tree plus extra edges with probability p: always connected.
inline pan::Graph random_connected_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<pan::Edge> e;
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    e.push_back({pick(rng), i});
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < p) e.push_back({i, j});
  return pan::build_csr(n, e);
}

// The generated suite: assorted families plus random connected graphs, all
// connected and at most 12 nodes.
inline std::vector<pan::Graph> oracle_graph_suite(std::size_t random_count = 50) {
  std::vector<pan::Graph> out;
  for (std::size_t n = 2; n <= 6; ++n) out.push_back(complete_graph(n));
  for (std::size_t n = 2; n <= 12; n += 2) out.push_back(path_graph(n));
  for (std::size_t n = 3; n <= 12; n += 3) out.push_back(ring_graph(n));
  out.push_back(grid_graph(3, 4));
  {
    std::vector<pan::Edge> star;
    for (std::size_t i = 1; i < 9; ++i) star.push_back({0, i});
    out.push_back(pan::build_csr(9, star));
  }
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(3, 12);
  std::uniform_real_distribution<double> dens(0.05, 0.6);
  for (std::size_t i = 0; i < random_count; ++i)
    out.push_back(random_connected_graph(size(rng), dens(rng), rng));
  return out;
}

inline Dense dense_adjacency(const pan::Graph& g) {
  const std::size_t n = g.n_nodes();
  Dense a(n, std::vector<double>(n, 0.0));
  const auto& m = g.adjacency();
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : m.row_cols(i)) a[i][j] = 1.0;
  return a;
}

inline Dense dense_identity(std::size_t n) {
  Dense a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
  return a;
}

inline Dense dense_mul(const Dense& a, const Dense& b) {
  const std::size_t n = a.size(), m = b.empty() ? 0 : b[0].size(), k = b.size();
  Dense c(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][p] * b[p][j];
  return c;
}

inline Dense to_rows(const pan::SparseMatrix& s) {
  Dense a(s.n_rows(), std::vector<double>(s.n_cols(), 0.0));
  for (std::size_t i = 0; i < s.n_rows(); ++i) {
    auto cols = s.row_cols(i);
    auto vals = s.row_values(i);
    for (std::size_t t = 0; t < cols.size(); ++t) a[i][cols[t]] = vals[t];
  }
  return a;
}

inline double max_abs_diff(const Dense& a, const Dense& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) d = std::max(d, std::abs(a[i][j] - b[i][j]));
  return d;
}

// Walks of every length from each node by depth-first enumeration; counts[n][i][j].
inline std::vector<std::vector<std::vector<std::uint64_t>>> dfs_walk_counts(
    const pan::Graph& g, std::size_t max_length) {
  const std::size_t n = g.n_nodes();
  std::vector<std::vector<std::vector<std::uint64_t>>> counts(
      max_length + 1, std::vector<std::vector<std::uint64_t>>(n, std::vector<std::uint64_t>(n, 0)));
  const auto& adj = g.adjacency();
  std::function<void(std::size_t, std::size_t, std::size_t)> walk =
      [&](std::size_t start, std::size_t at, std::size_t len) {
        ++counts[len][start][at];
        if (len == max_length) return;
        for (auto nb : adj.row_cols(at)) walk(start, nb, len + 1);
      };
  for (std::size_t s = 0; s < n; ++s) walk(s, s, 0);
  return counts;
}

inline std::vector<std::size_t> bfs_distances(const pan::Graph& g, std::size_t from) {
  const std::size_t n = g.n_nodes();
  std::vector<std::size_t> dist(n, SIZE_MAX);
  std::vector<std::size_t> queue{from};
  dist[from] = 0;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    auto u = queue[h];
    for (auto v : g.adjacency().row_cols(u))
      if (dist[v] == SIZE_MAX) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
  return dist;
}

// Cyclic Jacobi rotations; returns eigenvalues (unsorted) and eigenvectors as columns.
inline std::pair<std::vector<double>, Dense> jacobi_eigen(Dense a) {
  const std::size_t n = a.size();
  Dense v = dense_identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) vals[i] = a[i][i];
  return {vals, v};
}

inline pan::DenseMatrix random_dense(std::size_t r, std::size_t c, std::mt19937_64& rng,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  pan::DenseMatrix m(r, c);
  for (auto& x : m.data()) x = u(rng);
  return m;
}

inline pan::SparseMatrix random_sparse(std::size_t r, std::size_t c, double density,
                                       std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0), v(lo, hi);
  std::vector<pan::Triplet> t;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (u(rng) < density) t.push_back({pan::Index(i), pan::Index(j), v(rng)});
  return pan::SparseMatrix::from_triplets(r, c, std::move(t));
}

inline pan::Propagator make_propagator(const pan::Graph& g, int method, std::size_t cutoff,
                                       std::vector<double> k, bool trainable = false) {
  pan::PropagatorConfig cfg;
  cfg.method = method;
  cfg.cutoff = cutoff;
  cfg.weights = pan::EnergyForm::explicit_weights(std::move(k));
  cfg.trainable_k = trainable;
  return pan::build_propagator(g, cfg);
}

// Row-sum residual max_i |sum_j m_ij - 1|.
inline double row_stochastic_residual(const pan::SparseMatrix& m) {
  double r = 0.0;
  for (double s : pan::row_sums(m)) r = std::max(r, std::abs(s - 1.0));
  return r;
}

// ---- full-model gradient check -------------------------------------------

struct GradCheckInstance {
  pan::SparseMatrix features;
  std::vector<std::int32_t> labels;
  std::vector<std::uint8_t> mask;
  pan::Propagator prop;
  pan::ModelParams params;
};

inline GradCheckInstance make_grad_instance(int method, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = 10, f = 4, h = 5, c = 3, cutoff = 2;
  pan::Graph g = random_connected_graph(n, 0.3, rng);
  std::uniform_real_distribution<double> pos(0.2, 1.0);
  std::vector<double> k(cutoff + 1);
  for (auto& x : k) x = pos(rng);
  pan::Propagator prop = make_propagator(g, method, cutoff, k, true);
  pan::Rng prng(seed);
  pan::ModelParams params = pan::init_model(f, h, c, k, true, prng);
  for (auto& x : params.k2) x = pos(rng);
  std::vector<std::int32_t> labels(n);
  std::vector<std::uint8_t> mask(n, 0);
  std::uniform_int_distribution<int> cls(0, int(c) - 1);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = cls(rng);
    mask[i] = (i % 3 != 2);
  }
  return {random_sparse(n, f, 0.6, rng, 0.0, 1.0), labels, mask, prop, params};
}

inline double model_loss(const GradCheckInstance& in, const pan::ModelParams& p) {
  auto pass = pan::model_forward(p, in.features, in.prop, 0.0, nullptr);
  return pan::softmax_cross_entropy(pass.logits, in.labels, in.mask).loss;
}

// Largest tensor-wise relative error ||analytic - fd|| / max(||analytic||, ||fd||).
inline double model_gradient_error(GradCheckInstance& in, double step = 1e-6) {
  auto pass = pan::model_forward(in.params, in.features, in.prop, 0.0, nullptr);
  auto loss = pan::softmax_cross_entropy(pass.logits, in.labels, in.mask);
  pan::ModelGrads g = pan::model_backward(pass, loss.d_logits);

  double worst = 0.0;
  auto check = [&](std::span<double> values, std::span<const double> analytic) {
    double num = 0.0, na = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = model_loss(in, in.params);
      values[i] = saved - step;
      const double down = model_loss(in, in.params);
      values[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      num += (fd - analytic[i]) * (fd - analytic[i]);
      na += analytic[i] * analytic[i];
      nf += fd * fd;
    }
    const double denom = std::sqrt(std::max(na, nf));
    if (denom > 0.0) worst = std::max(worst, std::sqrt(num) / denom);
  };
  check(in.params.w1.data(), g.w1.data());
  check(in.params.w2.data(), g.w2.data());
  check(in.params.k1, g.k1);
  check(in.params.k2, g.k2);
  return worst;
}

}  // namespace testing
