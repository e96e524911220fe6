#include <doctest.h>

#include <chrono>
#include <cmath>

#include "support.hpp"

using namespace pan;
using testing::error_of;

TEST_CASE("build_csr symmetrizes and deduplicates") {
  auto g = build_csr(3, {{0, 1}, {1, 0}, {1, 2}, {0, 1}});
  CHECK(g.n_nodes() == 3);
  CHECK(g.n_edges() == 2);
  CHECK(g.adjacency().at(1, 0) == 1.0);
  CHECK(g.adjacency().at(2, 1) == 1.0);
  CHECK(g.degrees() == std::vector<std::size_t>{1, 2, 1});
  CHECK(symmetry_residual(g.adjacency()) == 0.0);
}

TEST_CASE("build_csr rejects bad edges") {
  CHECK(error_of([] { build_csr(3, {{0, 3}}); }) == ErrorCode::IndexOutOfRange);
  CHECK(error_of([] { build_csr(3, {{1, 1}}); }) == ErrorCode::SelfLoop);
  CHECK(error_of([] { Graph(SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}})); }) ==
        ErrorCode::InvalidArgument);
  CHECK(error_of([] { Graph(SparseMatrix::from_triplets(2, 2, {{0, 1, 2.0}, {1, 0, 2.0}})); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("walk-count powers on small examples") {
  auto k3 = testing::complete_graph(3);
  auto t = matrix_power_terms(k3, 2);
  REQUIRE(t.size() == 3);
  CHECK(t[0] == SparseMatrix::identity(3));
  CHECK(t[2].at(0, 0) == 2.0);
  CHECK(t[2].at(0, 1) == 1.0);

  auto p3 = testing::path_graph(3);
  auto p = matrix_power_terms(p3, 2);
  CHECK(p[2].at(0, 0) == 1.0);
  CHECK(p[2].at(0, 2) == 1.0);
  CHECK(p[2].at(1, 1) == 2.0);
  CHECK(p[2].at(0, 1) == 0.0);
  CHECK(row_sums(p[2]) == std::vector<double>{2, 2, 2});
}

TEST_CASE("walk counts above 2^53 are refused") {
  // 49^10 > 2^53
  auto k50 = testing::complete_graph(50);
  CHECK(error_of([&] { matrix_power_terms(k50, 10); }) == ErrorCode::GuardExceeded);
  CHECK_NOTHROW(matrix_power_terms(k50, 4));
}

TEST_CASE("powers match depth-first walk enumeration on the generated suite") {
  auto t0 = std::chrono::steady_clock::now();
  auto suite = testing::oracle_graph_suite();
  REQUIRE(suite.size() >= 50);
  std::size_t mismatches = 0;
  for (const auto& g : suite) {
    auto terms = matrix_power_terms(g, 4);
    auto counts = testing::dfs_walk_counts(g, 4);
    for (std::size_t n = 0; n <= 4; ++n) {
      CHECK(symmetry_residual(terms[n]) == 0.0);
      for (std::size_t i = 0; i < g.n_nodes(); ++i)
        for (std::size_t j = 0; j < g.n_nodes(); ++j)
          if (terms[n].at(i, j) != double(counts[n][i][j])) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
  CHECK(testing::seconds_since(t0) < 10.0);
}

TEST_CASE("brute-force path kinds") {
  auto suite = testing::oracle_graph_suite(15);
  for (const auto& g : suite) {
    if (g.n_nodes() > 9) continue;
    auto terms = matrix_power_terms(g, 3);
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
      auto dist = testing::bfs_distances(g, i);
      for (std::size_t j = 0; j < g.n_nodes(); ++j)
        for (std::size_t n = 0; n <= 3; ++n) {
          auto walks = count_paths_bruteforce(g, i, j, n, PathKind::AllWalks);
          auto shortest = count_paths_bruteforce(g, i, j, n, PathKind::ShortestPaths);
          auto simple = count_paths_bruteforce(g, i, j, n, PathKind::SelfAvoiding);
          CHECK(double(walks) == terms[n].at(i, j));
          CHECK(shortest == (dist[j] == n ? walks : 0));
          CHECK(simple <= walks);
          if (n <= 1) CHECK(simple == walks);
        }
    }
  }
  // On a path graph the only self-avoiding path is the geodesic.
  auto p5 = testing::path_graph(5);
  CHECK(count_paths_bruteforce(p5, 0, 2, 2, PathKind::SelfAvoiding) == 1);
  CHECK(count_paths_bruteforce(p5, 0, 2, 4, PathKind::SelfAvoiding) == 0);
  CHECK(count_paths_bruteforce(p5, 0, 2, 4, PathKind::AllWalks) == 3);
  // K4: 0-1-2-0 is a closed walk but not self-avoiding.
  auto k4 = testing::complete_graph(4);
  CHECK(count_paths_bruteforce(k4, 0, 0, 3, PathKind::AllWalks) == 6);
  CHECK(count_paths_bruteforce(k4, 0, 0, 3, PathKind::SelfAvoiding) == 0);
}

TEST_CASE("brute force refuses large inputs") {
  auto big = testing::path_graph(13);
  CHECK(error_of([&] { count_paths_bruteforce(big, 0, 1, 1, PathKind::AllWalks); }) ==
        ErrorCode::GuardExceeded);
  auto k3 = testing::complete_graph(3);
  CHECK(error_of([&] { count_paths_bruteforce(k3, 0, 1, 9, PathKind::AllWalks); }) ==
        ErrorCode::GuardExceeded);
  CHECK(error_of([&] { count_paths_bruteforce(k3, 0, 3, 1, PathKind::AllWalks); }) ==
        ErrorCode::IndexOutOfRange);
}

TEST_CASE("dominant eigenvalue examples") {
  CHECK(estimate_lambda1(testing::complete_graph(3).adjacency()).value ==
        doctest::Approx(2.0).epsilon(1e-10));
  CHECK(estimate_lambda1(testing::path_graph(2).adjacency()).value ==
        doctest::Approx(1.0).epsilon(1e-10));
  auto k5 = estimate_lambda1(testing::complete_graph(5).adjacency());
  CHECK(k5.value == doctest::Approx(4.0).epsilon(1e-10));
  for (double x : k5.vector) CHECK(x == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-10));
}

TEST_CASE("dominant eigenpair agrees with Jacobi rotations") {
  for (const auto& g : testing::oracle_graph_suite()) {
    auto [vals, vecs] = testing::jacobi_eigen(testing::dense_adjacency(g));
    std::size_t top = 0;
    for (std::size_t i = 1; i < vals.size(); ++i)
      if (vals[i] > vals[top]) top = i;
    auto est = estimate_lambda1(g.adjacency());
    CHECK(std::abs(est.value - vals[top]) <= 1e-8);
    double norm = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
      norm += est.vector[i] * est.vector[i];
      dot += est.vector[i] * vecs[i][top];
    }
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(std::abs(dot) - 1.0) <= 1e-8);
    CHECK(est.vector[0] > 0.0);
  }
}

TEST_CASE("bipartite graphs converge and exhausted iterations report the last iterate") {
  CHECK(estimate_lambda1(testing::ring_graph(6).adjacency()).value ==
        doctest::Approx(2.0).epsilon(1e-10));
  CHECK(estimate_lambda1(testing::path_graph(4).adjacency()).value ==
        doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-10));
  try {
    estimate_lambda1(testing::path_graph(8).adjacency(), 1e-12, 2);
    FAIL("expected NotConvergedError");
  } catch (const NotConvergedError& e) {
    CHECK(e.code() == ErrorCode::NotConverged);
    CHECK(e.last_iterate().vector.size() == 8);
    CHECK(e.residual() > 1e-12);
  }
}
