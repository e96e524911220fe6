#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace pan;
using testing::error_of;
using testing::make_propagator;

namespace {

std::vector<double> random_weights(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = u(rng);
  return w;
}

}  // namespace

TEST_CASE("Boltzmann weights") {
  auto hot = boltzmann_weights(EnergyForm::power_law(1, 1, 1e12), 2);
  for (double w : hot) CHECK(std::abs(w - 1.0) <= 1e-10);
  auto unit = boltzmann_weights(EnergyForm::power_law(1, 1, 1), 2);
  CHECK(unit[0] == 1.0);
  CHECK(unit[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(unit[2] == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(boltzmann_weights(EnergyForm::explicit_weights({0, 0.5, 0.5}), 2) ==
        std::vector<double>{0, 0.5, 0.5});
  CHECK(error_of([] { boltzmann_weights(EnergyForm::power_law(1, 1, 0.0), 2); }) ==
        ErrorCode::InvalidArgument);
  CHECK(error_of([] { boltzmann_weights(EnergyForm::explicit_weights({1, 1}), 2); }) ==
        ErrorCode::InvalidArgument);
  CHECK(error_of([] { EnergyForm::power_law(0.5, 1, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("K3 examples") {
  auto k3 = testing::complete_graph(3);
  auto m1 = make_propagator(k3, 1, 2, {1, 1, 1}).assemble();
  auto m3 = make_propagator(k3, 3, 2, {0, 0.5, 0.5}).assemble();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(m1.at(i, j) == doctest::Approx(i == j ? 3.0 / 7 : 2.0 / 7).epsilon(1e-15));
      CHECK(m3.at(i, j) == doctest::Approx(i == j ? 0.25 : 0.375).epsilon(1e-15));
    }
  auto id = make_propagator(testing::path_graph(5), 3, 0, {1}).assemble();
  CHECK(id == SparseMatrix::identity(5));
}

TEST_CASE("propagator construction errors") {
  auto k3 = testing::complete_graph(3);
  CHECK(error_of([&] { make_propagator(k3, 0, 2, {0, .5, .5}); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([&] { make_propagator(k3, 8, 2, {0, .5, .5}); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([&] { make_propagator(k3, 3, 2, {0, -.5, .5}); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([&] { make_propagator(k3, 3, 2, {0, .5}); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([&] { make_propagator(Graph(), 3, 1, {0, 1}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("row-stochastic and symmetric variants on the generated suite") {
  std::mt19937_64 rng(11);
  for (const auto& g : testing::oracle_graph_suite()) {
    for (std::size_t cutoff : {1u, 2u, 3u}) {
      auto k = random_weights(cutoff + 1, rng);
      double total = 0.0;
      for (double x : k) total += x;
      std::vector<double> simplex = k;
      for (double& x : simplex) x /= total;
      for (int method : {1, 7})
        CHECK(testing::row_stochastic_residual(make_propagator(g, method, cutoff, k).assemble()) <=
              1e-12);
      for (int method : {3, 4})
        CHECK(testing::row_stochastic_residual(
                  make_propagator(g, method, cutoff, simplex).assemble()) <= 1e-12);
      for (int method : {2, 5, 6})
        CHECK(symmetry_residual(make_propagator(g, method, cutoff, k).assemble()) <= 1e-12);
    }
  }
}

TEST_CASE("support matches reachability within L") {
  std::mt19937_64 rng(12);
  for (const auto& g : testing::oracle_graph_suite(20)) {
    const std::size_t cutoff = 2;
    auto counts = testing::dfs_walk_counts(g, cutoff);
    std::vector<double> k{0.3, 0.3, 0.4};
    for (int method = 1; method <= 7; ++method) {
      auto m = make_propagator(g, method, cutoff, k).assemble();
      for (std::size_t i = 0; i < g.n_nodes(); ++i)
        for (std::size_t j = 0; j < g.n_nodes(); ++j) {
          bool reach = false;
          for (std::size_t n = 0; n <= cutoff; ++n) reach = reach || counts[n][i][j] > 0;
          CHECK((m.at(i, j) != 0.0) == reach);
        }
    }
  }
}

TEST_CASE("isolated nodes keep only the k(0) identity share") {
  auto g = build_csr(4, {{0, 1}, {1, 2}});
  auto m = make_propagator(g, 3, 2, {0.2, 0.4, 0.4}).assemble();
  CHECK(m.at(3, 3) == doctest::Approx(0.2));
  CHECK(row_sums(m)[3] == doctest::Approx(0.2));
  CHECK(testing::row_stochastic_residual(
            make_propagator(g, 1, 2, {1, 1, 1}).assemble()) <= 1e-12);
}

TEST_CASE("low-temperature limit approaches the identity") {
  auto check_identity = [](const Propagator& p) {
    return max_abs_diff(to_dense(p.assemble()), DenseMatrix::identity(p.n_nodes()));
  };
  CHECK(check_identity(low_temperature_limit_check(testing::complete_graph(3),
                                                   EnergyForm::power_law(1, 1, 1), 1e-4)) <=
        1e-6);
  CHECK(check_identity(low_temperature_limit_check(testing::path_graph(3),
                                                   EnergyForm::power_law(2, 1, 1), 1e-4)) <=
        1e-6);
  CHECK(error_of([] {
          low_temperature_limit_check(testing::complete_graph(3),
                                      EnergyForm::explicit_weights({1, 1, 1}), 1e-4);
        }) == ErrorCode::InvalidArgument);
  CHECK(error_of([] {
          low_temperature_limit_check(testing::complete_graph(3), EnergyForm::power_law(1, 1, 1),
                                      0.1);
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("regular graphs: partition-normalized equals reweighted per-term") {
  std::mt19937_64 rng(13);
  std::vector<std::pair<Graph, double>> regular;
  for (std::size_t n : {4u, 5u, 8u, 11u}) regular.push_back({testing::ring_graph(n), 2.0});
  for (std::size_t n : {3u, 4u, 6u}) regular.push_back({testing::complete_graph(n), double(n - 1)});
  for (auto& [g, d] : regular)
    for (std::size_t cutoff : {1u, 2u, 3u}) {
      auto w = random_weights(cutoff + 1, rng);
      double z = 0.0;
      for (std::size_t n = 0; n <= cutoff; ++n) z += w[n] * std::pow(d, double(n));
      std::vector<double> k(cutoff + 1);
      for (std::size_t n = 0; n <= cutoff; ++n) k[n] = w[n] * std::pow(d, double(n)) / z;
      auto m1 = to_dense(make_propagator(g, 1, cutoff, w).assemble());
      auto m3 = to_dense(make_propagator(g, 3, cutoff, k).assemble());
      CHECK(max_abs_diff(m1, m3) <= 1e-12);
    }
}

TEST_CASE("grid stencil examples") {
  auto s1 = map_to_grid_stencil(1, {0.3, 0.8});
  CHECK(s1(1, 1) == 0.3);
  CHECK(s1(0, 1) == 0.2);
  CHECK(s1(1, 2) == 0.2);
  CHECK(s1(0, 0) == 0.0);
  const double k0 = 0.1, k1 = 0.4, k2 = 0.5;
  auto s2 = map_to_grid_stencil(2, {k0, k1, k2});
  CHECK(s2(2, 2) == doctest::Approx(k0 + k2 * 4.0 / 16));
  CHECK(s2(1, 2) == doctest::Approx(k1 / 4));
  CHECK(s2(1, 1) == doctest::Approx(k2 * 2.0 / 16));
  CHECK(s2(0, 2) == doctest::Approx(k2 / 16));
  CHECK(s2(0, 0) == 0.0);
  auto z = map_to_grid_stencil(3, {0, 0, 0, 0});
  for (double v : z.data()) CHECK(v == 0.0);
  CHECK(error_of([] { map_to_grid_stencil(4, {0, 0, 0, 0, 1}); }) == ErrorCode::GuardExceeded);
}

TEST_CASE("per-term propagator on a grid equals stencil convolution at interior nodes") {
  std::mt19937_64 rng(14);
  const std::size_t rows = 9, cols = 10;
  auto g = testing::grid_graph(rows, cols);
  for (std::size_t cutoff = 1; cutoff <= 3; ++cutoff) {
    auto k = random_weights(cutoff + 1, rng);
    auto p = make_propagator(g, 3, cutoff, k);
    auto x = testing::random_dense(rows * cols, 2, rng);
    auto y = p.apply(x);
    auto stencil = map_to_grid_stencil(cutoff, k);
    const long L = long(cutoff);
    double worst = 0.0;
    for (long r = L; r < long(rows) - L; ++r)
      for (long c = L; c < long(cols) - L; ++c)
        for (std::size_t ch = 0; ch < 2; ++ch) {
          double conv = 0.0;
          for (long dy = -L; dy <= L; ++dy)
            for (long dx = -L; dx <= L; ++dx)
              conv += stencil(L + dy, L + dx) * x(testing::grid_id(r + dy, c + dx, cols), ch);
          worst = std::max(worst, std::abs(conv - y(testing::grid_id(r, c, cols), ch)));
        }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("L=1 symmetric variant with k=[0,1] is exactly the GCN propagator") {
  std::mt19937_64 rng(15);
  for (const auto& g : testing::oracle_graph_suite(20)) {
    auto m = make_propagator(g, 5, 1, {0, 1}).assemble();
    const auto deg = g.degrees();
    std::vector<double> inv_sqrt(deg.size());
    for (std::size_t i = 0; i < deg.size(); ++i) inv_sqrt[i] = std::pow(double(deg[i] + 1), -0.5);
    std::size_t expected_nnz = 0;
    bool exact = true;
    for (std::size_t i = 0; i < g.n_nodes(); ++i)
      for (std::size_t j = 0; j < g.n_nodes(); ++j) {
        const double a = (i == j) ? 1.0 : g.adjacency().at(i, j);
        if (a == 0.0) continue;
        ++expected_nnz;
        exact = exact && (m.at(i, j) == a * inv_sqrt[i] * inv_sqrt[j]);
      }
    CHECK(exact);
    CHECK(m.nnz() == expected_nnz);
  }
}

TEST_CASE("high-temperature operator") {
  auto k3 = high_temperature_propagator(testing::complete_graph(3)).to_dense();
  auto p2 = high_temperature_propagator(testing::path_graph(2)).to_dense();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(std::abs(k3(i, j) - ((i == j ? 1.0 : 0.0) + 1.0 / 3)) <= 1e-10);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(std::abs(p2(i, j) - ((i == j ? 1.0 : 0.0) + 0.5)) <= 1e-10);
  for (const auto& g : testing::oracle_graph_suite(10)) {
    auto op = high_temperature_propagator(g);
    DenseMatrix psi(g.n_nodes(), 1, op.vector());
    auto out = op.apply(psi);
    for (std::size_t i = 0; i < g.n_nodes(); ++i) CHECK(std::abs(out(i, 0) - 2 * psi(i, 0)) <= 1e-10);
  }
}

TEST_CASE("re-weighting, transpose application and fusion agree with the assembled matrix") {
  std::mt19937_64 rng(16);
  auto g = testing::random_connected_graph(11, 0.3, rng);
  auto x = testing::random_dense(11, 3, rng);
  for (int method = 1; method <= 7; ++method) {
    auto p = make_propagator(g, method, 3, {0.4, 0.3, 0.2, 0.1}).with_weights({0.1, 0.5, 0.3, 0.2});
    auto m = to_dense(p.assemble());
    auto fresh = to_dense(make_propagator(g, method, 3, {0.1, 0.5, 0.3, 0.2}).assemble());
    CHECK(max_abs_diff(m, fresh) <= 1e-14);
    CHECK(max_abs_diff(p.apply(x), matmul(m, x)) <= 1e-13);
    CHECK(max_abs_diff(p.apply_transpose(x), matmul_tn(m, x)) <= 1e-13);
    CHECK(max_abs_diff(p.fused().apply(x), p.apply(x)) <= 1e-13);
    if (method == 1 || method == 2 || method == 7) {
      auto z = p.partition();
      CHECK(z.size() == 11);
      for (double v : z) CHECK(v > 0.0);
    }
  }
}

TEST_CASE("inspect summary") {
  auto k3 = testing::complete_graph(3);
  auto j1 = inspect_propagator(make_propagator(k3, 1, 2, {1, 1, 1}));
  CHECK(j1["assembled"]["density"].get<double>() == 1.0);
  CHECK(j1["assembled"]["row_sum"]["min"].get<double>() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(j1["assembled"]["row_sum"]["max"].get<double>() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(j1["terms"].size() == 3);
  CHECK(j1["normalization"] == "partition_row");
  std::mt19937_64 rng(17);
  auto g = testing::random_connected_graph(12, 0.3, rng);
  auto j5 = inspect_propagator(make_propagator(g, 5, 2, {0, 0.5, 0.5}));
  CHECK(j5["assembled"]["symmetry_residual"].get<double>() <= 1e-12);
}
