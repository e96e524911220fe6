#include <doctest.h>

#include <random>

#include "support.hpp"

using namespace pan;
using testing::error_of;

TEST_CASE("triplets are summed, sorted and stripped of zeros") {
  auto m = SparseMatrix::from_triplets(
      2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 0, 0.0}, {0, 1, 3.0}, {1, 2, -1.0}, {1, 1, 4.0}});
  CHECK(m.nnz() == 2);
  CHECK(m.at(0, 1) == 5.0);
  CHECK(m.at(1, 1) == 4.0);
  CHECK(m.at(1, 2) == 0.0);
  CHECK(m.row_cols(0).size() == 1);
}

TEST_CASE("canonicalization is idempotent") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    auto m = testing::random_sparse(7, 9, 0.4, rng);
    SparseMatrix again(m.n_rows(), m.n_cols(),
                       {m.row_offsets().begin(), m.row_offsets().end()},
                       {m.col_indices().begin(), m.col_indices().end()},
                       {m.values().begin(), m.values().end()});
    CHECK(again == m);
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
      auto c = m.row_cols(r);
      for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i - 1] < c[i]);
      for (double v : m.row_values(r)) CHECK(v != 0.0);
    }
  }
}

TEST_CASE("raw CSR arrays are validated") {
  CHECK(error_of([] { SparseMatrix(2, 2, {0, 1}, {0}, {1.0}); }) != ErrorCode{});
  CHECK(error_of([] { SparseMatrix(2, 2, {0, 2, 1}, {0, 1}, {1.0, 1.0}); }) != ErrorCode{});
  CHECK(error_of([] { SparseMatrix(1, 2, {0, 1}, {5}, {1.0}); }) == ErrorCode::IndexOutOfRange);
  CHECK(error_of([] { SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}); }) ==
        ErrorCode::IndexOutOfRange);
}

TEST_CASE("sparse algebra agrees with dense arithmetic") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    auto a = testing::random_sparse(6, 5, 0.4, rng);
    auto b = testing::random_sparse(5, 7, 0.4, rng);
    auto c = testing::random_sparse(6, 5, 0.4, rng);
    auto da = testing::to_rows(a), db = testing::to_rows(b), dc = testing::to_rows(c);

    CHECK(testing::max_abs_diff(testing::to_rows(multiply(a, b)), testing::dense_mul(da, db)) <
          1e-14);

    auto at = testing::to_rows(transpose(a));
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 5; ++j) CHECK(at[j][i] == da[i][j]);

    auto sum = testing::to_rows(add(a, c, 2.0, -0.5));
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        CHECK(sum[i][j] == doctest::Approx(2.0 * da[i][j] - 0.5 * dc[i][j]).epsilon(1e-14));

    std::vector<double> left{1, 2, 3, 4, 5, 6}, right{-1, 0.5, 2, 0, 3};
    auto sc = testing::to_rows(scale(a, left, right));
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 5; ++j) CHECK(sc[i][j] == doctest::Approx(left[i] * da[i][j] * right[j]).epsilon(1e-15));

    auto rs = row_sums(a);
    for (std::size_t i = 0; i < 6; ++i) {
      double s = 0.0;
      for (double v : da[i]) s += v;
      CHECK(rs[i] == doctest::Approx(s).epsilon(1e-14));
    }
  }
  CHECK(error_of([] { multiply(SparseMatrix::identity(2), SparseMatrix::identity(3)); }) ==
        ErrorCode::ShapeMismatch);
}

TEST_CASE("symmetry residual") {
  auto m = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 0.75}});
  CHECK(symmetry_residual(m) == 0.25);
  CHECK(symmetry_residual(SparseMatrix::identity(4)) == 0.0);
}

TEST_CASE("dense products and sparse-dense products") {
  std::mt19937_64 rng(3);
  auto a = testing::random_dense(4, 3, rng), b = testing::random_dense(3, 5, rng);
  auto c = matmul(a, b);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < 3; ++p) s += a(i, p) * b(p, j);
      CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
  auto d = testing::random_dense(4, 5, rng);
  auto tn = matmul_tn(a, d);  // 3 x 5
  auto nt = matmul_nt(d, b);  // 4 x 3
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < 4; ++p) s += a(p, i) * d(p, j);
      CHECK(tn(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < 5; ++p) s += d(i, p) * b(j, p);
      CHECK(nt(i, j) == doctest::Approx(s).epsilon(1e-14));
    }

  auto s = testing::random_sparse(4, 4, 0.5, rng);
  auto x = testing::random_dense(4, 3, rng);
  CHECK(max_abs_diff(spmm(s, x), matmul(to_dense(s), x)) < 1e-14);
  CHECK(max_abs_diff(spmm_tn(s, x), matmul_tn(to_dense(s), x)) < 1e-14);
  DenseMatrix acc = x;
  spmm_accumulate(s, x, 2.0, acc);
  auto expect = x;
  axpy(2.0, matmul(to_dense(s), x), expect);
  CHECK(max_abs_diff(acc, expect) < 1e-14);
  CHECK(frobenius_dot(x, x) > 0.0);
  CHECK(error_of([&] { matmul(a, a); }) == ErrorCode::ShapeMismatch);
}
