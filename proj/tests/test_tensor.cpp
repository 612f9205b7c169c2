#include <doctest.h>

#include "oracles.hpp"
#include "regnet/error.hpp"
#include "regnet/rng.hpp"
#include "regnet/tensor.hpp"

using namespace regnet;

TEST_SUITE("tensor") {

TEST_CASE("matmul small cases") {
  CHECK(matmul(Tensor::identity(2), Tensor::column({1, 2})) == Tensor::column({1, 2}));
  CHECK(matmul(Tensor::from_rows({{1, 2}, {3, 4}}), Tensor::column({0, 1})) ==
        Tensor::column({2, 4}));
  CHECK_THROWS_AS(matmul(Tensor(2, 3), Tensor(2, 3)), ShapeError);
}

TEST_CASE("matmul agrees with triple loop") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const Tensor a = Tensor::random_normal(5, 3, rng);
    const Tensor b = Tensor::random_normal(3, 4, rng);
    const auto ref = oracle::matmul(oracle::to_matrix(a), oracle::to_matrix(b));
    CHECK(oracle::max_abs_diff(matmul(a, b), ref) < 1e-12);
    CHECK(oracle::max_abs_diff(matmul_tn(transpose(a), b), ref) < 1e-12);
    CHECK(oracle::max_abs_diff(matmul_nt(a, transpose(b)), ref) < 1e-12);
  }
}

TEST_CASE("matmul is associative") {
  Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    const Tensor a = Tensor::random_normal(4, 6, rng);
    const Tensor b = Tensor::random_normal(6, 3, rng);
    const Tensor c = Tensor::random_normal(3, 5, rng);
    const Tensor left = matmul(matmul(a, b), c);
    const Tensor right = matmul(a, matmul(b, c));
    CHECK(frobenius_norm(left - right) <= 1e-10 * frobenius_norm(left));
  }
}

TEST_CASE("transpose is an exact involution") {
  Rng rng(13);
  const Tensor a = Tensor::random_normal(7, 3, rng);
  CHECK(transpose(transpose(a)) == a);
  CHECK(transpose(a).rows() == 3);
}

TEST_CASE("solve_spd") {
  const Tensor b = Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}});
  CHECK(solve_spd(Tensor::identity(3), b) == b);
  const Tensor x = solve_spd(Tensor::from_rows({{2, 0}, {0, 4}}), Tensor::column({2, 8}));
  CHECK(oracle::max_abs_diff(x, {{1}, {2}}) < 1e-15);

  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const Tensor g = Tensor::random_normal(5, 5, rng);
    const Tensor a = matmul_nt(g, g) + Tensor::identity(5) * 0.1;
    const Tensor rhs = Tensor::random_normal(5, 3, rng);
    const Tensor sol = solve_spd(a, rhs);
    CHECK(frobenius_norm(matmul(a, sol) - rhs) / frobenius_norm(rhs) < 1e-10);
  }
}

TEST_CASE("solve_spd residual at condition number 1e6") {
  Rng rng(15);
  for (int t = 0; t < 20; ++t) {
    // Orthogonal Q from Gram-Schmidt, eigenvalues log-spaced over six decades.
    Tensor q = Tensor::random_normal(6, 6, rng);
    for (std::size_t j = 0; j < 6; ++j) {
      Tensor v = q.col(j);
      for (std::size_t i = 0; i < j; ++i) v -= q.col(i) * dot(q.col(i), v);
      q.set_col(j, v * (1.0 / l2_norm(v)));
    }
    Tensor d(6, 6);
    for (std::size_t i = 0; i < 6; ++i) d(i, i) = std::pow(10.0, -6.0 * static_cast<double>(i) / 5.0);
    const Tensor a = matmul_nt(matmul(q, d), q);
    const Tensor rhs = Tensor::random_normal(6, 2, rng);
    CHECK(frobenius_norm(matmul(a, solve_spd(a, rhs)) - rhs) <= 1e-9 * frobenius_norm(rhs));
  }
}

TEST_CASE("cholesky names the failing pivot") {
  const Tensor a = Tensor::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, -1}});
  try {
    cholesky(a);
    FAIL("expected ConditioningError");
  } catch (const ConditioningError& e) {
    CHECK(e.pivot() == 2);
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
  CHECK_THROWS_AS(solve_spd(Tensor(2, 2), Tensor(2, 1)), ConditioningError);
}

TEST_CASE("norms") {
  CHECK(frobenius_norm_sq(Tensor(3, 2)) == 0.0);
  CHECK(frobenius_norm_sq(Tensor::column({3, 4})) == 25.0);
  CHECK(l2_norm(Tensor::column({0, 0, 0})) == 0.0);
  CHECK(l2_norm(Tensor::column({3, 4})) == 5.0);
  CHECK_THROWS_AS(l2_norm(Tensor(2, 2)), ShapeError);

  Rng rng(16);
  for (int t = 0; t < 20; ++t) {
    const Tensor a = Tensor::random_normal(4, 4, rng);
    CHECK(std::abs(frobenius_norm_sq(a) - oracle::sum_of_squares(a)) < 1e-12);
    const Tensor v = Tensor::random_normal(6, 1, rng);
    CHECK(std::abs(l2_norm(v) - std::sqrt(frobenius_norm_sq(v))) < 1e-12);
  }
}

TEST_CASE("elementwise and stacking") {
  const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  const Tensor b = Tensor::from_rows({{5, 6}, {7, 8}});
  CHECK(a + b == Tensor::from_rows({{6, 8}, {10, 12}}));
  CHECK(b - a == Tensor::from_rows({{4, 4}, {4, 4}}));
  CHECK(a * 2.0 == Tensor::from_rows({{2, 4}, {6, 8}}));
  CHECK(hadamard(a, b) == Tensor::from_rows({{5, 12}, {21, 32}}));
  CHECK(outer(Tensor::column({1, 2}), Tensor::column({3, 4, 5})) ==
        Tensor::from_rows({{3, 4, 5}, {6, 8, 10}}));
  const Tensor blocks[] = {a, b};
  CHECK(hstack(blocks) == Tensor::from_rows({{1, 2, 5, 6}, {3, 4, 7, 8}}));
  CHECK(vstack(blocks) == Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}, {7, 8}}));
  CHECK(a.cols_range(1, 1) == Tensor::column({2, 4}));
  CHECK_THROWS_AS(a + Tensor(3, 2), ShapeError);
  CHECK_THROWS_AS(Tensor(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST_CASE("seeded random fill is deterministic") {
  Rng r1(5), r2(5);
  CHECK(Tensor::random_normal(3, 4, r1) == Tensor::random_normal(3, 4, r2));
  CHECK(Tensor::random_uniform(3, 4, r1, -1, 1) == Tensor::random_uniform(3, 4, r2, -1, 1));
}

}  // TEST_SUITE
