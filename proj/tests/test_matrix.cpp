#include <doctest.h>

#include <limits>

#include "fedman/errors.hpp"
#include "fedman/matrix.hpp"
#include "support.hpp"

using namespace fedman;
using fedman::testing::gaussian;
using fedman::testing::naive_product;

TEST_CASE("matmul agrees with the triple-loop reference") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t m = 1 + seed % 7, n = 1 + (seed * 3) % 11, p = 1 + (seed * 5) % 6;
    const DenseMatrix a = gaussian(m, n, seed, 1);
    const DenseMatrix b = gaussian(n, p, seed, 2);
    CHECK(matmul(a, b) == naive_product(a, b));
    CHECK(matmul_tn(transpose(a), b) == naive_product(a, b));
  }
}

TEST_CASE("transpose, dot and norms") {
  const DenseMatrix a{{1, 2, 3}, {4, 5, 6}};
  const DenseMatrix t = transpose(a);
  CHECK(t.rows() == 3);
  CHECK(t(2, 1) == 6);
  CHECK(transpose(t) == a);
  CHECK(dot(a, a) == 91);
  CHECK(frobenius_norm(DenseMatrix{{3, 4}}) == doctest::Approx(5.0));
  CHECK(max_abs(DenseMatrix{{-7, 2}}) == 7);
  const DenseMatrix s = sym(DenseMatrix{{1, 2}, {4, 3}});
  CHECK(s(0, 1) == 3);
  CHECK(s(1, 0) == 3);
}

TEST_CASE("elementwise arithmetic") {
  DenseMatrix y{{1, 1}};
  axpy(2.0, DenseMatrix{{1, 2}}, y);
  CHECK(y == DenseMatrix{{3, 5}});
  CHECK(DenseMatrix{{1, 2}} + DenseMatrix{{3, 4}} == DenseMatrix{{4, 6}});
  CHECK(DenseMatrix{{1, 2}} - DenseMatrix{{3, 4}} == DenseMatrix{{-2, -2}});
  CHECK(2.0 * DenseMatrix{{1, 2}} == DenseMatrix{{2, 4}});
  CHECK(DenseMatrix::eye(3, 2) == DenseMatrix{{1, 0}, {0, 1}, {0, 0}});
  const double v[] = {2, 3};
  CHECK(DenseMatrix::diag(v) == DenseMatrix{{2, 0}, {0, 3}});
}

TEST_CASE("shape and finiteness errors") {
  CHECK_THROWS_AS(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), DimensionMismatch);
  DenseMatrix a(2, 2);
  CHECK_THROWS_AS(a += DenseMatrix(3, 2), DimensionMismatch);
  CHECK_THROWS_AS(DenseMatrix(2, 2, std::vector<double>(3)), DimensionMismatch);
  a(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(a.all_finite());
  CHECK_THROWS_AS(require_finite(a, "a"), NonFiniteValue);
}
