#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fedman/errors.hpp"
#include "fedman/linalg.hpp"
#include "support.hpp"

using namespace fedman;
using fedman::testing::gaussian;

namespace {

DenseMatrix random_spd(std::size_t n, std::uint64_t seed, double shift) {
  const DenseMatrix g = gaussian(n + 2, n, seed);
  DenseMatrix a = matmul_tn(g, g);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += shift;
  return a;
}

}  // namespace

TEST_CASE("Jacobi eigendecomposition reconstructs the input") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const std::size_t n = 1 + seed % 9;
    const DenseMatrix a = sym(gaussian(n, n, seed));
    const SymEigResult e = sym_eig_small(a);
    REQUIRE(std::is_sorted(e.eigenvalues.begin(), e.eigenvalues.end()));
    const DenseMatrix& q = e.eigenvectors;
    const DenseMatrix lam = DenseMatrix::diag(e.eigenvalues);
    CHECK(max_abs(matmul(matmul(q, lam), transpose(q)) - a) < 1e-12 * (1 + max_abs(a)));
    CHECK(max_abs(matmul_tn(q, q) - DenseMatrix::identity(n)) < 1e-12);
    // Sign convention: first nonzero component of each eigenvector positive.
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t i = 0;
      while (i < n && std::abs(q(i, j)) < 1e-300) ++i;
      if (i < n) CHECK(q(i, j) > 0.0);
    }
  }
}

TEST_CASE("Jacobi on a diagonal matrix and input checks") {
  const double v[] = {3, -1, 2};
  const SymEigResult e = sym_eig_small(DenseMatrix::diag(v));
  CHECK(e.eigenvalues == std::vector<double>{-1, 2, 3});
  CHECK_THROWS_AS(sym_eig_small(DenseMatrix{{1, 2}, {0, 1}}), InvalidArgument);
  CHECK_THROWS_AS(sym_eig_small(DenseMatrix(2, 3)), InvalidArgument);
}

TEST_CASE("inverse square root") {
  const DenseMatrix a = random_spd(5, 4, 0.5);
  const DenseMatrix b = inv_sqrt_psd(a, 1e-12);
  CHECK(max_abs(matmul(matmul(b, a), b) - DenseMatrix::identity(5)) < 1e-10);
  CHECK_THROWS_AS(inv_sqrt_psd(DenseMatrix{{1, 0}, {0, 0}}, 1e-12), RankDeficient);
}

TEST_CASE("Cholesky solve has a small residual") {
  const DenseMatrix a = random_spd(6, 8, 0.1);
  const DenseMatrix b = gaussian(6, 3, 9);
  const DenseMatrix x = solve_spd(a, b);
  CHECK(max_abs(matmul(a, x) - b) < 1e-10);
  CHECK_THROWS_AS(solve_spd(DenseMatrix{{1, 2}, {2, 1}}, DenseMatrix(2, 1)), RankDeficient);
}

TEST_CASE("Gram-Schmidt gives orthonormal columns spanning the input") {
  const DenseMatrix a = gaussian(12, 4, 3);
  const DenseMatrix q = orthonormalize_columns(a);
  CHECK(max_abs(matmul_tn(q, q) - DenseMatrix::identity(4)) < 1e-13);
  // a lies in span(q): a = q q^T a
  CHECK(max_abs(matmul(q, matmul_tn(q, a)) - a) < 1e-12);
}

TEST_CASE("subspace iteration matches the full Jacobi spectrum") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::size_t d = 15 + seed;
    const DenseMatrix c = random_spd(d, seed, 0.0);
    const std::size_t k = 1 + seed % 4;
    const TopEigenpairs top = top_eigenpairs(c, k);
    const SymEigResult full = sym_eig_small(c);
    for (std::size_t j = 0; j < k; ++j) {
      CHECK(top.eigenvalues[j] == doctest::Approx(full.eigenvalues[d - 1 - j]).epsilon(1e-10));
    }
    const DenseMatrix& v = top.eigenvectors;
    CHECK(max_abs(matmul_tn(v, v) - DenseMatrix::identity(k)) < 1e-10);
  }
}

TEST_CASE("subspace iteration on identity and diagonal inputs") {
  const TopEigenpairs id = top_eigenpairs(DenseMatrix::identity(8), 3);
  for (double l : id.eigenvalues) CHECK(l == doctest::Approx(1.0));
  const double v[] = {1, 5, 2, 4, 3};
  const TopEigenpairs dg = top_eigenpairs(DenseMatrix::diag(v), 2);
  CHECK(dg.eigenvalues[0] == doctest::Approx(5.0));
  CHECK(dg.eigenvalues[1] == doctest::Approx(4.0));
}
