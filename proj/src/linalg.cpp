#include "fedman/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedman/errors.hpp"

namespace fedman {

namespace {

double off_diagonal_mass(const DenseMatrix& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (i != j) acc += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(acc);
}

void require_symmetric(const DenseMatrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InvalidArgument("sym_eig_small: matrix must be square and non-empty");
  }
  const double scale = std::max(1.0, max_abs(a));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * scale) {
        throw InvalidArgument("sym_eig_small: matrix is not symmetric");
      }
    }
  }
}

}  // namespace

SymEigResult sym_eig_small(const DenseMatrix& input, const JacobiOptions& options) {
  require_symmetric(input);
  require_finite(input, "sym_eig_small");
  const std::size_t n = input.rows();
  DenseMatrix a = sym(input);
  DenseMatrix v = DenseMatrix::identity(n);
  const double threshold = options.relative_tolerance * frobenius_norm(a);

  int sweep = 0;
  while (off_diagonal_mass(a) > threshold) {
    if (sweep++ >= options.max_sweeps) {
      throw ConvergenceFailure("sym_eig_small: no convergence after " +
                               std::to_string(options.max_sweeps) + " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that zeroes a(p,q); the smaller root keeps it stable.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  SymEigResult out;
  out.eigenvalues.resize(n);
  out.eigenvectors = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.eigenvalues[j] = a(src, src);
    double sign = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (v(i, src) != 0.0) {
        sign = v(i, src) > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = sign * v(i, src);
  }
  return out;
}

DenseMatrix inv_sqrt_psd(const DenseMatrix& a, double floor) {
  const SymEigResult eig = sym_eig_small(a);
  const double lambda_min = eig.eigenvalues.front();
  if (!(lambda_min >= floor)) {
    throw RankDeficient("inv_sqrt_psd: smallest eigenvalue " + std::to_string(lambda_min) +
                        " below floor " + std::to_string(floor));
  }
  const std::size_t n = a.rows();
  const DenseMatrix& q = eig.eigenvectors;
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < n; ++l) acc += q(i, l) * q(j, l) / std::sqrt(eig.eigenvalues[l]);
      out(i, j) = acc;
    }
  }
  return out;
}

DenseMatrix solve_spd(const DenseMatrix& a, const DenseMatrix& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw DimensionMismatch("solve_spd: shape mismatch");
  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw RankDeficient("solve_spd: matrix is not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  DenseMatrix x = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  return x;
}

DenseMatrix orthonormalize_columns(const DenseMatrix& a) {
  DenseMatrix q = a;
  const std::size_t d = a.rows();
  for (std::size_t j = 0; j < a.cols(); ++j) {
    // Two passes of MGS keep orthogonality at working precision.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < j; ++p) {
        double proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) proj += q(i, p) * q(i, j);
        for (std::size_t i = 0; i < d; ++i) q(i, j) -= proj * q(i, p);
      }
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw RankDeficient("orthonormalize_columns: dependent columns");
    for (std::size_t i = 0; i < d; ++i) q(i, j) /= norm;
  }
  return q;
}

TopEigenpairs top_eigenpairs(const DenseMatrix& c, std::size_t k,
                             const SubspaceIterationOptions& options) {
  const std::size_t d = c.rows();
  if (c.cols() != d) throw InvalidArgument("top_eigenpairs: matrix must be square");
  if (k < 1 || k > d) throw InvalidArgument("top_eigenpairs: need 1 <= k <= d");
  const std::size_t block = std::min(d, k + options.oversampling);

  // Deterministic start: identity columns plus a fixed dense perturbation so
  // the start is not orthogonal to the dominant subspace.
  DenseMatrix q(d, block);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < block; ++j) {
      q(i, j) = (i == j ? 1.0 : 0.0) + 1e-3 * std::sin(1.0 + 3.0 * static_cast<double>(i) +
                                                       7.0 * static_cast<double>(j));
    }
  }
  q = orthonormalize_columns(q);

  TopEigenpairs out;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const DenseMatrix cq = matmul(c, q);
    DenseMatrix h = matmul_tn(q, cq);
    h = sym(h);
    const SymEigResult ritz = sym_eig_small(h);
    // Rotate to Ritz vectors, descending order.
    DenseMatrix w(block, block);
    std::vector<double> values(block);
    for (std::size_t j = 0; j < block; ++j) {
      const std::size_t src = block - 1 - j;
      values[j] = ritz.eigenvalues[src];
      for (std::size_t i = 0; i < block; ++i) w(i, j) = ritz.eigenvectors(i, src);
    }
    const DenseMatrix ritz_vectors = matmul(q, w);
    const DenseMatrix c_ritz = matmul(cq, w);

    const double scale = std::max(std::abs(values.front()), 1e-300);
    bool converged = true;
    for (std::size_t j = 0; j < k && converged; ++j) {
      double r2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double r = c_ritz(i, j) - values[j] * ritz_vectors(i, j);
        r2 += r * r;
      }
      converged = std::sqrt(r2) <= options.residual_tolerance * scale;
    }
    if (converged || block == d) {
      // With a full block the Rayleigh-Ritz step is an exact decomposition.
      out.eigenvalues.assign(values.begin(), values.begin() + static_cast<long>(k));
      out.eigenvectors = DenseMatrix(d, k);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < k; ++j) out.eigenvectors(i, j) = ritz_vectors(i, j);
      }
      out.iterations = it;
      return out;
    }
    q = orthonormalize_columns(c_ritz);
  }
  throw ConvergenceFailure("top_eigenpairs: residual tolerance not reached in " +
                           std::to_string(options.max_iterations) + " iterations");
}

}  // namespace fedman
