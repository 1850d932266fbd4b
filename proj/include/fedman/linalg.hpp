#pragma once

#include <vector>

#include "fedman/matrix.hpp"

namespace fedman {

struct SymEigResult {
  std::vector<double> eigenvalues;  // ascending
  DenseMatrix eigenvectors;         // column j pairs with eigenvalues[j]
};

struct JacobiOptions {
  int max_sweeps = 100;
  double relative_tolerance = 1e-14;  // on the off-diagonal Frobenius mass
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Intended for the k x k Gram matrices of the Stiefel projection (k <= 64),
/// though any size works. Eigenvalues come out ascending and each
/// eigenvector's first nonzero component is made positive, so the output is
/// a deterministic function of the input. Throws InvalidArgument on a
/// non-square or non-symmetric input (tolerance 1e-12 relative) and
/// ConvergenceFailure when the sweep budget is exhausted.
SymEigResult sym_eig_small(const DenseMatrix& a, const JacobiOptions& options = {});

/// B = A^{-1/2} for symmetric positive definite A. Throws RankDeficient when
/// the smallest eigenvalue is below `floor`.
DenseMatrix inv_sqrt_psd(const DenseMatrix& a, double floor);

/// Solves A x = b for small SPD A by Cholesky; b may have several columns.
/// Throws RankDeficient if a pivot is not positive.
DenseMatrix solve_spd(const DenseMatrix& a, const DenseMatrix& b);

/// Modified Gram-Schmidt on the columns (thin Q factor).
DenseMatrix orthonormalize_columns(const DenseMatrix& a);

struct SubspaceIterationOptions {
  int max_iterations = 200000;
  double residual_tolerance = 1e-12;  // relative to the largest eigenvalue
  std::size_t oversampling = 5;
};

struct TopEigenpairs {
  std::vector<double> eigenvalues;  // descending
  DenseMatrix eigenvectors;         // d x k
  int iterations = 0;
};

/// Top-k eigenpairs of a symmetric positive semidefinite matrix by orthogonal
/// (subspace) iteration with Rayleigh-Ritz. Convergence means every one of
/// the k wanted Ritz pairs has ||C q - lambda q|| <= tol * lambda_max.
TopEigenpairs top_eigenpairs(const DenseMatrix& c, std::size_t k,
                             const SubspaceIterationOptions& options = {});

}  // namespace fedman
