#include "fedman/stiefel.hpp"

#include <utility>
#include <algorithm>
#include <cmath>

#include "fedman/errors.hpp"
#include "fedman/linalg.hpp"

namespace fedman {

double feasibility_error(const DenseMatrix& x) {
  DenseMatrix g = matmul_tn(x, x);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return max_abs(g);
}

StiefelPoint StiefelPoint::from_orthonormal(DenseMatrix x) {
  if (x.rows() < x.cols() || x.cols() == 0) {
    throw InvalidArgument("StiefelPoint: need 1 <= k <= d");
  }
  if (!(feasibility_error(x) <= kFeasibilityTolerance)) {
    throw InvalidArgument("StiefelPoint: columns are not orthonormal");
  }
  return StiefelPoint(std::move(x));
}

StiefelPoint project(const DenseMatrix& y) {
  if (y.rows() < y.cols() || y.cols() == 0) throw InvalidArgument("project: need 1 <= k <= d");
  require_finite(y, "project");
  DenseMatrix x = matmul(y, inv_sqrt_psd(sym(matmul_tn(y, y)), kProjectionFloor));
  // An ill-conditioned y leaves x only roughly orthonormal. The polar factor
  // of x is the same point, and x is well conditioned, so re-project.
  for (int pass = 0; pass < 2 && feasibility_error(x) > 1e-14; ++pass) {
    x = matmul(x, inv_sqrt_psd(sym(matmul_tn(x, x)), kProjectionFloor));
  }
  return StiefelPoint(std::move(x));
}

TangentVector tangent_project(const StiefelPoint& x, const DenseMatrix& v) {
  require_same_shape(x.value(), v, "tangent_project");
  const DenseMatrix s = sym(matmul_tn(x.value(), v));
  return {x, v - matmul(x.value(), s)};
}

double tangency_error(const StiefelPoint& x, const DenseMatrix& v) {
  const DenseMatrix xtv = matmul_tn(x.value(), v);
  return max_abs(xtv + transpose(xtv));
}

double dist_to_manifold(const DenseMatrix& y) {
  return frobenius_norm(y - project(y).value());
}

ManifoldConstants constants(std::size_t d, std::size_t k) {
  if (k < 1 || k > d) throw InvalidArgument("constants: need 1 <= k <= d");
  ManifoldConstants c{};
  c.gamma = 0.5;
  c.diam = 2.0 * std::sqrt(static_cast<double>(k));
  c.m_lip = std::max(c.diam / c.gamma, 2.0);
  return c;
}

StiefelPoint exp_approx(const StiefelPoint& x, const TangentVector& v) {
  return project(x.value() + v.value);
}

TangentVector log_approx(const StiefelPoint& x, const StiefelPoint& y) {
  return tangent_project(x, y.value() - x.value());
}

TangentVector transport_approx(const StiefelPoint& /*from*/, const StiefelPoint& to,
                               const TangentVector& v) {
  return tangent_project(to, v.value);
}

DenseMatrix random_gaussian(std::size_t rows, std::size_t cols, RngStream& rng) {
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

StiefelPoint random_stiefel(std::size_t d, std::size_t k, RngStream& rng) {
  return project(random_gaussian(d, k, rng));
}

}  // namespace fedman
