#pragma once

#include <cstddef>

#include "fedman/matrix.hpp"
#include "fedman/rng.hpp"

namespace fedman {

/// Columns of a projected point are orthonormal to this max-abs tolerance.
inline constexpr double kFeasibilityTolerance = 1e-10;
/// Floor on lambda_min(y^T y) below which projection is refused.
inline constexpr double kProjectionFloor = 1e-12;

/// A d x k matrix with orthonormal columns. Only obtainable through
/// project() or from_orthonormal(), both of which establish the invariant.
class StiefelPoint {
 public:
  /// Wraps a matrix already known to be orthonormal; throws InvalidArgument
  /// if ||x^T x - I||_max exceeds kFeasibilityTolerance.
  static StiefelPoint from_orthonormal(DenseMatrix x);

  const DenseMatrix& value() const noexcept { return value_; }
  std::size_t d() const noexcept { return value_.rows(); }
  std::size_t k() const noexcept { return value_.cols(); }

  friend bool operator==(const StiefelPoint&, const StiefelPoint&) = default;

 private:
  friend StiefelPoint project(const DenseMatrix& y);
  explicit StiefelPoint(DenseMatrix x) : value_(std::move(x)) {}
  DenseMatrix value_;
};

/// A tangent vector together with its base point.
struct TangentVector {
  StiefelPoint base;
  DenseMatrix value;
};

struct ManifoldConstants {
  double gamma;  // half of the proximal smoothness constant
  double diam;
  double m_lip;  // bound in ||P(x + u) - x|| <= m_lip ||u||
};

/// ||x^T x - I||_max
double feasibility_error(const DenseMatrix& x);

/// Nearest point on St(d,k): the polar factor y (y^T y)^{-1/2}.
/// Throws RankDeficient when lambda_min(y^T y) < kProjectionFloor.
StiefelPoint project(const DenseMatrix& y);

/// v - x sym(x^T v)
TangentVector tangent_project(const StiefelPoint& x, const DenseMatrix& v);

/// Riemannian gradient under the Euclidean metric.
inline TangentVector riemannian_gradient(const StiefelPoint& x, const DenseMatrix& euclid_grad) {
  return tangent_project(x, euclid_grad);
}

/// ||x^T v + v^T x||_max; zero for tangent vectors.
double tangency_error(const StiefelPoint& x, const DenseMatrix& v);

double dist_to_manifold(const DenseMatrix& y);

ManifoldConstants constants(std::size_t d, std::size_t k);

/// Projection retraction P(x + v).
StiefelPoint exp_approx(const StiefelPoint& x, const TangentVector& v);
/// Tangent projection of y - x at x.
TangentVector log_approx(const StiefelPoint& x, const StiefelPoint& y);
/// Tangent projection at the destination point.
TangentVector transport_approx(const StiefelPoint& from, const StiefelPoint& to, const TangentVector& v);

/// Gaussian d x k matrix pushed onto the manifold.
StiefelPoint random_stiefel(std::size_t d, std::size_t k, RngStream& rng);
DenseMatrix random_gaussian(std::size_t rows, std::size_t cols, RngStream& rng);

}  // namespace fedman
