#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fedman {

/// Row-major dense matrix of doubles.
///
/// This is the ambient representation of every model, gradient, correction
/// term and message. Reductions inside the free functions below accumulate in
/// ascending index order so that results are bit-reproducible.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  /// First `cols` columns of the `rows`x`rows` identity.
  static DenseMatrix eye(std::size_t rows, std::size_t cols);
  static DenseMatrix diag(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool all_finite() const noexcept;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

/// a * b, accumulating each entry left to right over the inner index.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b without forming the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

/// y += alpha * x
void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y);

/// Frobenius inner product.
double dot(const DenseMatrix& a, const DenseMatrix& b);
double frobenius_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
/// (a + a^T) / 2
DenseMatrix sym(const DenseMatrix& a);

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what);
void require_finite(const DenseMatrix& a, const char* what);

}  // namespace fedman
