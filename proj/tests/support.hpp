#pragma once

#include <cstdint>

#include "fedman/matrix.hpp"
#include "fedman/rng.hpp"
#include "fedman/stiefel.hpp"

namespace fedman::testing {

inline DenseMatrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed, std::uint64_t id = 0) {
  RngStream rng(seed, id);
  return random_gaussian(rows, cols, rng);
}

// Textbook triple loop, used as the reference for matmul.
inline DenseMatrix naive_product(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < a.cols(); ++l) s += a(i, l) * b(l, j);
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace fedman::testing
