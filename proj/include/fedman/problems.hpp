#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedman/matrix.hpp"
#include "fedman/stiefel.hpp"

namespace fedman {

enum class ProblemKind { Kpca, Lrmc };

/// kPCA data of one client: rows of `a` are samples.
///
/// The per-sample loss is f_l(x) = -(m/2) ||a_l x||^2 with m the number of
/// rows, so that the mean over all rows is f_i(x) = -1/2 tr(x^T A^T A x).
struct KpcaClientData {
  DenseMatrix a;

  std::size_t samples() const noexcept { return a.rows(); }
};

struct ObservedEntry {
  std::uint32_t row;
  double value;
};

/// LRMC data of one client: observed entries of its column block, grouped by
/// column. A column is the sample unit for mini-batching.
struct LrmcClientData {
  std::size_t d = 0;
  std::vector<std::vector<ObservedEntry>> columns;

  std::size_t samples() const noexcept { return columns.size(); }
};

/// Ridge added to the k x k normal equations of the inner LRMC solve.
inline constexpr double kLrmcRidge = 1e-10;

double kpca_loss(const KpcaClientData& data, const StiefelPoint& x, std::span<const std::size_t> batch);
DenseMatrix kpca_euclid_grad(const KpcaClientData& data, const StiefelPoint& x,
                             std::span<const std::size_t> batch);

/// Per-column ridge least squares V = argmin ||P_Omega(X V - A)||; k x T.
/// Columns without observations get a zero column.
DenseMatrix lrmc_inner_solve(const LrmcClientData& data, const StiefelPoint& x);

/// Full-data LRMC loss 1/2 ||P_Omega(X V(X) - A)||^2 and its Danskin gradient
/// P_Omega(X V - A) V^T.
double lrmc_loss(const LrmcClientData& data, const StiefelPoint& x);
DenseMatrix lrmc_euclid_grad(const LrmcClientData& data, const StiefelPoint& x);

/// Column mini-batch versions, scaled by T/|batch| so the full batch gives
/// the full-data values.
double lrmc_loss(const LrmcClientData& data, const StiefelPoint& x, std::span<const std::size_t> batch);
DenseMatrix lrmc_euclid_grad(const LrmcClientData& data, const StiefelPoint& x,
                             std::span<const std::size_t> batch);

/// The federated objective f = (1/n) sum_i f_i together with its client data.
class Problem {
 public:
  static Problem kpca(std::vector<KpcaClientData> clients, std::size_t k);
  static Problem lrmc(std::vector<LrmcClientData> clients, std::size_t k);

  ProblemKind kind() const noexcept { return kind_; }
  std::size_t d() const noexcept { return d_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t num_clients() const noexcept;
  std::size_t client_samples(std::size_t i) const;

  const std::vector<KpcaClientData>& kpca_clients() const;
  const std::vector<LrmcClientData>& lrmc_clients() const;

  std::optional<double> f_star() const noexcept { return f_star_; }
  void set_f_star(double value) { f_star_ = value; }

  double client_loss(std::size_t i, const StiefelPoint& x, std::span<const std::size_t> batch) const;
  DenseMatrix client_euclid_grad(std::size_t i, const StiefelPoint& x,
                                 std::span<const std::size_t> batch) const;
  /// Full-batch evaluations; identical code path to the batched ones with
  /// the ascending index set.
  double client_loss(std::size_t i, const StiefelPoint& x) const;
  DenseMatrix client_euclid_grad(std::size_t i, const StiefelPoint& x) const;

  double loss(const StiefelPoint& x) const;
  DenseMatrix euclid_grad(const StiefelPoint& x) const;
  TangentVector riemannian_grad(const StiefelPoint& x) const;

  std::vector<std::size_t> full_batch(std::size_t i) const;

 private:
  ProblemKind kind_ = ProblemKind::Kpca;
  std::size_t d_ = 0;
  std::size_t k_ = 0;
  std::vector<KpcaClientData> kpca_;
  std::vector<LrmcClientData> lrmc_;
  std::optional<double> f_star_;
};

/// Client i (1-based) gets a p x d block of i.i.d. N(0, 2i/n) entries.
Problem gen_kpca_synthetic(std::size_t n, std::size_t d, std::size_t p, std::size_t k, std::uint64_t seed);

/// A = L R with standard Gaussian d x k and k x T factors, observed where a
/// uniform draw is <= nu = 10k(d+T-k)/(dT); columns split into n contiguous
/// blocks.
Problem gen_lrmc(std::size_t d, std::size_t t, std::size_t k, std::size_t n, std::uint64_t seed);
double lrmc_observation_rate(std::size_t d, std::size_t t, std::size_t k);

/// (1/n) sum_i A_i^T A_i
DenseMatrix kpca_covariance(const Problem& problem);
/// Square of the largest singular value of the stacked client data.
double kpca_beta(const Problem& problem);
/// -1/2 * (sum of the k largest eigenvalues of the covariance).
double kpca_fstar(const Problem& problem);

/// Reads MNIST training images and labels from `dir` (files
/// train-images-idx3-ubyte and train-labels-idx1-ubyte), scales pixels to
/// [0,1], sorts rows by label (stable) and gives each of the n clients a
/// contiguous block of count/n rows.
Problem load_mnist_kpca(const std::filesystem::path& dir, std::size_t n, std::size_t k);

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

/// Dataset container:
///   "FMDS" | u8 version=1 | u8 kind (0 kPCA, 1 LRMC) | u32 n | u32 d | u32 k
///   kPCA: per client u32 rows, then rows*d f64 (row-major)
///   LRMC: per client u32 columns, per column u32 count then count x (u32 row, f64 value)
/// All integers and reals little-endian.
std::vector<std::uint8_t> encode_dataset(const Problem& problem);
Problem decode_dataset(std::span<const std::uint8_t> bytes);
void write_dataset(const Problem& problem, const std::filesystem::path& path);
Problem read_dataset(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace fedman
