#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedman/matrix.hpp"
#include "fedman/problems.hpp"
#include "fedman/stiefel.hpp"

namespace fedman {

/// Hyperparameters of a federated run.
///
/// `batch == 0` or `batch >= samples` means the full local dataset, visited in
/// ascending index order. Otherwise each local step samples `batch` distinct
/// indices from the stream (seed, client, round, step).
struct HyperParams {
  double eta = 4e-3;
  double eta_g = 1.0;
  int tau = 5;
  int rounds = 100;
  std::size_t batch = 0;
  double mu = 0.01;  // RFedProx proximal weight

  /// eta * eta_g * tau
  double eta_tilde() const noexcept { return eta * eta_g * static_cast<double>(tau); }

  /// Throws ConfigError unless every field is in range for `problem`.
  void validate(const Problem& problem) const;
};

/// Local state of client i.
///
/// Mini-batch randomness is not stored: each step draws from the stream
/// (seed, client_id, round, step), so the state carries the seed only.
struct ClientState {
  std::size_t client_id = 0;
  std::uint64_t seed = 0;
  DenseMatrix z_hat;
  std::optional<StiefelPoint> z;
  DenseMatrix c;         // correction term; zero in the first round
  DenseMatrix grad_sum;  // sum of the local Riemannian gradients of the last round

  static ClientState initial(std::size_t client_id, std::uint64_t seed, std::size_t d, std::size_t k);
};

struct ServerState {
  DenseMatrix x_bar;    // ambient global model
  StiefelPoint x_proj;  // its projection
  long round = 0;
};

struct ClientRoundResult {
  DenseMatrix z_hat;     // final un-projected local iterate, the upload
  DenseMatrix grad_sum;  // sum over local steps of the sampled Riemannian gradients
};

/// Mini-batch indices of client i at (round, step) under `hp`.
std::vector<std::size_t> local_batch(const Problem& problem, std::size_t client, std::uint64_t seed,
                                     long round, long step, std::size_t batch);

/// Sampled Riemannian gradient of client i at z.
TangentVector client_riemannian_grad(const Problem& problem, std::size_t client, const StiefelPoint& z,
                                     std::span<const std::size_t> batch);

/// Projection that reports a RankDeficient failure as TubeExit.
StiefelPoint project_or_tube_exit(const DenseMatrix& y, long round, long step);

/// tau local steps from x_proj:
///   z_hat <- z_hat - eta (grad f_i(z; B) + c),  z <- P(z_hat)
/// Updates state.z_hat, state.z and state.grad_sum.
ClientRoundResult client_round(ClientState& state, const StiefelPoint& x_proj, const Problem& problem,
                               const HyperParams& hp, long round);

/// x_bar' = P(x_bar) + eta_g (mean(uploads) - P(x_bar)), mean taken in upload order.
ServerState server_aggregate(std::span<const DenseMatrix> uploads, const ServerState& server,
                             const HyperParams& hp);

/// c' = (P(x_bar_prev) - x_bar_next) / (eta_g eta tau) - grad_sum / tau
DenseMatrix correction_update(const ClientState& state, const StiefelPoint& x_proj_prev,
                              const DenseMatrix& x_bar_next, const HyperParams& hp);

/// Norm of (x - P(x - eta_tilde grad f(x))) / eta_tilde.
/// Throws TubeExit when eta_tilde ||grad f(x)|| >= 1/2.
double stationarity(const StiefelPoint& x, const Problem& problem, double eta_tilde);

struct StepSizeConstants {
  double L;      // smoothness bound
  double D_f;    // bound on per-sample Euclidean gradients over the manifold
  double M_lip;
  double gamma;
  double L_P;    // bound on the second derivative of the projection in the tube
};

struct StepSizeSuggestion {
  double eta;
  double eta_g;
  double eta_tilde;
  int binding_bound;  // 0: 1/(24 M L), 1: gamma/(6 D_f), 2: 1/(D_f L_P)
};

/// eta_g = sqrt(n) and eta_tilde = min{1/(24 M L), gamma/(6 D_f), 1/(D_f L_P)}.
StepSizeSuggestion theorem_step_sizes(const StepSizeConstants& c, std::size_t n, int tau);

/// Largest second-difference quotient ||P(y+he) - 2P(y) + P(y-he)|| / h^2
/// over `samples` random tube points y (dist < 1/2) and unit directions e.
double estimate_projection_curvature(std::size_t d, std::size_t k, std::uint64_t seed,
                                     std::size_t samples = 1000);

/// Data-derived constants for kPCA: L = beta, D_f = max_i m_i max_l ||a_l||^2 sqrt(k).
StepSizeConstants kpca_step_constants(const Problem& problem, std::uint64_t seed);

}  // namespace fedman
