#pragma once

#include <cstdint>
#include <span>

#include "fedman/fedman.hpp"

namespace fedman {

/// Centralized projected Riemannian gradient step P(x - eta_tilde grad f(x))
/// with the full gradient.
StiefelPoint cprgd_step(const StiefelPoint& x, const Problem& problem, double eta_tilde, long round = -1);

/// RFedAvg / RFedProx local loop of client i: tau steps of
///   z <- P(z - eta (grad f_i(z; B) + mu * Proj_z(z - x_proj)))
/// from z = x_proj. mu = 0 gives RFedAvg.
StiefelPoint rfedavg_local(const StiefelPoint& x_proj, const Problem& problem, std::size_t client,
                           const HyperParams& hp, double mu, long round, std::uint64_t seed);

/// x_bar = mean of the local models, x_proj = P(x_bar).
ServerState rfedavg_aggregate(std::span<const DenseMatrix> uploads, const ServerState& server);

/// RFedSVRG local loop of client i with control variate: tau steps of
///   z <- exp_approx(z, -eta Proj_z(grad f_i(z; B) - T(grad_i) + T(grad_mean)))
/// where T is the approximate transport from x_proj to z.
StiefelPoint rfedsvrg_local(const StiefelPoint& x_proj, const Problem& problem, std::size_t client,
                            const TangentVector& client_full_grad, const TangentVector& mean_grad,
                            const HyperParams& hp, long round, std::uint64_t seed);

/// Tangent projection at x_proj of the mean of the uploaded client gradients.
TangentVector rfedsvrg_mean_gradient(std::span<const DenseMatrix> grads, const StiefelPoint& x_proj);

/// x_bar' = exp_approx(x_proj, mean_i log_approx(x_proj, z_i)).
ServerState rfedsvrg_aggregate(std::span<const DenseMatrix> uploads, const ServerState& server);

/// In-process single rounds, all clients in ascending order.
ServerState rfedavg_round(const Problem& problem, const ServerState& server, const HyperParams& hp,
                          std::uint64_t seed);
ServerState rfedprox_round(const Problem& problem, const ServerState& server, const HyperParams& hp,
                           double mu, std::uint64_t seed);
ServerState rfedsvrg_round(const Problem& problem, const ServerState& server, const HyperParams& hp,
                           std::uint64_t seed);

}  // namespace fedman
