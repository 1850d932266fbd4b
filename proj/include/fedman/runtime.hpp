#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedman/fedman.hpp"
#include "fedman/transport.hpp"

namespace fedman {

enum class Algorithm { Fedman, Cprgd, RFedAvg, RFedProx, RFedSvrg };

std::string_view algorithm_name(Algorithm algo) noexcept;
/// Accepts the CLI names fedman, cprgd, rfedavg, rfedprox, rfedsvrg.
Algorithm parse_algorithm(std::string_view name);
/// d x k matrices each client uploads per round (0 for the centralized method).
int uplink_matrices_per_round(Algorithm algo) noexcept;
/// Whether the algorithm needs client nodes and a transport.
bool is_federated(Algorithm algo) noexcept;

struct RoundMetrics {
  long round = 0;
  double grad_norm = 0.0;  // ||grad f(P(x_bar))||
  double objective = 0.0;
  std::optional<double> obj_gap;
  long uplink_matrices = 0;  // cumulative, per client
  double elapsed_ms = 0.0;
};

/// Deterministic initial model: projection of a seeded Gaussian d x k matrix.
StiefelPoint initial_point(std::size_t d, std::size_t k, std::uint64_t seed);

/// Client side of the proposed method. Keeps the correction term between
/// rounds and refreshes it when the next global model arrives.
class FedmanClientNode final : public ClientNode {
 public:
  FedmanClientNode(std::shared_ptr<const Problem> problem, std::size_t client_id, HyperParams hp,
                   std::uint64_t seed);

  WireFrame handle(const WireFrame& frame) override;

  const ClientState& state() const noexcept { return state_; }
  const DenseMatrix& correction() const noexcept { return state_.c; }

 private:
  std::shared_ptr<const Problem> problem_;
  HyperParams hp_;
  ClientState state_;
  std::optional<StiefelPoint> prev_x_proj_;
  std::uint32_t last_round_ = 0;
};

std::unique_ptr<ClientNode> make_client_node(Algorithm algo, std::shared_ptr<const Problem> problem,
                                             std::size_t client_id, const HyperParams& hp, std::uint64_t seed);

std::vector<std::unique_ptr<ClientNode>> make_client_nodes(Algorithm algo, std::shared_ptr<const Problem> problem,
                                                           const HyperParams& hp, std::uint64_t seed);

struct RunOptions {
  std::uint64_t seed = 0;
  /// Called after the metrics of every recorded round (including round 0).
  std::function<void(const RoundMetrics&, const ServerState&)> observer;
};

/// Runs hp.rounds synchronous rounds of `algo`, returning metrics for rounds
/// 0..R evaluated at the projected global model. The transport is required
/// for federated algorithms and ignored for C-PRGD; it is shut down on exit.
std::vector<RoundMetrics> orchestrate(Algorithm algo, const Problem& problem, const HyperParams& hp,
                                      Transport* transport, const RunOptions& options);

/// orchestrate() over an InprocTransport built from make_client_nodes().
std::vector<RoundMetrics> run_inproc(Algorithm algo, std::shared_ptr<const Problem> problem, const HyperParams& hp,
                                     const RunOptions& options);

/// orchestrate() over real TCP sockets: a server on `bind_address` and one
/// client thread per client, each speaking the wire protocol.
std::vector<RoundMetrics> run_tcp_loopback(Algorithm algo, std::shared_ptr<const Problem> problem,
                                           const HyperParams& hp, const RunOptions& options,
                                           const std::string& bind_address = "127.0.0.1:0");

}  // namespace fedman
