#include "fedman/runtime.hpp"

#include <chrono>
#include <exception>
#include <mutex>
#include <thread>
#include <string>

#include "fedman/baselines.hpp"
#include "fedman/errors.hpp"
#include "fedman/rng.hpp"

namespace fedman {

std::string_view algorithm_name(Algorithm algo) noexcept {
  switch (algo) {
    case Algorithm::Fedman: return "fedman";
    case Algorithm::Cprgd: return "cprgd";
    case Algorithm::RFedAvg: return "rfedavg";
    case Algorithm::RFedProx: return "rfedprox";
    case Algorithm::RFedSvrg: return "rfedsvrg";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::Fedman, Algorithm::Cprgd, Algorithm::RFedAvg, Algorithm::RFedProx,
                      Algorithm::RFedSvrg}) {
    if (algorithm_name(a) == name) return a;
  }
  throw ConfigError("unknown algorithm '" + std::string(name) +
                    "' (expected fedman, cprgd, rfedavg, rfedprox or rfedsvrg)");
}

int uplink_matrices_per_round(Algorithm algo) noexcept {
  switch (algo) {
    case Algorithm::Cprgd: return 0;
    case Algorithm::RFedSvrg: return 2;
    default: return 1;
  }
}

bool is_federated(Algorithm algo) noexcept { return algo != Algorithm::Cprgd; }

StiefelPoint initial_point(std::size_t d, std::size_t k, std::uint64_t seed) {
  RngStream rng(seed, stream_id({stream_tag::kInit, d, k}));
  return random_stiefel(d, k, rng);
}

namespace {

void require_broadcast(const WireFrame& frame) {
  if (frame.type != MsgType::Broadcast) throw TransportError("client expected a broadcast frame");
}

class AvgProxClientNode final : public ClientNode {
 public:
  AvgProxClientNode(std::shared_ptr<const Problem> problem, std::size_t client_id, HyperParams hp, double mu,
                    std::uint64_t seed)
      : problem_(std::move(problem)), client_(client_id), hp_(hp), mu_(mu), seed_(seed) {}

  WireFrame handle(const WireFrame& frame) override {
    require_broadcast(frame);
    const long round = frame.round;
    const StiefelPoint x_proj = project_or_tube_exit(frame.payload, round, -1);
    const StiefelPoint z = rfedavg_local(x_proj, *problem_, client_, hp_, mu_, round, seed_);
    return {MsgType::ModelUpload, frame.round, z.value()};
  }

 private:
  std::shared_ptr<const Problem> problem_;
  std::size_t client_;
  HyperParams hp_;
  double mu_;
  std::uint64_t seed_;
};

// Two exchanges per round: the model broadcast is answered with the local
// full gradient, the mean-gradient broadcast with the local model.
class SvrgClientNode final : public ClientNode {
 public:
  SvrgClientNode(std::shared_ptr<const Problem> problem, std::size_t client_id, HyperParams hp, std::uint64_t seed)
      : problem_(std::move(problem)), client_(client_id), hp_(hp), seed_(seed) {}

  WireFrame handle(const WireFrame& frame) override {
    require_broadcast(frame);
    const long round = frame.round;
    if (!x_proj_ || frame.round != round_) {
      round_ = frame.round;
      x_proj_ = project_or_tube_exit(frame.payload, round, -1);
      grad_ = riemannian_gradient(*x_proj_, problem_->client_euclid_grad(client_, *x_proj_));
      return {MsgType::GradientUpload, frame.round, grad_->value};
    }
    const TangentVector mean_grad{*x_proj_, frame.payload};
    const StiefelPoint z = rfedsvrg_local(*x_proj_, *problem_, client_, *grad_, mean_grad, hp_, round, seed_);
    x_proj_.reset();
    return {MsgType::ModelUpload, frame.round, z.value()};
  }

 private:
  std::shared_ptr<const Problem> problem_;
  std::size_t client_;
  HyperParams hp_;
  std::uint64_t seed_;
  std::uint32_t round_ = 0;
  std::optional<StiefelPoint> x_proj_;
  std::optional<TangentVector> grad_;
};

}  // namespace

FedmanClientNode::FedmanClientNode(std::shared_ptr<const Problem> problem, std::size_t client_id, HyperParams hp,
                                   std::uint64_t seed)
    : problem_(std::move(problem)),
      hp_(hp),
      state_(ClientState::initial(client_id, seed, problem_->d(), problem_->k())) {}

WireFrame FedmanClientNode::handle(const WireFrame& frame) {
  require_broadcast(frame);
  const long round = frame.round;
  // The correction refresh belongs to the end of the previous round; it needs
  // the new global model, which only arrives with this broadcast.
  if (prev_x_proj_ && frame.round == last_round_ + 1) {
    state_.c = correction_update(state_, *prev_x_proj_, frame.payload, hp_);
  }
  const StiefelPoint x_proj = project_or_tube_exit(frame.payload, round, -1);
  client_round(state_, x_proj, *problem_, hp_, round);
  prev_x_proj_ = x_proj;
  last_round_ = frame.round;
  return {MsgType::ModelUpload, frame.round, state_.z_hat};
}

std::unique_ptr<ClientNode> make_client_node(Algorithm algo, std::shared_ptr<const Problem> problem,
                                             std::size_t client_id, const HyperParams& hp, std::uint64_t seed) {
  if (client_id >= problem->num_clients()) {
    throw ConfigError("client id " + std::to_string(client_id) + " out of range for " +
                      std::to_string(problem->num_clients()) + " clients");
  }
  switch (algo) {
    case Algorithm::Fedman:
      return std::make_unique<FedmanClientNode>(std::move(problem), client_id, hp, seed);
    case Algorithm::RFedAvg:
      return std::make_unique<AvgProxClientNode>(std::move(problem), client_id, hp, 0.0, seed);
    case Algorithm::RFedProx:
      return std::make_unique<AvgProxClientNode>(std::move(problem), client_id, hp, hp.mu, seed);
    case Algorithm::RFedSvrg:
      return std::make_unique<SvrgClientNode>(std::move(problem), client_id, hp, seed);
    case Algorithm::Cprgd:
      break;
  }
  throw ConfigError("algorithm " + std::string(algorithm_name(algo)) + " has no client side");
}

std::vector<std::unique_ptr<ClientNode>> make_client_nodes(Algorithm algo, std::shared_ptr<const Problem> problem,
                                                           const HyperParams& hp, std::uint64_t seed) {
  std::vector<std::unique_ptr<ClientNode>> nodes;
  for (std::size_t i = 0; i < problem->num_clients(); ++i) {
    nodes.push_back(make_client_node(algo, problem, i, hp, seed));
  }
  return nodes;
}

std::vector<RoundMetrics> orchestrate(Algorithm algo, const Problem& problem, const HyperParams& hp,
                                      Transport* transport, const RunOptions& options) {
  struct ShutdownGuard {
    Transport* t;
    ~ShutdownGuard() {
      if (t) {
        try {
          t->shutdown();
        } catch (...) {
        }
      }
    }
  } guard{is_federated(algo) ? transport : nullptr};

  hp.validate(problem);
  if (is_federated(algo)) {
    if (transport == nullptr) throw ConfigError("algorithm " + std::string(algorithm_name(algo)) + " needs a transport");
    if (transport->num_clients() != problem.num_clients()) {
      throw ConfigError("transport has " + std::to_string(transport->num_clients()) + " clients, problem has " +
                        std::to_string(problem.num_clients()));
    }
  }
  if (algo == Algorithm::Fedman && hp.rounds > 0 && hp.eta_g <= 0.0) throw ConfigError("eta_g must be positive");

  const auto start = std::chrono::steady_clock::now();
  const StiefelPoint x0 = initial_point(problem.d(), problem.k(), options.seed);
  ServerState server{x0.value(), x0, 0};
  const int per_round = uplink_matrices_per_round(algo);

  std::vector<RoundMetrics> series;
  series.reserve(static_cast<std::size_t>(hp.rounds) + 1);
  auto record = [&] {
    RoundMetrics m;
    m.round = server.round;
    m.grad_norm = frobenius_norm(problem.riemannian_grad(server.x_proj).value);
    m.objective = problem.loss(server.x_proj);
    if (problem.f_star()) m.obj_gap = m.objective - *problem.f_star();
    m.uplink_matrices = server.round * per_round;
    m.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    series.push_back(m);
    if (options.observer) options.observer(m, server);
  };

  record();
  for (int r = 1; r <= hp.rounds; ++r) {
    const auto wire_round = static_cast<std::uint32_t>(r);
    switch (algo) {
      case Algorithm::Cprgd: {
        const StiefelPoint next = cprgd_step(server.x_proj, problem, hp.eta_tilde(), r);
        server = {next.value(), next, r};
        break;
      }
      case Algorithm::Fedman: {
        transport->broadcast({MsgType::Broadcast, wire_round, server.x_bar});
        const auto uploads = transport->gather(wire_round, MsgType::ModelUpload);
        server = server_aggregate(uploads, server, hp);
        break;
      }
      case Algorithm::RFedAvg:
      case Algorithm::RFedProx: {
        transport->broadcast({MsgType::Broadcast, wire_round, server.x_bar});
        const auto uploads = transport->gather(wire_round, MsgType::ModelUpload);
        server = rfedavg_aggregate(uploads, server);
        break;
      }
      case Algorithm::RFedSvrg: {
        transport->broadcast({MsgType::Broadcast, wire_round, server.x_bar});
        const auto grads = transport->gather(wire_round, MsgType::GradientUpload);
        const TangentVector mean_grad = rfedsvrg_mean_gradient(grads, server.x_proj);
        transport->broadcast({MsgType::Broadcast, wire_round, mean_grad.value});
        const auto models = transport->gather(wire_round, MsgType::ModelUpload);
        server = rfedsvrg_aggregate(models, server);
        break;
      }
    }
    record();
  }
  return series;
}

std::vector<RoundMetrics> run_inproc(Algorithm algo, std::shared_ptr<const Problem> problem, const HyperParams& hp,
                                     const RunOptions& options) {
  if (!is_federated(algo)) return orchestrate(algo, *problem, hp, nullptr, options);
  InprocTransport transport(make_client_nodes(algo, problem, hp, options.seed));
  return orchestrate(algo, *problem, hp, &transport, options);
}

std::vector<RoundMetrics> run_tcp_loopback(Algorithm algo, std::shared_ptr<const Problem> problem,
                                           const HyperParams& hp, const RunOptions& options,
                                           const std::string& bind_address) {
  if (!is_federated(algo)) return orchestrate(algo, *problem, hp, nullptr, options);
  hp.validate(*problem);
  const std::size_t n = problem->num_clients();
  TcpServerTransport server(bind_address, n);
  const std::string connect_to = parse_address(bind_address).host + ":" + std::to_string(server.port());

  std::mutex error_mutex;
  std::exception_ptr client_error;
  std::vector<std::thread> clients;
  clients.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    clients.emplace_back([&, i] {
      try {
        auto node = make_client_node(algo, problem, i, hp, options.seed);
        run_tcp_client(connect_to, i, *node);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!client_error) client_error = std::current_exception();
      }
    });
  }
  struct Joiner {
    std::vector<std::thread>& threads;
    ~Joiner() {
      for (auto& t : threads) {
        if (t.joinable()) t.join();
      }
    }
  } joiner{clients};

  std::vector<RoundMetrics> series;
  try {
    server.accept_clients();
    series = orchestrate(algo, *problem, hp, &server, options);
  } catch (...) {
    server.shutdown();
    for (auto& t : clients) t.join();
    if (client_error) std::rethrow_exception(client_error);
    throw;
  }
  for (auto& t : clients) t.join();
  if (client_error) std::rethrow_exception(client_error);
  return series;
}

}  // namespace fedman
