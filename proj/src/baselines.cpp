#include "fedman/baselines.hpp"

#include <string>
#include <vector>

#include "fedman/errors.hpp"

namespace fedman {

namespace {

DenseMatrix mean_of(std::span<const DenseMatrix> uploads, const DenseMatrix& like, const char* what) {
  if (uploads.empty()) throw InvalidArgument(std::string(what) + ": no uploads");
  DenseMatrix mean(like.rows(), like.cols());
  for (const DenseMatrix& u : uploads) {
    require_same_shape(like, u, what);
    mean += u;
  }
  mean *= 1.0 / static_cast<double>(uploads.size());
  return mean;
}

}  // namespace

StiefelPoint cprgd_step(const StiefelPoint& x, const Problem& problem, double eta_tilde, long round) {
  const TangentVector g = problem.riemannian_grad(x);
  DenseMatrix y = x.value();
  axpy(-eta_tilde, g.value, y);
  return project_or_tube_exit(y, round, -1);
}

StiefelPoint rfedavg_local(const StiefelPoint& x_proj, const Problem& problem, std::size_t client,
                           const HyperParams& hp, double mu, long round, std::uint64_t seed) {
  StiefelPoint z = x_proj;
  for (int t = 0; t < hp.tau; ++t) {
    const auto batch = local_batch(problem, client, seed, round, t, hp.batch);
    DenseMatrix direction = client_riemannian_grad(problem, client, z, batch).value;
    if (mu != 0.0) {
      axpy(mu, tangent_project(z, z.value() - x_proj.value()).value, direction);
    }
    DenseMatrix y = z.value();
    axpy(-hp.eta, direction, y);
    z = project_or_tube_exit(y, round, t);
  }
  return z;
}

ServerState rfedavg_aggregate(std::span<const DenseMatrix> uploads, const ServerState& server) {
  ServerState next{mean_of(uploads, server.x_proj.value(), "rfedavg_aggregate"), server.x_proj,
                   server.round + 1};
  next.x_proj = project_or_tube_exit(next.x_bar, next.round, -1);
  return next;
}

StiefelPoint rfedsvrg_local(const StiefelPoint& x_proj, const Problem& problem, std::size_t client,
                            const TangentVector& client_full_grad, const TangentVector& mean_grad,
                            const HyperParams& hp, long round, std::uint64_t seed) {
  StiefelPoint z = x_proj;
  for (int t = 0; t < hp.tau; ++t) {
    const auto batch = local_batch(problem, client, seed, round, t, hp.batch);
    DenseMatrix direction = client_riemannian_grad(problem, client, z, batch).value;
    direction -= transport_approx(x_proj, z, client_full_grad).value;
    direction += transport_approx(x_proj, z, mean_grad).value;
    const TangentVector step = tangent_project(z, -hp.eta * direction);
    try {
      z = exp_approx(z, step);
    } catch (const RankDeficient& e) {
      throw TubeExit(std::string("iterate left the projection tube: ") + e.what(), round, t);
    }
  }
  return z;
}

TangentVector rfedsvrg_mean_gradient(std::span<const DenseMatrix> grads, const StiefelPoint& x_proj) {
  return tangent_project(x_proj, mean_of(grads, x_proj.value(), "rfedsvrg_mean_gradient"));
}

ServerState rfedsvrg_aggregate(std::span<const DenseMatrix> uploads, const ServerState& server) {
  const StiefelPoint& x = server.x_proj;
  std::vector<DenseMatrix> logs;
  logs.reserve(uploads.size());
  for (const DenseMatrix& u : uploads) {
    require_same_shape(x.value(), u, "rfedsvrg_aggregate");
    logs.push_back(tangent_project(x, u - x.value()).value);
  }
  const TangentVector mean_log{x, mean_of(logs, x.value(), "rfedsvrg_aggregate")};
  ServerState next{x.value(), x, server.round + 1};
  try {
    next.x_proj = exp_approx(x, mean_log);
  } catch (const RankDeficient& e) {
    throw TubeExit(std::string("server average left the projection tube: ") + e.what(), next.round, -1);
  }
  next.x_bar = next.x_proj.value();
  return next;
}

ServerState rfedavg_round(const Problem& problem, const ServerState& server, const HyperParams& hp,
                          std::uint64_t seed) {
  return rfedprox_round(problem, server, hp, 0.0, seed);
}

ServerState rfedprox_round(const Problem& problem, const ServerState& server, const HyperParams& hp,
                           double mu, std::uint64_t seed) {
  const long round = server.round + 1;
  std::vector<DenseMatrix> uploads;
  for (std::size_t i = 0; i < problem.num_clients(); ++i) {
    uploads.push_back(rfedavg_local(server.x_proj, problem, i, hp, mu, round, seed).value());
  }
  return rfedavg_aggregate(uploads, server);
}

ServerState rfedsvrg_round(const Problem& problem, const ServerState& server, const HyperParams& hp,
                           std::uint64_t seed) {
  const long round = server.round + 1;
  const std::size_t n = problem.num_clients();
  std::vector<TangentVector> client_grads;
  std::vector<DenseMatrix> grad_values;
  for (std::size_t i = 0; i < n; ++i) {
    client_grads.push_back(riemannian_gradient(server.x_proj, problem.client_euclid_grad(i, server.x_proj)));
    grad_values.push_back(client_grads.back().value);
  }
  const TangentVector mean_grad = rfedsvrg_mean_gradient(grad_values, server.x_proj);
  std::vector<DenseMatrix> uploads;
  for (std::size_t i = 0; i < n; ++i) {
    uploads.push_back(
        rfedsvrg_local(server.x_proj, problem, i, client_grads[i], mean_grad, hp, round, seed).value());
  }
  return rfedsvrg_aggregate(uploads, server);
}

}  // namespace fedman
