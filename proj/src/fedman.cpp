#include "fedman/fedman.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedman/errors.hpp"
#include "fedman/rng.hpp"

namespace fedman {

void HyperParams::validate(const Problem& problem) const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(eta)) throw ConfigError("eta must be positive and finite, got " + std::to_string(eta));
  if (!positive(eta_g)) throw ConfigError("eta_g must be positive and finite, got " + std::to_string(eta_g));
  if (tau < 1) throw ConfigError("tau must be >= 1, got " + std::to_string(tau));
  if (rounds < 0) throw ConfigError("rounds must be >= 0, got " + std::to_string(rounds));
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("mu must be >= 0, got " + std::to_string(mu));
  for (std::size_t i = 0; i < problem.num_clients(); ++i) {
    if (batch > problem.client_samples(i)) {
      throw ConfigError("batch " + std::to_string(batch) + " exceeds the " +
                        std::to_string(problem.client_samples(i)) + " samples of client " +
                        std::to_string(i));
    }
  }
}

ClientState ClientState::initial(std::size_t client_id, std::uint64_t seed, std::size_t d, std::size_t k) {
  ClientState s;
  s.client_id = client_id;
  s.seed = seed;
  s.z_hat = DenseMatrix(d, k);
  s.c = DenseMatrix(d, k);
  s.grad_sum = DenseMatrix(d, k);
  return s;
}

std::vector<std::size_t> local_batch(const Problem& problem, std::size_t client, std::uint64_t seed,
                                     long round, long step, std::size_t batch) {
  const std::size_t m = problem.client_samples(client);
  if (batch == 0 || batch >= m) return problem.full_batch(client);
  RngStream rng(seed, stream_id({stream_tag::kMinibatch, client, static_cast<std::uint64_t>(round),
                                 static_cast<std::uint64_t>(step)}));
  return sample_without_replacement(rng, m, batch);
}

TangentVector client_riemannian_grad(const Problem& problem, std::size_t client, const StiefelPoint& z,
                                     std::span<const std::size_t> batch) {
  return riemannian_gradient(z, problem.client_euclid_grad(client, z, batch));
}

StiefelPoint project_or_tube_exit(const DenseMatrix& y, long round, long step) {
  try {
    return project(y);
  } catch (const RankDeficient& e) {
    throw TubeExit(std::string("iterate left the projection tube: ") + e.what(), round, step);
  } catch (const NonFiniteValue& e) {
    throw TubeExit(std::string("iterate diverged: ") + e.what(), round, step);
  }
}

ClientRoundResult client_round(ClientState& state, const StiefelPoint& x_proj, const Problem& problem,
                               const HyperParams& hp, long round) {
  require_same_shape(x_proj.value(), state.c, "client_round");
  state.z_hat = x_proj.value();
  state.z = x_proj;
  state.grad_sum = DenseMatrix(x_proj.d(), x_proj.k());
  for (int t = 0; t < hp.tau; ++t) {
    const auto batch = local_batch(problem, state.client_id, state.seed, round, t, hp.batch);
    const TangentVector g = client_riemannian_grad(problem, state.client_id, *state.z, batch);
    state.grad_sum += g.value;
    DenseMatrix direction = g.value + state.c;
    axpy(-hp.eta, direction, state.z_hat);
    state.z = project_or_tube_exit(state.z_hat, round, t);
  }
  return {state.z_hat, state.grad_sum};
}

ServerState server_aggregate(std::span<const DenseMatrix> uploads, const ServerState& server,
                             const HyperParams& hp) {
  if (uploads.empty()) throw InvalidArgument("server_aggregate: no uploads");
  const DenseMatrix& base = server.x_proj.value();
  DenseMatrix mean(base.rows(), base.cols());
  for (const DenseMatrix& u : uploads) {
    require_same_shape(base, u, "server_aggregate");
    mean += u;
  }
  mean *= 1.0 / static_cast<double>(uploads.size());

  ServerState next{base, server.x_proj, server.round + 1};
  axpy(hp.eta_g, mean - base, next.x_bar);
  next.x_proj = project_or_tube_exit(next.x_bar, next.round, -1);
  return next;
}

DenseMatrix correction_update(const ClientState& state, const StiefelPoint& x_proj_prev,
                              const DenseMatrix& x_bar_next, const HyperParams& hp) {
  require_same_shape(x_proj_prev.value(), x_bar_next, "correction_update");
  require_same_shape(x_bar_next, state.grad_sum, "correction_update");
  DenseMatrix c = (1.0 / hp.eta_tilde()) * (x_proj_prev.value() - x_bar_next);
  axpy(-1.0 / static_cast<double>(hp.tau), state.grad_sum, c);
  require_finite(c, "correction_update");
  return c;
}

double stationarity(const StiefelPoint& x, const Problem& problem, double eta_tilde) {
  if (!(eta_tilde > 0.0)) throw InvalidArgument("stationarity: eta_tilde must be positive");
  const TangentVector g = problem.riemannian_grad(x);
  const double step = eta_tilde * frobenius_norm(g.value);
  if (step >= constants(x.d(), x.k()).gamma) {
    throw TubeExit("stationarity: step " + std::to_string(step) + " leaves the tube", -1, -1);
  }
  DenseMatrix y = x.value();
  axpy(-eta_tilde, g.value, y);
  const StiefelPoint next = project(y);
  return frobenius_norm(x.value() - next.value()) / eta_tilde;
}

StepSizeSuggestion theorem_step_sizes(const StepSizeConstants& c, std::size_t n, int tau) {
  if (!(c.L > 0 && c.D_f > 0 && c.M_lip > 0 && c.gamma > 0 && c.L_P > 0)) {
    throw InvalidArgument("theorem_step_sizes: constants must be positive");
  }
  if (n < 1 || tau < 1) throw InvalidArgument("theorem_step_sizes: need n >= 1 and tau >= 1");
  const double bounds[3] = {1.0 / (24.0 * c.M_lip * c.L), c.gamma / (6.0 * c.D_f), 1.0 / (c.D_f * c.L_P)};
  const int binding = static_cast<int>(std::min_element(std::begin(bounds), std::end(bounds)) - std::begin(bounds));
  StepSizeSuggestion s{};
  s.eta_g = std::sqrt(static_cast<double>(n));
  s.eta_tilde = bounds[binding];
  s.eta = s.eta_tilde / (s.eta_g * static_cast<double>(tau));
  s.binding_bound = binding;
  return s;
}

double estimate_projection_curvature(std::size_t d, std::size_t k, std::uint64_t seed, std::size_t samples) {
  constexpr double h = 1e-4;
  const double gamma = constants(d, k).gamma;
  RngStream rng(seed, stream_id({0x6c70, d, k}));
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const StiefelPoint x = random_stiefel(d, k, rng);
    DenseMatrix w = random_gaussian(d, k, rng);
    w *= 1.0 / frobenius_norm(w);
    const double radius = gamma * rng.uniform();
    DenseMatrix y = x.value();
    axpy(radius, w, y);
    DenseMatrix e = random_gaussian(d, k, rng);
    e *= 1.0 / frobenius_norm(e);

    DenseMatrix plus = y;
    axpy(h, e, plus);
    DenseMatrix minus = y;
    axpy(-h, e, minus);
    DenseMatrix second = project(plus).value() + project(minus).value();
    axpy(-2.0, project(y).value(), second);
    worst = std::max(worst, frobenius_norm(second) / (h * h));
  }
  return worst;
}

StepSizeConstants kpca_step_constants(const Problem& problem, std::uint64_t seed) {
  const auto& clients = problem.kpca_clients();
  double d_f = 0.0;
  for (const auto& c : clients) {
    double max_row = 0.0;
    for (std::size_t l = 0; l < c.a.rows(); ++l) {
      double r2 = 0.0;
      for (double v : c.a.row(l)) r2 += v * v;
      max_row = std::max(max_row, r2);
    }
    d_f = std::max(d_f, static_cast<double>(c.samples()) * max_row);
  }
  d_f *= std::sqrt(static_cast<double>(problem.k()));
  const ManifoldConstants mc = constants(problem.d(), problem.k());
  StepSizeConstants out{};
  out.L = kpca_beta(problem);
  out.D_f = d_f;
  out.M_lip = mc.m_lip;
  out.gamma = mc.gamma;
  out.L_P = estimate_projection_curvature(problem.d(), problem.k(), seed);
  return out;
}

}  // namespace fedman
