#include <doctest.h>

#include <cmath>
#include <memory>

#include "fedman/baselines.hpp"
#include "fedman/errors.hpp"
#include "fedman/fedman.hpp"
#include "fedman/runtime.hpp"
#include "support.hpp"

using namespace fedman;
using fedman::testing::gaussian;

namespace {

HyperParams params(double eta, int tau, int rounds, std::size_t batch = 0) {
  HyperParams hp;
  hp.eta = eta;
  hp.tau = tau;
  hp.rounds = rounds;
  hp.batch = batch;
  return hp;
}

}  // namespace

TEST_CASE("hyperparameter validation") {
  const Problem p = gen_kpca_synthetic(2, 5, 4, 2, 1);
  CHECK_NOTHROW(params(1e-3, 2, 3).validate(p));
  CHECK_THROWS_AS(params(0.0, 2, 3).validate(p), ConfigError);
  CHECK_THROWS_AS(params(1e-3, 0, 3).validate(p), ConfigError);
  CHECK_THROWS_AS(params(1e-3, 2, 3, 5).validate(p), ConfigError);
  HyperParams hp = params(1e-3, 2, 3);
  hp.eta_g = 0.0;
  CHECK_THROWS_AS(hp.validate(p), ConfigError);
  CHECK(params(2e-3, 5, 1).eta_tilde() == doctest::Approx(1e-2));
}

TEST_CASE("mini-batches are deterministic per (client, round, step)") {
  const Problem p = gen_kpca_synthetic(2, 5, 10, 2, 1);
  CHECK(local_batch(p, 0, 3, 4, 1, 4) == local_batch(p, 0, 3, 4, 1, 4));
  CHECK(local_batch(p, 0, 3, 4, 1, 4) != local_batch(p, 0, 3, 4, 2, 4));
  CHECK(local_batch(p, 1, 3, 4, 1, 0) == p.full_batch(1));
  CHECK(local_batch(p, 1, 3, 4, 1, 10) == p.full_batch(1));
}

TEST_CASE("one local step with zero correction is a projected gradient step") {
  const auto p = gen_kpca_synthetic(3, 6, 5, 2, 2);
  const StiefelPoint x = project(gaussian(6, 2, 1));
  ClientState s = ClientState::initial(1, 0, 6, 2);
  const HyperParams hp = params(1e-2, 1, 1);
  const ClientRoundResult r = client_round(s, x, p, hp, 1);
  const DenseMatrix expected = x.value() - 1e-2 * tangent_project(x, p.client_euclid_grad(1, x)).value;
  CHECK(max_abs(r.z_hat - expected) < 1e-15);
  CHECK(max_abs(s.z->value() - project(expected).value()) < 1e-15);
}

TEST_CASE("server aggregation with eta_g = 1 is the plain mean") {
  const StiefelPoint x = project(gaussian(5, 2, 1));
  const ServerState server{x.value(), x, 3};
  const std::vector<DenseMatrix> uploads{gaussian(5, 2, 2), gaussian(5, 2, 3)};
  const ServerState next = server_aggregate(uploads, server, params(1e-3, 1, 1));
  CHECK(max_abs(next.x_bar - 0.5 * (uploads[0] + uploads[1])) < 1e-15);
  CHECK(next.round == 4);
  CHECK(next.x_proj == project(next.x_bar));
}

TEST_CASE("correction terms average to zero along a run") {
  for (int tau : {1, 3}) {
    for (std::size_t batch : {std::size_t{0}, std::size_t{2}}) {
      auto problem = std::make_shared<Problem>(gen_kpca_synthetic(4, 8, 6, 2, 3));
      const HyperParams hp = params(2e-3, tau, 15, batch);
      InprocTransport transport(make_client_nodes(Algorithm::Fedman, problem, hp, 9));
      double worst = 0.0;
      RunOptions options;
      options.seed = 9;
      options.observer = [&](const RoundMetrics&, const ServerState&) {
        DenseMatrix mean(8, 2);
        for (std::size_t i = 0; i < 4; ++i) mean += dynamic_cast<FedmanClientNode&>(transport.node(i)).correction();
        worst = std::max(worst, frobenius_norm(0.25 * mean));
      };
      orchestrate(Algorithm::Fedman, *problem, hp, &transport, options);
      CHECK(worst <= 1e-10);
    }
  }
}

TEST_CASE("single local step without batching reproduces C-PRGD") {
  auto problem = std::make_shared<Problem>(gen_kpca_synthetic(5, 10, 6, 3, 4));
  const HyperParams hp = params(3e-3, 1, 30);
  const auto fed = run_inproc(Algorithm::Fedman, problem, hp, {4, {}});
  const auto central = run_inproc(Algorithm::Cprgd, problem, hp, {4, {}});
  REQUIRE(fed.size() == central.size());
  for (std::size_t r = 0; r < fed.size(); ++r) {
    CHECK(std::abs(fed[r].objective - central[r].objective) < 1e-12);
  }
}

TEST_CASE("stationarity measure") {
  const Problem p = gen_kpca_synthetic(2, 6, 5, 2, 5);
  const StiefelPoint x = project(gaussian(6, 2, 7));
  const double g = frobenius_norm(p.riemannian_grad(x).value);
  const double s = stationarity(x, p, 1e-4);
  CHECK(s <= 2 * g);
  CHECK(s >= 0.5 * g);
  // Small steps: G tends to the gradient norm.
  CHECK(stationarity(x, p, 1e-7) == doctest::Approx(g).epsilon(1e-4));
  CHECK_THROWS_AS(stationarity(x, p, 10.0 / g), TubeExit);
  CHECK_THROWS_AS(stationarity(x, p, 0.0), InvalidArgument);
}

TEST_CASE("theorem step sizes pick the binding bound") {
  const StepSizeConstants c{10.0, 4.0, 8.0, 0.5, 2.0};
  const StepSizeSuggestion s = theorem_step_sizes(c, 16, 5);
  // Bounds: 1/(24*8*10) = 5.2e-4, 0.5/24 = 2.1e-2, 1/8 = 0.125.
  CHECK(s.binding_bound == 0);
  CHECK(s.eta_tilde == doctest::Approx(1.0 / 1920.0));
  CHECK(s.eta_g == doctest::Approx(4.0));
  CHECK(s.eta * s.eta_g * 5 == doctest::Approx(s.eta_tilde));
  CHECK_THROWS_AS(theorem_step_sizes({0, 1, 1, 1, 1}, 2, 1), InvalidArgument);
}

TEST_CASE("projection curvature estimate is positive and finite") {
  const double lp = estimate_projection_curvature(6, 2, 1, 50);
  CHECK(std::isfinite(lp));
  CHECK(lp > 0.0);
}

TEST_CASE("leaving the tube is reported with its round and step") {
  try {
    project_or_tube_exit(DenseMatrix(4, 2), 7, 3);
    FAIL("expected TubeExit");
  } catch (const TubeExit& e) {
    CHECK(e.round() == 7);
    CHECK(e.step() == 3);
  }
}

TEST_CASE("baseline local loops stay on the manifold") {
  const Problem p = gen_kpca_synthetic(3, 6, 5, 2, 6);
  const StiefelPoint x = project(gaussian(6, 2, 3));
  const HyperParams hp = params(1e-2, 4, 1);
  const StiefelPoint a = rfedavg_local(x, p, 0, hp, 0.0, 1, 1);
  CHECK(feasibility_error(a.value()) < 1e-12);
  const StiefelPoint b = rfedavg_local(x, p, 0, hp, 0.5, 1, 1);
  CHECK(b != a);
  const TangentVector gi = p.riemannian_grad(x);
  const StiefelPoint c = rfedsvrg_local(x, p, 1, gi, gi, hp, 1, 1);
  CHECK(feasibility_error(c.value()) < 1e-12);
  const ServerState s0{x.value(), x, 0};
  CHECK(rfedavg_round(p, s0, hp, 1).round == 1);
  CHECK(feasibility_error(rfedsvrg_round(p, s0, hp, 1).x_proj.value()) < 1e-12);
}
