// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fedman/baselines.hpp"
#include "fedman/errors.hpp"
#include "fedman/fedman.hpp"
#include "fedman/metrics_io.hpp"
#include "fedman/problems.hpp"
#include "fedman/rng.hpp"
#include "fedman/runtime.hpp"
#include "fedman/stiefel.hpp"
#include "fedman/wire.hpp"

using namespace fedman;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string sci(double v) { return fmt("%.3e", v); }

Outcome verdict(bool ok, std::string detail) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)}; }

HyperParams params(double eta, int tau, int rounds, std::size_t batch = 0) {
  HyperParams hp;
  hp.eta = eta;
  hp.tau = tau;
  hp.rounds = rounds;
  hp.batch = batch;
  return hp;
}

std::shared_ptr<Problem> synthetic_kpca(std::size_t n, std::size_t p, std::uint64_t seed) {
  auto problem = std::make_shared<Problem>(gen_kpca_synthetic(n, 20, p, 5, seed));
  problem->set_f_star(kpca_fstar(*problem));
  return problem;
}

std::vector<RoundMetrics> run(Algorithm algo, const std::shared_ptr<Problem>& problem, const HyperParams& hp,
                              std::uint64_t seed) {
  return run_inproc(algo, problem, hp, {seed, {}});
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// A point within `radius` of the manifold: a manifold point plus an ambient
// perturbation of norm below `radius`.
DenseMatrix tube_point(std::size_t d, std::size_t k, RngStream& rng, double radius) {
  const StiefelPoint q = random_stiefel(d, k, rng);
  DenseMatrix u = random_gaussian(d, k, rng);
  u *= radius * rng.uniform() / frobenius_norm(u);
  return q.value() + u;
}

Outcome ac1_geometry() {
  const int cases = 10000;
  const double slack = 1e-9;
  RngStream rng(2024, stream_id({1}));
  double orth = 0.0, idem = 0.0;
  int lip_bad = 0, lemma_bad = 0, normal_bad = 0;
  for (int c = 0; c < cases; ++c) {
    const std::size_t d = 2 + rng.below(29);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(d, 8));
    const ManifoldConstants mc = constants(d, k);

    // Projection of a generic ambient matrix.
    const DenseMatrix y = random_gaussian(d, k, rng);
    const StiefelPoint py = project(y);
    orth = std::max(orth, feasibility_error(py.value()));
    idem = std::max(idem, max_abs(project(py.value()).value() - py.value()));

    // 2-Lipschitz for pairs inside the gamma tube.
    DenseMatrix a, b;
    do {
      a = tube_point(d, k, rng, mc.gamma);
      b = a + std::pow(10.0, -3.0 + 3.0 * rng.uniform()) * random_gaussian(d, k, rng);
    } while (dist_to_manifold(b) > mc.gamma);
    if (frobenius_norm(project(a).value() - project(b).value()) > 2.0 * frobenius_norm(a - b) + slack) ++lip_bad;

    // ||P(x + u) - x|| <= M ||u|| for x on the manifold and any u.
    const StiefelPoint x = random_stiefel(d, k, rng);
    DenseMatrix u = random_gaussian(d, k, rng);
    u *= std::pow(10.0, -3.0 + 4.0 * rng.uniform()) / frobenius_norm(u);
    try {
      if (frobenius_norm(project(x.value() + u).value() - x.value()) > mc.m_lip * frobenius_norm(u) + slack) {
        ++lemma_bad;
      }
    } catch (const RankDeficient&) {
      // x + u of deficient rank has no unique projection; not a case of the bound.
    }

    // Normal inequality with v = x S, S symmetric, for far and near y.
    const DenseMatrix s = sym(random_gaussian(k, k, rng));
    const DenseMatrix v = matmul(x.value(), s);
    const StiefelPoint z = (c % 2) ? random_stiefel(d, k, rng)
                                   : project(x.value() + 0.05 * rng.uniform() * random_gaussian(d, k, rng));
    const DenseMatrix diff = z.value() - x.value();
    if (dot(v, diff) > frobenius_norm(v) / (4.0 * mc.gamma) * dot(diff, diff) + slack) ++normal_bad;
  }
  const bool ok = orth <= 1e-10 && idem <= 1e-12 && lip_bad == 0 && lemma_bad == 0 && normal_bad == 0;
  return verdict(ok, "orthonormality " + sci(orth) + ", idempotence " + sci(idem) + ", violations lipschitz=" +
                         std::to_string(lip_bad) + " lemma=" + std::to_string(lemma_bad) +
                         " normal=" + std::to_string(normal_bad) + " over " + std::to_string(cases) + " cases each");
}

Outcome ac2_cprgd_reduction() {
  auto problem = synthetic_kpca(10, 15, 1);
  const HyperParams hp = params(4e-3, 1, 200);
  auto trajectory = [&](Algorithm algo) {
    std::vector<DenseMatrix> xs;
    RunOptions options;
    options.seed = 1;
    options.observer = [&](const RoundMetrics&, const ServerState& s) { xs.push_back(s.x_proj.value()); };
    run_inproc(algo, problem, hp, options);
    return xs;
  };
  const auto fed = trajectory(Algorithm::Fedman);
  const auto central = trajectory(Algorithm::Cprgd);
  double worst = 0.0;
  for (std::size_t r = 0; r < fed.size(); ++r) worst = std::max(worst, max_abs(fed[r] - central[r]));
  return verdict(fed.size() == 201 && worst <= 1e-12,
                 "max per-round iterate difference " + sci(worst) + " over 200 rounds");
}

Outcome ac3_correction_mean() {
  double worst = 0.0;
  int configs = 0;
  for (std::size_t n : {1, 5, 30}) {
    for (int tau : {1, 5, 20}) {
      auto problem = synthetic_kpca(n, 15, 3);
      const HyperParams hp = params(1e-3, tau, 40, 4);
      InprocTransport transport(make_client_nodes(Algorithm::Fedman, problem, hp, 5));
      RunOptions options;
      options.seed = 5;
      options.observer = [&](const RoundMetrics&, const ServerState&) {
        DenseMatrix mean(20, 5);
        for (std::size_t i = 0; i < n; ++i) mean += dynamic_cast<FedmanClientNode&>(transport.node(i)).correction();
        mean *= 1.0 / static_cast<double>(n);
        worst = std::max(worst, frobenius_norm(mean));
      };
      orchestrate(Algorithm::Fedman, *problem, hp, &transport, options);
      ++configs;
    }
  }
  return verdict(worst <= 1e-10, "max_r ||mean c|| = " + sci(worst) + " over " + std::to_string(configs) +
                                     " configurations (batch 4, 40 rounds)");
}

// Worst relative error of central differences along random unit tangent
// directions against <grad, v>.
double fd_error(const Problem& problem, const StiefelPoint& x, const DenseMatrix& grad, std::uint64_t seed) {
  RngStream rng(seed, stream_id({4}));
  const double h = 1e-6;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    DenseMatrix v = tangent_project(x, random_gaussian(x.d(), x.k(), rng)).value;
    v *= 1.0 / frobenius_norm(v);
    const double fd = (problem.loss(project(x.value() + h * v)) - problem.loss(project(x.value() - h * v))) / (2 * h);
    const double an = dot(grad, v);
    worst = std::max(worst, std::abs(fd - an) / std::abs(an));
  }
  return worst;
}

Outcome ac4_gradients() {
  const auto kpca = synthetic_kpca(30, 15, 1);
  RngStream rng(4, stream_id({4, 1}));
  const StiefelPoint xk = random_stiefel(20, 5, rng);
  const double kpca_err = fd_error(*kpca, xk, kpca->euclid_grad(xk), 1);

  const Problem lrmc = gen_lrmc(100, 1000, 2, 10, 1);
  const StiefelPoint xl = random_stiefel(100, 2, rng);
  // Danskin form assembled from the inner solve: mean_i P_Omega(X V_i - A_i) V_i^T.
  DenseMatrix danskin(100, 2);
  for (const auto& client : lrmc.lrmc_clients()) {
    const DenseMatrix v = lrmc_inner_solve(client, xl);
    for (std::size_t col = 0; col < client.columns.size(); ++col) {
      for (const ObservedEntry& e : client.columns[col]) {
        const double r = xl.value()(e.row, 0) * v(0, col) + xl.value()(e.row, 1) * v(1, col) - e.value;
        danskin(e.row, 0) += r * v(0, col);
        danskin(e.row, 1) += r * v(1, col);
      }
    }
  }
  danskin *= 1.0 / static_cast<double>(lrmc.num_clients());
  const double agree = max_abs(danskin - lrmc.euclid_grad(xl)) / max_abs(danskin);
  const double lrmc_err = fd_error(lrmc, xl, danskin, 2);
  return verdict(kpca_err <= 1e-5 && lrmc_err <= 1e-5 && agree <= 1e-12,
                 "kPCA rel err " + sci(kpca_err) + ", LRMC rel err " + sci(lrmc_err) +
                     " (Danskin vs library gradient " + sci(agree) + ")");
}

Outcome ac5_client_drift() {
  auto problem = synthetic_kpca(30, 15, 1);
  const HyperParams hp = params(4e-3, 5, 4000);
  const double fed = run(Algorithm::Fedman, problem, hp, 1).back().grad_norm;
  const double avg = run(Algorithm::RFedAvg, problem, hp, 1).back().grad_norm;
  const double prox = run(Algorithm::RFedProx, problem, hp, 1).back().grad_norm;
  const bool ok = fed <= 1e-6 && avg >= 100 * fed && prox >= 100 * fed;
  return verdict(ok, "final ||grad f||: fedman " + sci(fed) + ", rfedavg " + sci(avg) + ", rfedprox " + sci(prox));
}

Outcome ac6_stochastic_floor() {
  // p = 32 so that every client can draw a batch of 16.
  const int rounds = 1500, window = 500;
  std::vector<double> plateaus;
  std::string detail = "median plateau over 5 seeds:";
  for (std::size_t b : {1, 4, 16}) {
    std::vector<double> per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto problem = synthetic_kpca(30, 32, seed);
      const auto series = run(Algorithm::Fedman, problem, params(4e-3, 5, rounds, b), seed);
      std::vector<double> tail;
      for (std::size_t r = series.size() - window; r < series.size(); ++r) tail.push_back(series[r].grad_norm);
      per_seed.push_back(median(tail));
    }
    plateaus.push_back(median(per_seed));
    detail += " b=" + std::to_string(b) + " " + sci(plateaus.back());
  }
  return verdict(plateaus[0] > plateaus[1] && plateaus[1] > plateaus[2], detail);
}

Outcome ac7_local_updates() {
  auto problem = synthetic_kpca(30, 15, 1);
  std::vector<double> g;
  std::string detail = "||grad f|| after 100 rounds, eta 5e-4:";
  for (int tau : {10, 15, 20}) {
    g.push_back(run(Algorithm::Fedman, problem, params(5e-4, tau, 100), 1).back().grad_norm);
    detail += " tau=" + std::to_string(tau) + " " + sci(g.back());
  }
  return verdict(g[2] <= g[0], detail);
}

Outcome ac8_lrmc() {
  auto problem = std::make_shared<Problem>(gen_lrmc(100, 1000, 2, 10, 1));
  const auto series = run(Algorithm::Fedman, problem, params(1e-4, 10, 500), 1);
  long reached = -1;
  for (const auto& m : series) {
    if (m.grad_norm <= 1e-4) {
      reached = m.round;
      break;
    }
  }
  double worst_rise = -std::numeric_limits<double>::infinity();
  for (std::size_t r = series.size() - 100; r < series.size(); ++r) {
    worst_rise = std::max(worst_rise, series[r].objective - series[r - 1].objective);
  }
  return verdict(reached >= 0 && worst_rise <= 1e-10,
                 "||grad f|| <= 1e-4 at round " + std::to_string(reached) + ", final " +
                     sci(series.back().grad_norm) + ", largest objective rise in last 100 rounds " +
                     sci(worst_rise));
}

Outcome ac9_fstar() {
  auto problem = synthetic_kpca(30, 15, 1);
  const auto series = run(Algorithm::Fedman, problem, params(4e-3, 5, 4000), 1);
  const double gap = *series.back().obj_gap;
  return verdict(gap >= 0.0 && gap <= 1e-8, "f(P(x_R)) - f* = " + sci(gap) + " (f* = " +
                                                fmt("%.12g", *problem->f_star()) + ")");
}

Outcome ac10_stationarity() {
  auto problem = synthetic_kpca(30, 15, 1);
  const StepSizeSuggestion s = theorem_step_sizes(kpca_step_constants(*problem, 1), problem->num_clients(), 5);
  HyperParams hp = params(s.eta, 5, 300);
  hp.eta_g = s.eta_g;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  int points = 0;
  for (auto [algo, batch] : {std::pair{Algorithm::Fedman, std::size_t{0}}, std::pair{Algorithm::Fedman, std::size_t{4}},
                             std::pair{Algorithm::Cprgd, std::size_t{0}}}) {
    hp.batch = batch;
    RunOptions options;
    options.seed = 1;
    options.observer = [&](const RoundMetrics& m, const ServerState& server) {
      const double g = stationarity(server.x_proj, *problem, s.eta_tilde);
      lo = std::min(lo, g / m.grad_norm);
      hi = std::max(hi, g / m.grad_norm);
      ++points;
    };
    run_inproc(algo, problem, hp, options);
  }
  return verdict(lo >= 0.5 && hi <= 2.0, "G/||grad f|| in [" + fmt("%.6f", lo) + ", " + fmt("%.6f", hi) +
                                             "] over " + std::to_string(points) + " rounds, eta_tilde " +
                                             sci(s.eta_tilde));
}

Outcome ac11_uplink() {
  auto problem = synthetic_kpca(5, 15, 1);
  const int rounds = 7;
  std::string detail = "uplink per client per round:";
  bool ok = true;
  for (Algorithm a : {Algorithm::Fedman, Algorithm::RFedAvg, Algorithm::RFedProx, Algorithm::RFedSvrg}) {
    const std::string csv = format_metrics_csv(run(a, problem, params(4e-3, 5, rounds), 1), {false});
    const auto parsed = parse_metrics_csv(csv);
    const long expected = a == Algorithm::RFedSvrg ? 2 : 1;
    for (const auto& m : parsed) ok = ok && m.uplink_matrices == expected * m.round;
    // The uplink column must be a plain integer literal on every row.
    std::size_t pos = csv.find('\n') + 1;
    while (pos < csv.size()) {
      const std::size_t end = csv.find('\n', pos);
      const std::string line = csv.substr(pos, end - pos);
      std::size_t field_start = 0;
      for (int f = 0; f < 4; ++f) field_start = line.find(',', field_start) + 1;
      const std::string field = line.substr(field_start, line.find(',', field_start) - field_start);
      ok = ok && !field.empty() && field.find_first_not_of("0123456789") == std::string::npos;
      pos = end + 1;
    }
    detail += " " + std::string(algorithm_name(a)) + "=" + std::to_string(parsed.back().uplink_matrices / rounds);
  }
  return verdict(ok, detail);
}

Outcome ac12_transport() {
  auto problem = synthetic_kpca(10, 15, 1);
  const HyperParams hp = params(4e-3, 5, 50);
  const std::string inproc = format_metrics_csv(run_inproc(Algorithm::Fedman, problem, hp, {1, {}}), {false});
  const std::string tcp = format_metrics_csv(run_tcp_loopback(Algorithm::Fedman, problem, hp, {1, {}}), {false});

  RngStream rng(12, stream_id({12}));
  int frame_bad = 0;
  for (int t = 0; t < 10000; ++t) {
    DenseMatrix m(1 + rng.below(64), 1 + rng.below(8));
    for (double& v : m.data()) {
      const std::uint64_t bits = rng.next_u64();
      std::memcpy(&v, &bits, sizeof v);
    }
    const WireFrame f{static_cast<MsgType>(rng.below(3)), static_cast<std::uint32_t>(rng.next_u64()), m};
    const auto bytes = encode_frame(f);
    const WireFrame g = decode_frame(bytes);
    if (g.type != f.type || g.round != f.round || g.payload.rows() != m.rows() || g.payload.cols() != m.cols() ||
        std::memcmp(g.payload.data().data(), m.data().data(), m.size() * sizeof(double)) != 0) {
      ++frame_bad;
    }
  }
  return verdict(inproc == tcp && frame_bad == 0,
                 std::string("inproc vs tcp CSV ") + (inproc == tcp ? "byte-identical" : "DIFFER") + " (" +
                     std::to_string(inproc.size()) + " bytes, 50 rounds, n=10), frame round-trip failures " +
                     std::to_string(frame_bad) + "/10000");
}

Outcome ac13_mnist() {
  const char* env = std::getenv("FEDMAN_MNIST_DIR");
  if (env == nullptr || *env == '\0') return {Verdict::Skip, "FEDMAN_MNIST_DIR not set"};
  const std::filesystem::path dir(env);
  if (!std::filesystem::exists(dir / "train-images-idx3-ubyte") ||
      !std::filesystem::exists(dir / "train-labels-idx1-ubyte")) {
    return {Verdict::Skip, "MNIST training files not found in " + dir.string()};
  }
  auto problem = std::make_shared<Problem>(load_mnist_kpca(dir, 10, 2));
  problem->set_f_star(kpca_fstar(*problem));
  const HyperParams hp = params(1.0 / kpca_beta(*problem), 10, 300);
  const double fed = run(Algorithm::Fedman, problem, hp, 1).back().grad_norm;
  const double svrg = run(Algorithm::RFedSvrg, problem, hp, 1).back().grad_norm;
  const double avg = run(Algorithm::RFedAvg, problem, hp, 1).back().grad_norm;
  const double prox = run(Algorithm::RFedProx, problem, hp, 1).back().grad_norm;
  const double best = std::max(fed, svrg);
  const bool ok = fed < 1e-4 && svrg < 1e-4 && avg >= 10 * best && prox >= 10 * best;
  return verdict(ok, "final ||grad f|| after 300 rounds: fedman " + sci(fed) + ", rfedsvrg " + sci(svrg) +
                         ", rfedavg " + sci(avg) + ", rfedprox " + sci(prox));
}

struct Criterion {
  const char* id;
  const char* name;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "geometry properties", 30, ac1_geometry},
      {"AC2", "single local step reproduces C-PRGD", 5, ac2_cprgd_reduction},
      {"AC3", "correction terms average to zero", 0, ac3_correction_mean},
      {"AC4", "gradients match finite differences", 0, ac4_gradients},
      {"AC5", "client-drift separation", 120, ac5_client_drift},
      {"AC6", "stochastic floor decreases with batch size", 180, ac6_stochastic_floor},
      {"AC7", "more local steps help at fixed eta", 120, ac7_local_updates},
      {"AC8", "LRMC convergence", 180, ac8_lrmc},
      {"AC9", "objective gap at the converged kPCA iterate", 0, ac9_fstar},
      {"AC10", "stationarity sandwich under theorem step sizes", 0, ac10_stationarity},
      {"AC11", "uplink accounting", 0, ac11_uplink},
      {"AC12", "transport equivalence and frame round-trip", 60, ac12_transport},
      {"AC13", "MNIST kPCA trend", 0, ac13_mnist},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.verdict == Verdict::Pass && c.budget_s > 0 && secs > c.budget_s) {
      out.verdict = Verdict::Fail;
      out.detail += "; over the " + fmt("%.0f", c.budget_s) + " s budget";
    }
    if (out.verdict == Verdict::Fail) ++failures;
    const char* tag = out.verdict == Verdict::Pass ? "PASS" : out.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    std::printf("%-4s %s %s: %s [%.2f s]\n", c.id, tag, c.name, out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
