#include "fedman/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedman/errors.hpp"
#include "fedman/linalg.hpp"
#include "fedman/rng.hpp"

namespace fedman {

namespace {

void check_batch(std::span<const std::size_t> batch, std::size_t m, const char* what) {
  if (batch.empty()) throw InvalidArgument(std::string(what) + ": empty batch");
  for (std::size_t l : batch) {
    if (l >= m) {
      throw InvalidArgument(std::string(what) + ": batch index " + std::to_string(l) +
                            " out of range [0, " + std::to_string(m) + ")");
    }
  }
}

void check_shape(const StiefelPoint& x, std::size_t d, const char* what) {
  if (x.d() != d) {
    throw DimensionMismatch(std::string(what) + ": point has " + std::to_string(x.d()) +
                            " rows, data has dimension " + std::to_string(d));
  }
}

// Row s of x times v (k-vector).
double row_dot(const DenseMatrix& x, std::size_t s, const DenseMatrix& v, std::size_t col) {
  double acc = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) acc += x(s, j) * v(j, col);
  return acc;
}

DenseMatrix solve_column(const LrmcClientData& data, const DenseMatrix& x, std::size_t col) {
  const std::size_t k = x.cols();
  const auto& entries = data.columns[col];
  DenseMatrix v(k, 1);
  if (entries.empty()) return v;
  DenseMatrix gram(k, k);
  DenseMatrix rhs(k, 1);
  for (const ObservedEntry& e : entries) {
    for (std::size_t a = 0; a < k; ++a) {
      rhs(a, 0) += x(e.row, a) * e.value;
      for (std::size_t b = 0; b < k; ++b) gram(a, b) += x(e.row, a) * x(e.row, b);
    }
  }
  for (std::size_t a = 0; a < k; ++a) gram(a, a) += kLrmcRidge;
  return solve_spd(gram, rhs);
}

void check_lrmc_point(const LrmcClientData& data, const StiefelPoint& x) {
  if (x.d() != data.d) {
    throw DimensionMismatch("lrmc: point has " + std::to_string(x.d()) + " rows, data has d=" +
                            std::to_string(data.d));
  }
}

}  // namespace

double kpca_loss(const KpcaClientData& data, const StiefelPoint& x, std::span<const std::size_t> batch) {
  check_shape(x, data.a.cols(), "kpca_loss");
  check_batch(batch, data.samples(), "kpca_loss");
  const DenseMatrix& xv = x.value();
  const std::size_t d = xv.rows();
  const std::size_t k = xv.cols();
  double acc = 0.0;
  for (std::size_t l : batch) {
    auto row = data.a.row(l);
    for (std::size_t j = 0; j < k; ++j) {
      double y = 0.0;
      for (std::size_t c = 0; c < d; ++c) y += row[c] * xv(c, j);
      acc += y * y;
    }
  }
  const double m = static_cast<double>(data.samples());
  return -(m / (2.0 * static_cast<double>(batch.size()))) * acc;
}

DenseMatrix kpca_euclid_grad(const KpcaClientData& data, const StiefelPoint& x,
                             std::span<const std::size_t> batch) {
  check_shape(x, data.a.cols(), "kpca_euclid_grad");
  check_batch(batch, data.samples(), "kpca_euclid_grad");
  const DenseMatrix& xv = x.value();
  const std::size_t d = xv.rows();
  const std::size_t k = xv.cols();
  DenseMatrix g(d, k);
  std::vector<double> y(k);
  for (std::size_t l : batch) {
    auto row = data.a.row(l);
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t c = 0; c < d; ++c) {
      const double r = row[c];
      if (r == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) y[j] += r * xv(c, j);
    }
    for (std::size_t c = 0; c < d; ++c) {
      const double r = row[c];
      if (r == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) g(c, j) += r * y[j];
    }
  }
  const double m = static_cast<double>(data.samples());
  g *= -(m / static_cast<double>(batch.size()));
  return g;
}

DenseMatrix lrmc_inner_solve(const LrmcClientData& data, const StiefelPoint& x) {
  check_lrmc_point(data, x);
  const std::size_t k = x.k();
  DenseMatrix v(k, data.columns.size());
  for (std::size_t col = 0; col < data.columns.size(); ++col) {
    const DenseMatrix vc = solve_column(data, x.value(), col);
    for (std::size_t a = 0; a < k; ++a) v(a, col) = vc(a, 0);
  }
  return v;
}

double lrmc_loss(const LrmcClientData& data, const StiefelPoint& x, std::span<const std::size_t> batch) {
  check_lrmc_point(data, x);
  check_batch(batch, data.samples(), "lrmc_loss");
  double acc = 0.0;
  for (std::size_t col : batch) {
    const DenseMatrix v = solve_column(data, x.value(), col);
    for (const ObservedEntry& e : data.columns[col]) {
      const double r = row_dot(x.value(), e.row, v, 0) - e.value;
      acc += r * r;
    }
  }
  const double scale = static_cast<double>(data.samples()) / static_cast<double>(batch.size());
  return 0.5 * scale * acc;
}

DenseMatrix lrmc_euclid_grad(const LrmcClientData& data, const StiefelPoint& x,
                             std::span<const std::size_t> batch) {
  check_lrmc_point(data, x);
  check_batch(batch, data.samples(), "lrmc_euclid_grad");
  const std::size_t k = x.k();
  DenseMatrix g(x.d(), k);
  for (std::size_t col : batch) {
    const DenseMatrix v = solve_column(data, x.value(), col);
    for (const ObservedEntry& e : data.columns[col]) {
      const double r = row_dot(x.value(), e.row, v, 0) - e.value;
      for (std::size_t j = 0; j < k; ++j) g(e.row, j) += r * v(j, 0);
    }
  }
  g *= static_cast<double>(data.samples()) / static_cast<double>(batch.size());
  return g;
}

namespace {

std::vector<std::size_t> iota_batch(std::size_t m) {
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

double lrmc_loss(const LrmcClientData& data, const StiefelPoint& x) {
  return lrmc_loss(data, x, iota_batch(data.samples()));
}

DenseMatrix lrmc_euclid_grad(const LrmcClientData& data, const StiefelPoint& x) {
  return lrmc_euclid_grad(data, x, iota_batch(data.samples()));
}

Problem Problem::kpca(std::vector<KpcaClientData> clients, std::size_t k) {
  if (clients.empty()) throw InvalidArgument("Problem: need at least one client");
  const std::size_t d = clients.front().a.cols();
  if (k < 1 || k > d) throw InvalidArgument("Problem: need 1 <= k <= d");
  for (const auto& c : clients) {
    if (c.a.cols() != d) throw DimensionMismatch("Problem: inconsistent kPCA client dimension");
    if (c.samples() < 1) throw InvalidArgument("Problem: kPCA client without samples");
    require_finite(c.a, "Problem::kpca");
  }
  Problem p;
  p.kind_ = ProblemKind::Kpca;
  p.d_ = d;
  p.k_ = k;
  p.kpca_ = std::move(clients);
  return p;
}

Problem Problem::lrmc(std::vector<LrmcClientData> clients, std::size_t k) {
  if (clients.empty()) throw InvalidArgument("Problem: need at least one client");
  const std::size_t d = clients.front().d;
  if (k < 1 || k > d) throw InvalidArgument("Problem: need 1 <= k <= d");
  for (const auto& c : clients) {
    if (c.d != d) throw DimensionMismatch("Problem: inconsistent LRMC client dimension");
    if (c.samples() < 1) throw InvalidArgument("Problem: LRMC client without columns");
    for (const auto& column : c.columns) {
      std::vector<std::uint32_t> rows;
      rows.reserve(column.size());
      for (const auto& e : column) {
        if (e.row >= d) throw InvalidArgument("Problem: LRMC row index out of range");
        if (!std::isfinite(e.value)) throw NonFiniteValue("Problem: LRMC non-finite observation");
        rows.push_back(e.row);
      }
      std::sort(rows.begin(), rows.end());
      if (std::adjacent_find(rows.begin(), rows.end()) != rows.end()) {
        throw InvalidArgument("Problem: duplicate LRMC observation");
      }
    }
  }
  Problem p;
  p.kind_ = ProblemKind::Lrmc;
  p.d_ = d;
  p.k_ = k;
  p.lrmc_ = std::move(clients);
  return p;
}

std::size_t Problem::num_clients() const noexcept {
  return kind_ == ProblemKind::Kpca ? kpca_.size() : lrmc_.size();
}

std::size_t Problem::client_samples(std::size_t i) const {
  if (i >= num_clients()) throw InvalidArgument("Problem: client index out of range");
  return kind_ == ProblemKind::Kpca ? kpca_[i].samples() : lrmc_[i].samples();
}

const std::vector<KpcaClientData>& Problem::kpca_clients() const {
  if (kind_ != ProblemKind::Kpca) throw InvalidArgument("Problem: not a kPCA problem");
  return kpca_;
}

const std::vector<LrmcClientData>& Problem::lrmc_clients() const {
  if (kind_ != ProblemKind::Lrmc) throw InvalidArgument("Problem: not an LRMC problem");
  return lrmc_;
}

std::vector<std::size_t> Problem::full_batch(std::size_t i) const {
  return iota_batch(client_samples(i));
}

double Problem::client_loss(std::size_t i, const StiefelPoint& x, std::span<const std::size_t> batch) const {
  if (i >= num_clients()) throw InvalidArgument("Problem: client index out of range");
  return kind_ == ProblemKind::Kpca ? kpca_loss(kpca_[i], x, batch) : lrmc_loss(lrmc_[i], x, batch);
}

DenseMatrix Problem::client_euclid_grad(std::size_t i, const StiefelPoint& x,
                                        std::span<const std::size_t> batch) const {
  if (i >= num_clients()) throw InvalidArgument("Problem: client index out of range");
  return kind_ == ProblemKind::Kpca ? kpca_euclid_grad(kpca_[i], x, batch)
                                    : lrmc_euclid_grad(lrmc_[i], x, batch);
}

double Problem::client_loss(std::size_t i, const StiefelPoint& x) const {
  return client_loss(i, x, full_batch(i));
}

DenseMatrix Problem::client_euclid_grad(std::size_t i, const StiefelPoint& x) const {
  return client_euclid_grad(i, x, full_batch(i));
}

double Problem::loss(const StiefelPoint& x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < num_clients(); ++i) acc += client_loss(i, x);
  return acc / static_cast<double>(num_clients());
}

DenseMatrix Problem::euclid_grad(const StiefelPoint& x) const {
  DenseMatrix g(d_, k_);
  for (std::size_t i = 0; i < num_clients(); ++i) g += client_euclid_grad(i, x);
  g *= 1.0 / static_cast<double>(num_clients());
  return g;
}

TangentVector Problem::riemannian_grad(const StiefelPoint& x) const {
  return riemannian_gradient(x, euclid_grad(x));
}

Problem gen_kpca_synthetic(std::size_t n, std::size_t d, std::size_t p, std::size_t k, std::uint64_t seed) {
  if (n < 1 || d < 1 || p < 1) throw InvalidArgument("gen_kpca_synthetic: n, d, p must be positive");
  std::vector<KpcaClientData> clients;
  clients.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    RngStream rng(seed, stream_id({stream_tag::kKpcaData, i}));
    const double sd = std::sqrt(2.0 * static_cast<double>(i) / static_cast<double>(n));
    DenseMatrix a(p, d);
    for (double& v : a.data()) v = sd * rng.normal();
    clients.push_back({std::move(a)});
  }
  return Problem::kpca(std::move(clients), k);
}

double lrmc_observation_rate(std::size_t d, std::size_t t, std::size_t k) {
  const double dd = static_cast<double>(d);
  const double tt = static_cast<double>(t);
  const double kk = static_cast<double>(k);
  return 10.0 * kk * (dd + tt - kk) / (dd * tt);
}

Problem gen_lrmc(std::size_t d, std::size_t t, std::size_t k, std::size_t n, std::uint64_t seed) {
  if (n < 1 || t < n) throw InvalidArgument("gen_lrmc: need 1 <= n <= T");
  if (k < 1 || k > d) throw InvalidArgument("gen_lrmc: need 1 <= k <= d");
  RngStream factors(seed, stream_id({stream_tag::kLrmcFactors}));
  const DenseMatrix left = random_gaussian(d, k, factors);
  const DenseMatrix right = random_gaussian(k, t, factors);
  const DenseMatrix full = matmul(left, right);
  const double nu = lrmc_observation_rate(d, t, k);

  RngStream mask(seed, stream_id({stream_tag::kLrmcMask}));
  std::vector<std::vector<ObservedEntry>> columns(t);
  // Draw the mask row-major so its layout does not depend on n.
  std::vector<char> observed(d * t);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < t; ++c) observed[r * t + c] = mask.uniform() <= nu ? 1 : 0;
  }
  for (std::size_t c = 0; c < t; ++c) {
    for (std::size_t r = 0; r < d; ++r) {
      if (observed[r * t + c]) columns[c].push_back({static_cast<std::uint32_t>(r), full(r, c)});
    }
  }

  std::vector<LrmcClientData> clients(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t begin = i * t / n;
    const std::size_t end = (i + 1) * t / n;
    clients[i].d = d;
    for (std::size_t c = begin; c < end; ++c) clients[i].columns.push_back(std::move(columns[c]));
  }
  return Problem::lrmc(std::move(clients), k);
}

DenseMatrix kpca_covariance(const Problem& problem) {
  const std::size_t d = problem.d();
  DenseMatrix c(d, d);
  for (const auto& client : problem.kpca_clients()) {
    // Upper triangle by rank-one row updates; image rows are sparse.
    for (std::size_t l = 0; l < client.a.rows(); ++l) {
      auto row = client.a.row(l);
      for (std::size_t i = 0; i < d; ++i) {
        const double ri = row[i];
        if (ri == 0.0) continue;
        for (std::size_t j = i; j < d; ++j) c(i, j) += ri * row[j];
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(problem.num_clients());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      c(i, j) *= inv_n;
      c(j, i) = c(i, j);
    }
  }
  return c;
}

double kpca_beta(const Problem& problem) {
  const DenseMatrix c = kpca_covariance(problem);
  const TopEigenpairs top = top_eigenpairs(c, 1);
  return static_cast<double>(problem.num_clients()) * top.eigenvalues.front();
}

double kpca_fstar(const Problem& problem) {
  const DenseMatrix c = kpca_covariance(problem);
  const TopEigenpairs top = top_eigenpairs(c, problem.k());
  double sum = 0.0;
  for (double v : top.eigenvalues) sum += v;
  return -0.5 * sum;
}

}  // namespace fedman
