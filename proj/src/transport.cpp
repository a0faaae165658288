#include "lawbound/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lawbound/parallel.hpp"

namespace lawbound {

bool TransportPlan::valid(double tol) const {
  if (cost < 0) return false;
  if (mode == Mode::Permutation) {
    std::vector<char> seen(permutation.size(), 0);
    for (int j : permutation) {
      if (j < 0 || static_cast<std::size_t>(j) >= permutation.size() || seen[j]) return false;
      seen[j] = 1;
    }
    return true;
  }
  if (matrix.size() != rows * cols) return false;
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < cols; ++j) s += matrix[i * cols + j];
    if (std::abs(s - 1.0 / rows) > tol) return false;
  }
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < rows; ++i) s += matrix[i * cols + j];
    if (std::abs(s - 1.0 / cols) > tol) return false;
  }
  return true;
}

AssignmentResult solve_assignment(std::span<const double> cost, std::size_t n) {
  require(cost.size() == n * n, "assignment: cost matrix must be n x n");
  require(n >= 1, "assignment: empty problem");
  const double INF = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  auto c = [&](std::size_t i, std::size_t j) { return cost[(i - 1) * n + (j - 1)]; };

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), INF);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      std::size_t i0 = p[j0], j1 = 0;
      double delta = INF;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = c(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  AssignmentResult r;
  r.assignment.assign(n, -1);
  for (std::size_t j = 1; j <= n; ++j) r.assignment[p[j] - 1] = static_cast<int>(j - 1);
  for (std::size_t i = 0; i < n; ++i) r.total += cost[i * n + r.assignment[i]];
  r.row_potential.assign(u.begin() + 1, u.end());
  r.col_potential.assign(v.begin() + 1, v.end());
  return r;
}

double dual_certificate_gap(std::span<const double> cost, std::size_t n, const AssignmentResult& r) {
  double worst = 0.0, dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dual += r.row_potential[i] + r.col_potential[i];
    for (std::size_t j = 0; j < n; ++j)
      worst = std::max(worst, r.row_potential[i] + r.col_potential[j] - cost[i * n + j]);
  }
  return std::max(worst, std::abs(dual - r.total));
}

namespace transport {

std::vector<double> pairwise_distances(const Ensemble& a, const Ensemble& b) {
  require(a[0].compatible(b[0]), "transport: ensembles live on different grids");
  const std::size_t N = a.size(), M = b.size();
  std::vector<double> d(N * M);
  parallel_for(N, [&](std::size_t i) {
    for (std::size_t j = 0; j < M; ++j) d[i * M + j] = l2_distance(a[i], b[j]);
  });
  return d;
}

Result wasserstein_exact(const Ensemble& a, const Ensemble& b, int p) {
  require(p == 1 || p == 2, "wasserstein: p must be 1 or 2");
  require(a.size() == b.size(), "wasserstein: exact solver needs equal member counts");
  require(a.size() <= 1024, "wasserstein: at most 1024 members");
  const std::size_t N = a.size();
  auto d = pairwise_distances(a, b);
  if (p == 2)
    for (double& x : d) x *= x;
  AssignmentResult ar = solve_assignment(d, N);
  Result r;
  r.plan.mode = TransportPlan::Mode::Permutation;
  r.plan.permutation = ar.assignment;
  r.plan.rows = r.plan.cols = N;
  r.plan.order = p;
  r.plan.cost = ar.total / double(N);
  r.value = std::pow(std::max(0.0, r.plan.cost), 1.0 / p);
  r.certificate_gap = dual_certificate_gap(d, N, ar);
  return r;
}

double w1(const Ensemble& a, const Ensemble& b) { return wasserstein_exact(a, b, 1).value; }
double w2(const Ensemble& a, const Ensemble& b) { return wasserstein_exact(a, b, 2).value; }

Result sinkhorn(const Ensemble& a, const Ensemble& b, int p, double epsilon, int max_iterations) {
  require(p == 1 || p == 2, "sinkhorn: p must be 1 or 2");
  require(epsilon > 0, "sinkhorn: epsilon must be positive");
  const std::size_t N = a.size(), M = b.size();
  auto C = pairwise_distances(a, b);
  if (p == 2)
    for (double& x : C) x *= x;
  const double logmu = -std::log(double(N)), lognu = -std::log(double(M));
  std::vector<double> f(N, 0.0), g(M, 0.0), tmp(std::max(N, M));

  auto lse = [](const std::vector<double>& x, std::size_t len) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, x[i]);
    double s = 0;
    for (std::size_t i = 0; i < len; ++i) s += std::exp(x[i] - mx);
    return mx + std::log(s);
  };
  auto violation = [&](double eps) {
    double v = 0;
    for (std::size_t i = 0; i < N; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < M; ++j) s += std::exp((f[i] + g[j] - C[i * M + j]) / eps);
      v += std::abs(s - 1.0 / N);
    }
    return v;
  };

  // geometric epsilon annealing from the cost scale down to the target
  double cmax = *std::max_element(C.begin(), C.end());
  double eps = std::max(epsilon, cmax);
  int it = 0;
  bool converged = false;
  while (it < max_iterations) {
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < M; ++j) tmp[j] = (g[j] - C[i * M + j]) / eps;
      f[i] = eps * (logmu - lse(tmp, M));
    }
    for (std::size_t j = 0; j < M; ++j) {
      for (std::size_t i = 0; i < N; ++i) tmp[i] = (f[i] - C[i * M + j]) / eps;
      g[j] = eps * (lognu - lse(tmp, N));
    }
    ++it;
    if (eps > epsilon) {
      if (violation(eps) < 1e-3) eps = std::max(epsilon, eps * 0.5);
      continue;
    }
    if (violation(eps) < 1e-6) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericalError("sinkhorn: marginal violation above 1e-6 after max iterations");

  Result r;
  r.plan.mode = TransportPlan::Mode::Dense;
  r.plan.rows = N;
  r.plan.cols = M;
  r.plan.order = p;
  r.plan.matrix.resize(N * M);
  double cost = 0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      double pij = std::exp((f[i] + g[j] - C[i * M + j]) / eps);
      r.plan.matrix[i * M + j] = pij;
      cost += pij * C[i * M + j];
    }
  r.plan.cost = cost;
  r.value = std::pow(std::max(0.0, cost), 1.0 / p);
  return r;
}

double diagonal_rms(const Ensemble& a, const Ensemble& b) {
  require_matching(a, b);
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = l2_distance(a[i], b[i]);
    s += d * d;
  }
  return std::sqrt(s / double(a.size()));
}

double dT(const LawCurve& a, const LawCurve& b) {
  require(a.times == b.times, "dT: curves must share a time grid");
  std::vector<double> w(a.size());
  for (std::size_t t = 0; t < a.size(); ++t) w[t] = w1(a.ensembles[t], b.ensembles[t]);
  double s = 0;
  for (std::size_t t = 1; t < a.size(); ++t) s += 0.5 * (a.times[t] - a.times[t - 1]) * (w[t] + w[t - 1]);
  return s;
}

Ensemble project_ensemble(const Ensemble& e, double K) {
  std::vector<GridField> out(e.size());
  parallel_for(e.size(), [&](std::size_t i) { out[i] = project_leq(e[i], K); });
  return Ensemble(std::move(out));
}

MetricReport capacity_coverage(const Ensemble& a, const Ensemble& b, double K) {
  require_matching(a, b);
  MetricReport r;
  r.K = K;
  r.W1 = w1(a, b);
  r.W2 = w2(a, b);
  r.tail_a = tail(a, K);
  r.tail_b = tail(b, K);
  r.train_K = w2(project_ensemble(a, K), project_ensemble(b, K));
  r.bound = r.tail_a + r.train_K + r.tail_b;
  r.satisfied = r.W2 <= r.bound + 1e-9;
  double scale = std::sqrt(moment(b, 2));
  r.b_band_limited = r.tail_b <= 1e-12 * std::max(1.0, scale);
  r.band_limited_bound = r.tail_a + r.train_K;
  r.band_limited_satisfied = !r.b_band_limited || r.W2 <= r.band_limited_bound + 1e-9;
  return r;
}

std::pair<Ensemble, Ensemble> pushforwards(const Ensemble& rho, const ReferenceMap& ref,
                                           const ModelKernel& model, std::uint64_t seed) {
  std::vector<GridField> r(rho.size()), m(rho.size());
  parallel_for(rho.size(), [&](std::size_t i) {
    r[i] = ref(rho[i]);
    m[i] = model(rho[i], derive_seed(seed, i));
  });
  return {Ensemble(std::move(r)), Ensemble(std::move(m))};
}

double one_step_defect(const Ensemble& rho, const ReferenceMap& ref, const ModelKernel& model, int p,
                       std::uint64_t seed) {
  auto [r, m] = pushforwards(rho, ref, model, seed);
  return wasserstein_exact(r, m, p).value;
}

}  // namespace transport
}  // namespace lawbound
