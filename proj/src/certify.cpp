#include "lawbound/certify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lawbound/parallel.hpp"

namespace lawbound::certify {

// ---------------------------------------------------------------- tests

double TestTuple::theta(double t) const {
  if (t >= T) return 0.0;
  double s = 1.0 - t / T;
  return s * s * s;
}

double TestTuple::dtheta(double t) const {
  if (t >= T) return 0.0;
  double s = 1.0 - t / T;
  return -3.0 * s * s / T;
}

double TestTuple::norm_factor() const {
  double f = 0;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    double p = l2_norm(tests[i]);  // theta peaks at t = 0 with value 1
    for (std::size_t j = 0; j < tests.size(); ++j)
      if (j != i) p *= l2_norm(tests[j]);
    f += p;
  }
  return f;
}

TestTuple make_test_tuple(const Grid& g, int k, double K_test, double T, std::uint64_t seed) {
  require(k >= 1 && k <= 3, "tests: k must be in 1..3");
  require(T > 0, "tests: horizon must be positive");
  TestTuple tt;
  tt.T = T;
  for (int i = 0; i < k; ++i) tt.tests.push_back(random_divfree(g, 0.0, K_test, derive_seed(seed, i)));
  return tt;
}

// ---------------------------------------------------------------- resolved drift

namespace {

int linf_band(const SpecField& U) {
  double mx = 0;
  for (const auto& z : U.coeffs()) mx = std::max(mx, std::abs(z));
  if (mx == 0) return 0;
  int band = 0;
  const Grid& g = U.grid();
  for (int c = 0; c < U.components(); ++c)
    for (std::size_t i = 0; i < U.points(); ++i)
      if (std::abs(U.at(c, i)) > 1e-14 * mx) {
        auto k = g.wavevector(i);
        band = std::max({band, std::abs(k[0]), std::abs(k[1])});
      }
  return band;
}

// -div(u x u) restricted to |k| <= K, exact for band-limited u.
SpecField minus_div_flux(const GridField& u, double K) {
  const Grid& g = u.grid();
  require(g.d == 2 && u.components() == 2, "euler drift: expected a 2D velocity field");
  require(K >= 1, "euler drift: K must be at least 1");
  require(K < g.n / 3.0, "euler drift: K must be below n/3");
  SpecField U = forward(u);
  const int band = linf_band(U);
  require(band <= g.n / 3, "euler drift: u must be band-limited to n/3");
  const int Kinf = static_cast<int>(std::floor(K));
  int npad = 8;
  while (npad <= 2 * band + Kinf) npad *= 2;
  Grid pg(2, npad);
  SpecField P(pg, 2);
  for (std::size_t i = 0; i < g.points(); ++i) {
    auto k = g.wavevector(i);
    if (std::abs(k[0]) > band || std::abs(k[1]) > band) continue;
    std::size_t j = pg.index_of(k);
    P.at(0, j) = U.at(0, i);
    P.at(1, j) = U.at(1, i);
  }
  GridField up = inverse(P);
  GridField prod(pg, 3);  // xx, xy, yy
  for (std::size_t i = 0; i < pg.points(); ++i) {
    double a = up.at(0, i), b = up.at(1, i);
    prod.at(0, i) = a * a;
    prod.at(1, i) = a * b;
    prod.at(2, i) = b * b;
  }
  SpecField Q = forward(prod);
  SpecField out(g, 2);
  for (std::size_t i = 0; i < g.points(); ++i) {
    if (g.wavenorm2(i) > K * K) continue;
    auto k = g.wavevector(i);
    std::size_t j = pg.index_of(k);
    cplx ikx(0, k[0]), iky(0, k[1]);
    out.at(0, i) = -(ikx * Q.at(0, j) + iky * Q.at(1, j));
    out.at(1, i) = -(ikx * Q.at(1, j) + iky * Q.at(2, j));
  }
  return out;
}

}  // namespace

GridField euler_drift_resolved(const GridField& u, double K) { return inverse(leray_project(minus_div_flux(u, K))); }

GridField euler_drift_unprojected(const GridField& u, double K) { return inverse(minus_div_flux(u, K)); }

double euler_drift_pairing_quadrature(const GridField& u, const GridField& phi) {
  require(u.compatible(phi) && u.components() == 2, "pairing: shape mismatch");
  SpecField P = forward(phi);
  GridField dx = inverse(derivative(P, 0)), dy = inverse(derivative(P, 1));
  double s = 0;
  for (std::size_t i = 0; i < u.points(); ++i) {
    double a = u.at(0, i), b = u.at(1, i);
    // u_i u_j d_j phi_i
    s += a * a * dx.at(0, i) + a * b * (dy.at(0, i) + dx.at(1, i)) + b * b * dy.at(1, i);
  }
  return s * u.grid().cell_volume();
}

// ---------------------------------------------------------------- product observables

namespace {
std::vector<double> pairings(const TestTuple& tt, const GridField& u) {
  std::vector<double> a;
  for (const auto& p : tt.tests) a.push_back(inner(u, p));
  return a;
}
double product_except(const std::vector<double>& a, double th, std::size_t skip) {
  double p = 1;
  for (std::size_t j = 0; j < a.size(); ++j)
    if (j != skip) p *= th * a[j];
  return p;
}
}  // namespace

double product_observable(const TestTuple& tt, double t, const GridField& u) {
  double th = tt.theta(t), p = 1;
  for (double a : pairings(tt, u)) p *= th * a;
  return p;
}

double dt_product_observable(const TestTuple& tt, double t, const GridField& u) {
  auto a = pairings(tt, u);
  double th = tt.theta(t), dth = tt.dtheta(t), s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += dth * a[i] * product_except(a, th, i);
  return s;
}

double directional_derivative(const TestTuple& tt, double t, const GridField& u, const GridField& w) {
  auto a = pairings(tt, u);
  double th = tt.theta(t), s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += th * inner(w, tt.tests[i]) * product_except(a, th, i);
  return s;
}

// ---------------------------------------------------------------- drifts and curves

DriftSpec DriftSpec::make(const Grid& g, double K, double epsilon, std::uint64_t seed) {
  DriftSpec d;
  d.K = K;
  d.epsilon = epsilon;
  d.shear = 1.0;
  d.g0 = 0.5 * random_divfree(g, 0.0, std::min(K, 4.0), seed);
  return d;
}

GridField DriftSpec::perturbation(const GridField& u) const {
  GridField p = inverse(project_leq(derivative(forward(u), 0), K));
  p *= shear;
  p += g0;
  return p;
}

GridField DriftSpec::apply(const GridField& u) const {
  GridField b = euler_drift_resolved(u, K);
  if (epsilon != 0.0) b.axpy(epsilon, perturbation(u));
  return b;
}

Drift DriftSpec::learned() const {
  DriftSpec self = *this;
  return [self](double, const GridField& u) { return self.apply(u); };
}

Drift DriftSpec::resolved() const {
  double K_ = K;
  return [K_](double, const GridField& u) { return euler_drift_resolved(u, K_); };
}

LawCurve drift_driven_curve(const Ensemble& init, const Drift& drift, double T, double dt) {
  const long steps = std::lround(T / dt);
  require(steps >= 1 && std::abs(steps * dt - T) <= 1e-9 * std::max(1.0, T), "curve: T must be a multiple of dt");
  const std::size_t N = init.size();
  std::vector<std::vector<GridField>> states(steps + 1, std::vector<GridField>(N));
  parallel_for(N, [&](std::size_t i) {
    GridField x = init[i];
    states[0][i] = x;
    for (long n = 0; n < steps; ++n) {
      double t = n * dt;
      GridField k1 = drift(t, x);
      GridField k2 = drift(t + 0.5 * dt, GridField(x).axpy(0.5 * dt, k1));
      GridField k3 = drift(t + 0.5 * dt, GridField(x).axpy(0.5 * dt, k2));
      GridField k4 = drift(t + dt, GridField(x).axpy(dt, k3));
      for (std::size_t q = 0; q < x.size(); ++q)
        x.values()[q] += dt / 6.0 * (k1.values()[q] + 2 * k2.values()[q] + 2 * k3.values()[q] + k4.values()[q]);
      if (!x.all_finite()) throw NumericalError("curve: non-finite state");
      states[n + 1][i] = x;
    }
  });
  std::vector<double> times;
  std::vector<Ensemble> ens;
  for (long n = 0; n <= steps; ++n) {
    times.push_back(n == steps ? T : n * dt);
    ens.emplace_back(std::move(states[n]));
  }
  return LawCurve(std::move(times), std::move(ens));
}

namespace {

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) {
    double h = t[i] - t[i - 1];
    w[i - 1] += 0.5 * h;
    w[i] += 0.5 * h;
  }
  return w;
}

struct NodeValues {
  double direct = 0, defect = 0, drift_sq = 0, F0 = 0, absF0 = 0;
};

// Evaluates every per-(time, member) quantity once.
std::vector<std::vector<NodeValues>> evaluate_nodes(const LawCurve& c, const TestTuple& tt, const Drift& resolved,
                                                    const Drift* learned) {
  const std::size_t Tn = c.size(), N = c.ensembles[0].size();
  std::vector<std::vector<NodeValues>> v(Tn, std::vector<NodeValues>(N));
  parallel_for(Tn * N, [&](std::size_t q) {
    std::size_t t = q / N, i = q % N;
    const GridField& u = c.ensembles[t][i];
    double time = c.times[t];
    NodeValues& nv = v[t][i];
    if (tt.theta(time) == 0.0 && !learned) return;
    GridField bstar = resolved(time, u);
    nv.direct = dt_product_observable(tt, time, u) + directional_derivative(tt, time, u, bstar);
    if (learned) {
      GridField diff = bstar - (*learned)(time, u);
      nv.defect = directional_derivative(tt, time, u, diff);
      nv.drift_sq = inner(diff, diff);
    }
    if (t == 0) {
      nv.F0 = product_observable(tt, 0.0, u);
      nv.absF0 = std::abs(nv.F0);
    }
  });
  return v;
}

}  // namespace

double residual_direct(const LawCurve& c, const TestTuple& tt, const Drift& resolved) {
  auto v = evaluate_nodes(c, tt, resolved, nullptr);
  auto w = trapezoid_weights(c.times);
  const double N = double(c.ensembles[0].size());
  double r = 0;
  for (std::size_t t = 0; t < c.size(); ++t) {
    double m = 0;
    for (const auto& nv : v[t]) m += nv.direct;
    r += w[t] * m / N;
  }
  double f0 = 0;
  for (const auto& nv : v[0]) f0 += nv.F0;
  return r + f0 / N;
}

double residual_direct(const LawCurve& c, const TestTuple& tt, double K) {
  return residual_direct(c, tt, [K](double, const GridField& u) { return euler_drift_resolved(u, K); });
}

double residual_via_defect(const LawCurve& c, const TestTuple& tt, const Drift& resolved, const Drift& learned) {
  auto v = evaluate_nodes(c, tt, resolved, &learned);
  auto w = trapezoid_weights(c.times);
  const double N = double(c.ensembles[0].size());
  double r = 0;
  for (std::size_t t = 0; t < c.size(); ++t) {
    double m = 0;
    for (const auto& nv : v[t]) m += nv.defect;
    r += w[t] * m / N;
  }
  return r;
}

double residual_via_defect(const LawCurve& c, const TestTuple& tt, const DriftSpec& drift) {
  return residual_via_defect(c, tt, drift.resolved(), drift.learned());
}

ResidualSummary residual_bound_check(const LawCurve& c, const TestTuple& tt, const DriftSpec& drift) {
  Drift learned = drift.learned();
  auto v = evaluate_nodes(c, tt, drift.resolved(), &learned);
  auto w = trapezoid_weights(c.times);
  const double N = double(c.ensembles[0].size());
  ResidualSummary s;
  double f0 = 0, absf0 = 0;
  for (std::size_t t = 0; t < c.size(); ++t) {
    double d = 0, f = 0, l = 0;
    for (const auto& nv : v[t]) {
      d += nv.direct;
      f += nv.defect;
      l += nv.drift_sq;
    }
    s.residual_direct += w[t] * d / N;
    s.residual_defect += w[t] * f / N;
    s.L_drift += w[t] * l / N;
  }
  for (const auto& nv : v[0]) {
    f0 += nv.F0;
    absf0 += nv.absF0;
  }
  s.residual_direct += f0 / N;
  double scale = std::max({absf0 / N, std::abs(s.residual_direct), std::abs(s.residual_defect)});
  s.rel_gap = scale > 0 ? std::abs(s.residual_direct - s.residual_defect) / scale : 0.0;
  const int k = tt.k();
  for (const auto& e : c.ensembles) s.M_2k = std::max(s.M_2k, moment(e, 2 * k));
  s.bound = std::sqrt(c.horizon()) * std::pow(s.M_2k, double(k - 1) / (2.0 * k)) * tt.norm_factor() *
            std::sqrt(s.L_drift);
  s.satisfied = std::abs(s.residual_defect) <= s.bound * (1 + 1e-9);
  s.report.command = "certify";
  s.report.add(check_leq("route_agreement", s.rel_gap, 0.0, 0.0, 1e-5));
  s.report.add(check_leq("residual_bound", std::abs(s.residual_defect), s.bound, 1e-9));
  s.report.metrics["residual_direct"] = s.residual_direct;
  s.report.metrics["residual_defect"] = s.residual_defect;
  s.report.metrics["rel_gap"] = s.rel_gap;
  s.report.metrics["L_drift"] = s.L_drift;
  s.report.metrics["M_2k"] = s.M_2k;
  s.report.metrics["bound"] = s.bound;
  return s;
}

// ---------------------------------------------------------------- Gaussian diffusion

GaussianDiffusion GaussianDiffusion::make(int dim, Schedule s, double rate, std::uint64_t seed) {
  require(dim >= 1, "diffusion: dimension must be positive");
  require(rate > 0, "diffusion: rate must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  auto randn = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = z(rng);
    return m;
  };
  GaussianDiffusion gd;
  gd.schedule = s;
  gd.rate = rate;
  gd.m0 = randn(dim, 1);
  Eigen::MatrixXd A = randn(dim, dim) / std::sqrt(double(dim));
  gd.S0 = A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(dim, dim);
  gd.B = randn(dim, dim) / std::sqrt(double(dim));
  gd.e = randn(dim, 1);
  return gd;
}

double GaussianDiffusion::sigma(double) const {
  return schedule == Schedule::VarianceExploding ? rate : std::sqrt(rate);
}

Eigen::VectorXd GaussianDiffusion::mean(double tau) const {
  if (schedule == Schedule::VarianceExploding) return m0;
  return std::exp(-0.5 * rate * tau) * m0;
}

Eigen::MatrixXd GaussianDiffusion::cov(double tau) const {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim(), dim());
  if (schedule == Schedule::VarianceExploding) return S0 + rate * rate * tau * I;
  double a = std::exp(-rate * tau);
  return a * S0 + (1 - a) * I;
}

double gaussian_sq_expectation(const Affine& f, const Eigen::VectorXd& m, const Eigen::MatrixXd& S) {
  Eigen::VectorXd mu = f(m);
  return (f.F * S * f.F.transpose()).trace() + mu.squaredNorm();
}

Affine forward_drift(const GaussianDiffusion& gd, double) {
  const int n = gd.dim();
  if (gd.schedule == Schedule::VarianceExploding) return {Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  return {-0.5 * gd.rate * Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n)};
}

Affine exact_score(const GaussianDiffusion& gd, double tau) {
  Eigen::MatrixXd P = gd.cov(tau).llt().solve(Eigen::MatrixXd::Identity(gd.dim(), gd.dim()));
  return {-P, P * gd.mean(tau)};
}

Affine learned_score(const GaussianDiffusion& gd, double tau, double c) {
  Affine s = exact_score(gd, tau);
  s.F += c * gd.B;
  s.g += c * (gd.e - gd.B * gd.mean(tau));
  return s;
}

Affine pf_drift(const GaussianDiffusion& gd, double tau, const Affine& score) {
  Affine a = forward_drift(gd, tau);
  double h = 0.5 * gd.sigma(tau) * gd.sigma(tau);
  return {a.F - h * score.F, a.g - h * score.g};
}

PfIdentity pf_identity(const GaussianDiffusion& gd, const std::vector<double>& taus, double c) {
  PfIdentity r;
  r.taus = taus;
  for (double tau : taus) {
    Affine s = exact_score(gd, tau), sl = learned_score(gd, tau, c);
    Affine diff_b = pf_drift(gd, tau, sl) - pf_drift(gd, tau, s);
    double sig = gd.sigma(tau);
    double lhs = gaussian_sq_expectation(diff_b, gd.mean(tau), gd.cov(tau));
    double rhs = 0.25 * std::pow(sig, 4) * gaussian_sq_expectation(sl - s, gd.mean(tau), gd.cov(tau));
    r.drift_side.push_back(lhs);
    r.score_side.push_back(rhs);
    double scale = std::max(std::abs(lhs), std::abs(rhs));
    if (scale > 0) r.max_rel_gap = std::max(r.max_rel_gap, std::abs(lhs - rhs) / scale);
  }
  for (std::size_t i = 1; i < taus.size(); ++i) {
    double h = taus[i] - taus[i - 1];
    r.integrated_drift += 0.5 * h * (r.drift_side[i] + r.drift_side[i - 1]);
    r.integrated_score += 0.5 * h * (r.score_side[i] + r.score_side[i - 1]);
  }
  return r;
}

MarginalReport pf_marginal_check(const GaussianDiffusion& gd, const std::vector<double>& taus, std::size_t samples,
                                 std::uint64_t seed, int rk4_steps) {
  require(samples >= 2, "marginal: need at least two samples");
  require(!taus.empty() && taus.front() >= 0, "marginal: taus must be nonnegative");
  const int n = gd.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd L = gd.S0.llt().matrixL();
  Eigen::MatrixXd X(n, samples);
  for (std::size_t s = 0; s < samples; ++s) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = z(rng);
    X.col(s) = gd.m0 + L * w;
  }
  auto b = [&](double tau) { return pf_drift(gd, tau, exact_score(gd, tau)); };
  auto apply = [](const Affine& f, const Eigen::MatrixXd& Y) -> Eigen::MatrixXd {
    return (f.F * Y).colwise() + f.g;
  };
  MarginalReport r;
  double now = 0;
  for (double tau : taus) {
    require(tau >= now, "marginal: taus must be nondecreasing");
    if (tau > now) {
      int steps = std::max(1, static_cast<int>(std::ceil((tau - now) * rk4_steps)));
      double h = (tau - now) / steps;
      for (int k = 0; k < steps; ++k) {
        double t = now + k * h;
        Eigen::MatrixXd k1 = apply(b(t), X);
        Eigen::MatrixXd k2 = apply(b(t + 0.5 * h), X + 0.5 * h * k1);
        Eigen::MatrixXd k3 = apply(b(t + 0.5 * h), X + 0.5 * h * k2);
        Eigen::MatrixXd k4 = apply(b(t + h), X + h * k3);
        X += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      }
      now = tau;
    }
    Eigen::VectorXd mh = X.rowwise().mean();
    Eigen::MatrixXd C = X.colwise() - mh;
    Eigen::MatrixXd Sh = C * C.transpose() / double(samples - 1);
    Eigen::VectorXd m = gd.mean(tau);
    Eigen::MatrixXd S = gd.cov(tau);
    for (int i = 0; i < n; ++i) {
      r.worst_mean_z = std::max(r.worst_mean_z, std::abs(mh(i) - m(i)) / std::sqrt(S(i, i) / samples));
      for (int j = 0; j <= i; ++j) {
        double se = std::sqrt((S(i, i) * S(j, j) + S(i, j) * S(i, j)) / samples);
        r.worst_cov_z = std::max(r.worst_cov_z, std::abs(Sh(i, j) - S(i, j)) / se);
      }
    }
  }
  return r;
}

Report pf_identities(const GaussianDiffusion& gd, const std::vector<double>& taus, double c, std::size_t samples,
                     std::uint64_t seed) {
  PfIdentity id = pf_identity(gd, taus, c);
  Report r;
  r.command = "pfode";
  r.add(check_leq("score_to_drift_identity", id.max_rel_gap, 0.0, 0.0, 1e-10));
  double iscale = std::max(std::abs(id.integrated_drift), std::abs(id.integrated_score));
  double igap = iscale > 0 ? std::abs(id.integrated_drift - id.integrated_score) / iscale : 0.0;
  r.add(check_leq("integrated_identity", igap, 0.0, 0.0, 1e-10));
  if (samples > 0) {
    MarginalReport m = pf_marginal_check(gd, taus, samples, seed);
    r.add(check_leq("marginal_mean_z", m.worst_mean_z, 3.0, 0.0));
    r.add(check_leq("marginal_cov_z", m.worst_cov_z, 3.0, 0.0));
  }
  r.metrics["integrated_drift_side"] = id.integrated_drift;
  r.metrics["integrated_score_side"] = id.integrated_score;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    r.metrics["gap_tau_" + std::to_string(i)] =
        std::abs(id.drift_side[i] - id.score_side[i]) / std::max(1e-300, std::max(id.drift_side[i], id.score_side[i]));
  }
  return r;
}

}  // namespace lawbound::certify
