#include "lawbound/scores.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lawbound/parallel.hpp"
#include "lawbound/transport.hpp"

namespace lawbound::scores {

namespace {
double mean_abs_pairs(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (double x : a)
    for (double y : b) s += std::abs(x - y);
  return s / (double(a.size()) * double(b.size()));
}
double euclid(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}
double mean_dist_pairs(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double s = 0;
  for (const auto& x : a)
    for (const auto& y : b) s += euclid(x, y);
  return s / (double(a.size()) * double(b.size()));
}
void require_cloud(const std::vector<Vec>& a) {
  require(!a.empty(), "energy score: empty sample set");
  for (const auto& v : a) require(v.size() == a[0].size() && !v.empty(), "energy score: ragged samples");
}
}  // namespace

double crps(std::span<const double> samples, double observation) {
  require(!samples.empty(), "crps: need at least one sample");
  double s = 0;
  for (double x : samples) s += std::abs(x - observation);
  return s / double(samples.size()) - 0.5 * mean_abs_pairs(samples, samples);
}

double crps(std::span<const double> P, std::span<const double> Q) {
  require(!P.empty() && !Q.empty(), "crps: need at least one sample");
  return mean_abs_pairs(P, Q) - 0.5 * mean_abs_pairs(P, P) - 0.5 * mean_abs_pairs(Q, Q);
}

double w1_1d(std::span<const double> P, std::span<const double> Q) {
  require(!P.empty() && !Q.empty(), "w1: need at least one sample");
  std::vector<double> a(P.begin(), P.end()), b(Q.begin(), Q.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / double(a.size());
  }
  // integrate |F - G| between consecutive breakpoints
  std::vector<double> pts(a);
  pts.insert(pts.end(), b.begin(), b.end());
  std::sort(pts.begin(), pts.end());
  double s = 0;
  std::size_t ia = 0, ib = 0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    while (ia < a.size() && a[ia] <= pts[k]) ++ia;
    while (ib < b.size() && b[ib] <= pts[k]) ++ib;
    double F = double(ia) / a.size(), G = double(ib) / b.size();
    s += std::abs(F - G) * (pts[k + 1] - pts[k]);
  }
  return s;
}

double energy_score(const std::vector<Vec>& samples, const Vec& observation) {
  require_cloud(samples);
  require(observation.size() == samples[0].size(), "energy score: dimension mismatch");
  return mean_dist_pairs(samples, {observation}) - 0.5 * mean_dist_pairs(samples, samples);
}

double energy_score(const std::vector<Vec>& P, const std::vector<Vec>& Q) {
  require_cloud(P);
  require_cloud(Q);
  require(P[0].size() == Q[0].size(), "energy score: dimension mismatch");
  return mean_dist_pairs(P, Q) - 0.5 * mean_dist_pairs(P, P) - 0.5 * mean_dist_pairs(Q, Q);
}

double w1_euclidean(const std::vector<Vec>& P, const std::vector<Vec>& Q) {
  require_cloud(P);
  require_cloud(Q);
  require(P.size() == Q.size(), "w1: equal sample counts required");
  const std::size_t n = P.size();
  std::vector<double> c(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = euclid(P[i], Q[j]);
  return solve_assignment(c, n).total / double(n);
}

Report crps_w1_check(std::span<const double> P, std::span<const double> Pprime, std::span<const double> Q,
                     double slack) {
  require(P.size() == Q.size() && Pprime.size() == Q.size(), "crps check: equal sizes required");
  Report r;
  r.command = "scores";
  double c = crps(P, Q);
  r.add(check_leq("crps_le_2w1", c, 2 * w1_1d(P, Q), 0.0, slack));
  r.add(check_leq("crps_lipschitz", std::abs(c - crps(Pprime, Q)), 2 * w1_1d(P, Pprime), 0.0, slack));
  r.add(check_leq("crps_nonnegative", -c, 0.0, 0.0, slack));
  return r;
}

namespace {
std::vector<double> random_law(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_real_distribution<double> U(-2.0, 2.0), S(0.1, 2.0);
  std::normal_distribution<double> Z(0.0, 1.0);
  int k = kind(rng);
  double m = U(rng), s = S(rng), m2 = U(rng);
  std::vector<double> x(n);
  for (auto& v : x) {
    if (k == 0) v = m + s * Z(rng);
    else if (k == 1) v = m + s * U(rng);
    else v = (U(rng) > 0 ? m : m2) + 0.1 * s * Z(rng);
  }
  return x;
}

// Keeps the worst (largest value - bound) instance of a named check.
void keep_worst(Report& acc, const Report& r) {
  for (const auto& c : r.checks) {
    auto it = std::find_if(acc.checks.begin(), acc.checks.end(), [&](const Check& a) { return a.name == c.name; });
    if (it == acc.checks.end()) acc.add(c);
    else if (c.value - c.bound > it->value - it->bound || !c.satisfied) {
      bool keep_sat = it->satisfied && c.satisfied;
      *it = c;
      it->satisfied = keep_sat;
    }
  }
}
}  // namespace

Report crps_w1_suite(int triples, std::size_t samples, std::uint64_t seed, double slack) {
  Report acc;
  acc.command = "scores";
  for (int t = 0; t < triples; ++t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    auto P = random_law(rng, samples), Pp = random_law(rng, samples), Q = random_law(rng, samples);
    keep_worst(acc, crps_w1_check(P, Pp, Q, slack));
  }
  acc.metrics["triples"] = triples;
  return acc;
}

Report energy_w1_suite(int pairs, std::size_t samples, int dim, std::uint64_t seed, double slack) {
  Report acc;
  acc.command = "scores";
  double worst_1d = 0;
  for (int t = 0; t < pairs; ++t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    std::vector<Vec> P(samples, Vec(dim)), Q(samples, Vec(dim));
    for (int c = 0; c < dim; ++c) {
      auto a = random_law(rng, samples), b = random_law(rng, samples);
      for (std::size_t i = 0; i < samples; ++i) {
        P[i][c] = a[i];
        Q[i][c] = b[i];
      }
    }
    Report r;
    double es = energy_score(P, Q);
    r.add(check_leq("energy_le_2w1", es, 2 * w1_euclidean(P, Q), 0.0, slack));
    keep_worst(acc, r);
    // one-dimensional slices reproduce CRPS
    std::vector<Vec> P1(samples, Vec(1)), Q1(samples, Vec(1));
    std::vector<double> p1(samples), q1(samples);
    for (std::size_t i = 0; i < samples; ++i) {
      P1[i][0] = p1[i] = P[i][0];
      Q1[i][0] = q1[i] = Q[i][0];
    }
    worst_1d = std::max(worst_1d, std::abs(energy_score(P1, Q1) - crps(p1, q1)));
    worst_1d = std::max(worst_1d, std::abs(energy_score(P1, Vec{q1[0]}) - crps(p1, q1[0])));
  }
  acc.add(check_leq("energy_score_m1_equals_crps", worst_1d, 0.0, 0.0, 1e-12));
  return acc;
}

// ---------------------------------------------------------------- resolved observables

ResolvedObservable inner_product_observable(GridField psi) {
  ResolvedObservable o;
  o.kind = ResolvedObservable::Kind::InnerProduct;
  o.lipschitz = l2_norm(psi);
  require(o.lipschitz > 0, "observable: representing field must be nonzero");
  o.psi = std::move(psi);
  return o;
}

ResolvedObservable mollified_evaluation(const Grid& g, std::array<double, 2> x, int component, double width) {
  require(g.d == 2, "mollifier: 2D grids only");
  require(component == 0 || component == 1, "mollifier: component must be 0 or 1");
  require(width > 0 && width <= 1.0, "mollifier: width must lie in (0, 1]");
  constexpr double two_pi = 2.0 * 3.14159265358979323846;
  GridField psi(g, 2);
  const double h = g.spacing(), norm = 1.0 / (two_pi * width * width);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      double s = 0;
      for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b) {
          double dx = i * h - x[0] + a * two_pi, dy = j * h - x[1] + b * two_pi;
          s += std::exp(-(dx * dx + dy * dy) / (2 * width * width));
        }
      psi.at(component, std::size_t(i) * g.n + j) = norm * s;
    }
  ResolvedObservable o = inner_product_observable(std::move(psi));
  o.kind = ResolvedObservable::Kind::MollifiedPoint;
  return o;
}

CrpsCurve crps_curve(const LawCurve& a, const LawCurve& b, const ResolvedObservable& obs) {
  require(a.times == b.times, "crps curve: time grids differ");
  const std::size_t T = a.times.size();
  CrpsCurve c;
  c.t = a.times;
  c.crps.resize(T);
  c.w1_pushforward.resize(T);
  c.w1_fields.resize(T);
  c.bound.resize(T);
  for (std::size_t k = 0; k < T; ++k) {
    const Ensemble &ea = a.ensembles[k], &eb = b.ensembles[k];
    std::vector<double> P(ea.size()), Q(eb.size());
    parallel_for(ea.size(), [&](std::size_t i) { P[i] = obs(ea[i]); });
    parallel_for(eb.size(), [&](std::size_t i) { Q[i] = obs(eb[i]); });
    c.crps[k] = crps(P, Q);
    c.w1_pushforward[k] = w1_1d(P, Q);
    c.w1_fields[k] = transport::w1(ea, eb);
    c.bound[k] = 2 * obs.lipschitz * c.w1_fields[k];
  }
  for (std::size_t k = 1; k < T; ++k) {
    double h = c.t[k] - c.t[k - 1];
    c.integrated_crps += 0.5 * h * (c.crps[k] + c.crps[k - 1]);
    c.dT += 0.5 * h * (c.w1_fields[k] + c.w1_fields[k - 1]);
  }
  return c;
}

Report crps_dT_check(const CrpsCurve& c, const ResolvedObservable& obs, double slack) {
  Report r;
  r.command = "scores";
  r.add(check_leq("integrated_crps_le_2lip_dT", c.integrated_crps, 2 * obs.lipschitz * c.dT, slack, 1e-15));
  double worst_push = -INFINITY, worst_field = -INFINITY;
  for (std::size_t k = 0; k < c.t.size(); ++k) {
    worst_push = std::max(worst_push, c.crps[k] - 2 * c.w1_pushforward[k]);
    worst_field = std::max(worst_field, 2 * c.w1_pushforward[k] - c.bound[k] * (1 + slack));
  }
  r.add(check_leq("crps_le_2w1_pushforward", worst_push, 0.0, 0.0, 1e-12));
  r.add(check_leq("pushforward_contraction", worst_field, 0.0, 0.0, 1e-12));
  r.metrics["integrated_crps"] = c.integrated_crps;
  r.metrics["dT"] = c.dT;
  r.metrics["lipschitz"] = obs.lipschitz;
  return r;
}

Report crps_dT_check(const LawCurve& a, const LawCurve& b, const ResolvedObservable& obs, double slack) {
  return crps_dT_check(crps_curve(a, b, obs), obs, slack);
}

// ---------------------------------------------------------------- likelihood certificates

void validate(const QuadraticCertificate& c) {
  require(c.lambda > 0, "certificate: lambda must be positive");
  require(c.C_R > 0, "certificate: C_R must be positive");
  require(c.clip > 0, "certificate: clip level must be positive");
}

double DownUp::multiplier(double k2) const {
  double kc = coarse_n / 2.0;
  return 1.0 + gain_slope * k2 / (kc * kc);
}

double DownUp::stability_constant() const {
  Grid cg(2, coarse_n);
  double m = 0;
  for (std::size_t i = 0; i < cg.points(); ++i)
    if (!cg.is_nyquist(i)) m = std::max(m, std::abs(multiplier(cg.wavenorm2(i))));
  return m;
}

GridField DownUp::down(const GridField& u) const {
  require(u.grid().n == fine_n && coarse_n < fine_n, "down: grid mismatch");
  Grid cg(2, coarse_n);
  SpecField U = forward(u), C(cg, u.components());
  for (std::size_t i = 0; i < cg.points(); ++i) {
    if (cg.is_nyquist(i)) continue;
    std::size_t j = u.grid().index_of(cg.wavevector(i));
    for (int c = 0; c < u.components(); ++c) C.at(c, i) = U.at(c, j);
  }
  return inverse(C);
}

GridField DownUp::up(const GridField& z) const {
  require(z.grid().n == coarse_n, "up: grid mismatch");
  Grid fg(2, fine_n);
  const Grid& cg = z.grid();
  SpecField Z = forward(z), F(fg, z.components());
  for (std::size_t i = 0; i < cg.points(); ++i) {
    if (cg.is_nyquist(i)) continue;
    std::size_t j = fg.index_of(cg.wavevector(i));
    double m = multiplier(cg.wavenorm2(i));
    for (int c = 0; c < z.components(); ++c) F.at(c, j) = m * Z.at(c, i);
  }
  return inverse(F);
}

XnllSummary xnll_check(const Ensemble& inputs, const Ensemble& model_outputs, const TruthMap& truth,
                       const QuadraticCertificate& cert, const DownUp* reconstruction) {
  validate(cert);
  require(inputs.size() == model_outputs.size() && inputs.size() > 0, "xnll: pipeline coupling needs equal sizes");
  const std::size_t N = inputs.size();
  std::vector<double> mse(N), xnll(N);
  parallel_for(N, [&](std::size_t i) {
    GridField bt = truth(inputs[i]);
    require(bt.compatible(model_outputs[i]), "xnll: truth and model outputs differ in shape");
    GridField diff = model_outputs[i] - bt;
    xnll[i] = 0.5 * cert.lambda * inner(diff, diff);
    if (reconstruction) {
      GridField rd = reconstruction->up(model_outputs[i]) - reconstruction->up(bt);
      mse[i] = inner(rd, rd);
    } else {
      mse[i] = inner(diff, diff);
    }
  });
  XnllSummary s;
  for (std::size_t i = 0; i < N; ++i) {
    s.mse += mse[i] / N;
    s.expected_xnll += xnll[i] / N;
  }
  double CR = reconstruction ? std::max(cert.C_R, reconstruction->stability_constant()) : cert.C_R;
  s.bound = 2 * CR * CR / cert.lambda * s.expected_xnll;
  s.equality_gap = s.bound > 0 ? std::abs(s.mse - s.bound) / s.bound : std::abs(s.mse);
  s.report.command = "scores";
  s.report.add(check_leq("xnll_to_mse", s.mse, s.bound, 1e-12, 1e-300));
  if (!reconstruction && cert.C_R == 1.0) s.report.add(check_leq("quadratic_equality_gap", s.equality_gap, 0.0, 0.0, 1e-10));
  double clipped = 0;
  for (double v : clipped_certificate(xnll, cert.clip)) clipped += v / N;
  s.report.metrics["mse"] = s.mse;
  s.report.metrics["expected_xnll"] = s.expected_xnll;
  s.report.metrics["expected_clipped_xnll"] = clipped;
  s.report.metrics["C_R"] = CR;
  return s;
}

double clip(double r, double M) {
  require(M > 0, "clip: level must be positive");
  return std::max(-M, std::min(r, M));
}

std::vector<double> clipped_certificate(std::span<const double> values, double M) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(clip(v, M));
  return out;
}

Report tail_bound_report(const Ensemble& a, const Ensemble& b, std::span<const double> radii) {
  require(a.size() == b.size() && a.size() > 0, "tail bound: coupled ensembles need equal sizes");
  const std::size_t N = a.size();
  std::vector<double> s(N);
  double m2 = 0;
  for (std::size_t i = 0; i < N; ++i) {
    double na = l2_norm(a[i]), nb = l2_norm(b[i]);
    s[i] = na + nb;
    m2 += (na * na + nb * nb) / N;
  }
  Report r;
  r.command = "scores";
  for (std::size_t k = 0; k < radii.size(); ++k) {
    require(radii[k] > 0, "tail bound: radii must be positive");
    double count = 0;
    for (double v : s) count += v > radii[k] ? 1.0 : 0.0;
    r.add(check_leq("tail_R" + std::to_string(k), count / N, 2 * m2 / (radii[k] * radii[k]), 1e-9));
  }
  r.metrics["second_moment_sum"] = m2;
  return r;
}

}  // namespace lawbound::scores
