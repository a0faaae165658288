#include "lawbound/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "lawbound/parallel.hpp"

namespace lawbound {

Ensemble::Ensemble(std::vector<GridField> members) : members_(std::move(members)) {
  require(!members_.empty(), "ensemble: needs at least one member");
  for (const auto& m : members_)
    require(m.compatible(members_.front()), "ensemble: members must share grid and component count");
}

LawCurve::LawCurve(std::vector<double> t, std::vector<Ensemble> e)
    : times(std::move(t)), ensembles(std::move(e)) {
  require(times.size() == ensembles.size(), "law curve: times and ensembles differ in length");
  require(times.size() >= 2, "law curve: needs at least two times");
  require(times.front() == 0.0, "law curve: first time must be 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    require(times[i] > times[i - 1], "law curve: times must be strictly increasing");
    require(ensembles[i][0].compatible(ensembles[0][0]), "law curve: grids differ across times");
  }
}

void require_matching(const Ensemble& a, const Ensemble& b) {
  require(a[0].compatible(b[0]), "ensembles live on different grids");
  require(a.size() == b.size(), "ensembles have different member counts");
}

double moment(const Ensemble& e, int p) {
  require(p >= 2 && p % 2 == 0, "moment: p must be a positive even integer");
  double s = 0.0;
  for (const auto& u : e) s += std::pow(inner(u, u), p / 2);
  return s / static_cast<double>(e.size());
}

std::vector<double> mean_power_spectrum(const Ensemble& e) {
  const std::size_t pts = e.grid().points();
  std::vector<std::vector<double>> per(e.size());
  parallel_for(e.size(), [&](std::size_t m) {
    SpecField F = forward(e[m]);
    std::vector<double> p(pts, 0.0);
    for (int c = 0; c < F.components(); ++c)
      for (std::size_t i = 0; i < pts; ++i) p[i] += std::norm(F.at(c, i));
    per[m] = std::move(p);
  });
  std::vector<double> mean(pts, 0.0);
  for (const auto& p : per)
    for (std::size_t i = 0; i < pts; ++i) mean[i] += p[i];
  for (double& v : mean) v /= static_cast<double>(e.size());
  return mean;
}

std::vector<double> tail_sweep_from_spectrum(const Grid& g, std::span<const double> power,
                                             std::span<const double> Ks) {
  std::vector<double> out;
  out.reserve(Ks.size());
  for (double K : Ks) {
    require(K >= 1, "tail: K must be at least 1");
    double s = 0.0;
    for (std::size_t i = 0; i < g.points(); ++i)
      if (g.wavenorm2(i) > K * K) s += power[i];
    out.push_back(std::sqrt(s * g.domain_volume()));
  }
  return out;
}

std::vector<double> tail_sweep(const Ensemble& e, std::span<const double> Ks) {
  auto p = mean_power_spectrum(e);
  return tail_sweep_from_spectrum(e.grid(), p, Ks);
}

double tail(const Ensemble& e, double K) {
  double Ks[1] = {K};
  return tail_sweep(e, Ks)[0];
}

double resolved_rms(const Ensemble& e, double K) {
  require(K >= 1, "resolved_rms: K must be at least 1");
  auto p = mean_power_spectrum(e);
  const Grid& g = e.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < g.points(); ++i)
    if (g.wavenorm2(i) <= K * K) s += p[i];
  return std::sqrt(s * g.domain_volume());
}

std::vector<std::array<int, 2>> ball_offsets(const Grid& g, double r) {
  require(r <= std::numbers::pi + 1e-12, "structure function: radius must not exceed pi");
  const double dx = g.spacing();
  const int hmax = static_cast<int>(std::floor(r / dx + 1e-9));
  std::vector<std::array<int, 2>> out;
  for (int a = -hmax; a <= hmax; ++a) {
    if (g.d == 1) {
      if (a != 0 && std::abs(a) * dx <= r * (1 + 1e-12)) out.push_back({a, 0});
      continue;
    }
    for (int b = -hmax; b <= hmax; ++b) {
      if (a == 0 && b == 0) continue;
      if (std::sqrt(double(a) * a + double(b) * b) * dx <= r * (1 + 1e-12)) out.push_back({a, b});
    }
  }
  require(!out.empty(), "structure function: radius below lattice spacing gives an empty offset set");
  return out;
}

namespace {

// omega(r)^2 for each radius from the mean power spectrum.
std::vector<double> modulus_sq(const Grid& g, const std::vector<double>& power,
                               std::span<const double> radii) {
  SpecField P(g, 1);
  for (std::size_t i = 0; i < g.points(); ++i) P.at(0, i) = power[i];
  GridField corr = inverse(P);  // sum_k P(k) e^{ik.h}
  const double vol = g.domain_volume();
  const double c0 = std::accumulate(power.begin(), power.end(), 0.0);
  std::vector<double> out;
  for (double r : radii) {
    auto offs = ball_offsets(g, r);
    double s = 0.0;
    for (const auto& h : offs) {
      std::size_t idx = g.index_of(h);
      s += std::max(0.0, 2.0 * vol * (c0 - corr.at(0, idx)));
    }
    out.push_back(s / static_cast<double>(offs.size()));
  }
  return out;
}

}  // namespace

StructureCurve pointwise_modulus(const Ensemble& e, std::span<const double> radii) {
  auto w2 = modulus_sq(e.grid(), mean_power_spectrum(e), radii);
  StructureCurve s;
  s.radii.assign(radii.begin(), radii.end());
  for (double v : w2) s.values.push_back(std::sqrt(v));
  return s;
}

StructureCurve structure_function(const LawCurve& c, std::span<const double> radii) {
  std::vector<std::vector<double>> w2;
  for (const auto& e : c.ensembles) w2.push_back(modulus_sq(e.grid(), mean_power_spectrum(e), radii));
  StructureCurve s;
  s.radii.assign(radii.begin(), radii.end());
  s.time_averaged = true;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    double integral = 0.0;
    for (std::size_t t = 1; t < c.size(); ++t)
      integral += 0.5 * (c.times[t] - c.times[t - 1]) * (w2[t][r] + w2[t - 1][r]);
    s.values.push_back(std::sqrt(integral));
  }
  return s;
}

TimeAverageCheck pointwise_to_timeavg_check(const LawCurve& c, std::span<const double> radii) {
  TimeAverageCheck out;
  StructureCurve sf = structure_function(c, radii);
  std::vector<double> worst(radii.size(), 0.0);
  for (const auto& e : c.ensembles) {
    auto w = pointwise_modulus(e, radii);
    for (std::size_t r = 0; r < radii.size(); ++r) worst[r] = std::max(worst[r], w.values[r]);
  }
  for (std::size_t r = 0; r < radii.size(); ++r) {
    out.lhs.push_back(sf.values[r]);
    out.rhs.push_back(std::sqrt(c.horizon()) * worst[r]);
    if (out.lhs[r] > out.rhs[r] * (1 + 1e-9)) out.holds = false;
  }
  return out;
}

std::vector<double> default_radii(const Grid& g, double r_min, double r_max, int count) {
  require(count >= 2 && r_max > r_min && r_min >= g.spacing() * (1 - 1e-12), "radii: bad range");
  std::vector<double> r;
  for (int i = 0; i < count; ++i)
    r.push_back(r_min * std::pow(r_max / r_min, double(i) / (count - 1)));
  return r;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "fit: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0, "fit: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / n);
  f.r2 = syy > 0 ? 1.0 - ss / syy : 1.0;
  return f;
}

PowerFit fit_power_modulus(const StructureCurve& s, double r_min, double r_max) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < s.radii.size(); ++i) {
    double r = s.radii[i];
    if (r < r_min * (1 - 1e-12) || r > r_max * (1 + 1e-12)) continue;
    require(s.values[i] > 0, "fit: modulus must be positive in the fit range");
    lx.push_back(std::log(r));
    ly.push_back(2.0 * std::log(s.values[i]));
  }
  require(lx.size() >= 3, "fit: need at least three radii in range");
  LineFit f = fit_line(lx, ly);
  return {std::exp(f.intercept), 0.5 * f.slope, f.rms_residual};
}

namespace {
std::vector<double> point_value(const GridField& u, std::size_t idx) {
  std::vector<double> v(u.components());
  for (int c = 0; c < u.components(); ++c) v[c] = u.at(c, idx);
  return v;
}
}  // namespace

MarginalCheck kpoint_marginal_exact(const Ensemble& e, int k, int i, const ScalarFn& psi) {
  require(k >= 1 && k <= 3, "marginal: k must be in 1..3");
  require(i >= 0 && i < k, "marginal: coordinate index out of range");
  const Grid& g = e.grid();
  const std::size_t P = g.points();
  const double dV = g.cell_volume();
  std::size_t tuples = 1;
  for (int j = 0; j < k; ++j) tuples *= P;
  double lhs = 0.0, rhs = 0.0;
  for (const auto& u : e) {
    std::vector<double> vals(P);
    for (std::size_t x = 0; x < P; ++x) vals[x] = psi(point_value(u, x));
    // every k-tuple; the i-th point is digit i of the tuple index in base P
    double s = 0.0;
    std::size_t stride = 1;
    for (int j = 0; j < i; ++j) stride *= P;
    for (std::size_t t = 0; t < tuples; ++t) s += vals[(t / stride) % P];
    lhs += s * std::pow(dV, k);
    double one = 0.0;
    for (std::size_t x = 0; x < P; ++x) one += vals[x];
    rhs += one * dV;
  }
  const double N = static_cast<double>(e.size());
  return {lhs / N, std::pow(g.domain_volume(), k - 1) * rhs / N, 0.0};
}

MarginalCheck kpoint_marginal_check(const Ensemble& e, int k, const ScalarFn& psi,
                                    std::size_t samples, std::uint64_t seed) {
  require(k >= 1 && k <= 3, "marginal: k must be in 1..3");
  require(samples >= 2, "marginal: need at least two samples");
  const Grid& g = e.grid();
  const std::size_t P = g.points();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> member(0, e.size() - 1), point(0, P - 1);
  std::uniform_int_distribution<int> coord(0, k - 1);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::size_t m = member(rng);
    std::size_t x[3] = {point(rng), point(rng), point(rng)};
    double v = psi(point_value(e[m], x[coord(rng)]));
    double delta = v - mean;
    mean += delta / double(s + 1);
    m2 += delta * (v - mean);
  }
  const double volk = std::pow(g.domain_volume(), k);
  double var = m2 / double(samples - 1);
  double rhs = 0.0;
  for (const auto& u : e) {
    double one = 0.0;
    for (std::size_t p = 0; p < P; ++p) one += psi(point_value(u, p));
    rhs += one * g.cell_volume();
  }
  rhs *= std::pow(g.domain_volume(), k - 1) / double(e.size());
  return {volk * mean, rhs, volk * std::sqrt(var / double(samples))};
}

}  // namespace lawbound
