#include "lawbound/euler.hpp"

#include <algorithm>
#include <cmath>

#include "lawbound/parallel.hpp"

namespace lawbound::euler {

void validate(const Config& cfg) {
  require(cfg.grid.d == 2, "euler: only d = 2 is supported");
  require(cfg.dt > 0 && std::isfinite(cfg.dt), "euler: dt must be positive");
  require(cfg.dealias > 0 && cfg.dealias <= 1, "euler: dealias fraction must be in (0, 1]");
  require(cfg.cfl > 0, "euler: CFL number must be positive");
  require(cfg.K_init >= 1 && cfg.K_init <= cfg.grid.n / 4, "euler: K_init must be in [1, n/4]");
}

int dealias_cutoff(const Config& cfg) {
  double c = cfg.dealias * cfg.grid.n / 2.0;
  int k = static_cast<int>(std::floor(c));
  if (k == c) --k;  // strict: |k_i| < dealias * n / 2
  return std::min(k, cfg.grid.n / 2 - 1);
}

Solver::Solver(Config cfg) : cfg_(cfg) {
  validate(cfg_);
  const Grid& g = cfg_.grid;
  const int kc = dealias_cutoff(cfg_);
  keep_.resize(g.points());
  for (std::size_t i = 0; i < g.points(); ++i) {
    auto k = g.wavevector(i);
    keep_[i] = std::abs(k[0]) <= kc && std::abs(k[1]) <= kc;
  }
}

State Solver::to_state(const GridField& u) const {
  require(u.grid() == cfg_.grid && u.components() == 2, "euler: velocity field does not match the grid");
  SpecField U = forward(u);
  double scale = std::max(1.0, l2_norm(u));
  require(divergence_norm(U) <= 1e-8 * scale, "euler: initial velocity is not divergence-free");
  const Grid& g = cfg_.grid;
  State s;
  s.omega = SpecField(g, 1);
  for (std::size_t i = 0; i < g.points(); ++i) {
    if (!keep_[i]) continue;
    auto k = g.wavevector(i);
    s.omega.at(0, i) = cplx(0, k[0]) * U.at(1, i) - cplx(0, k[1]) * U.at(0, i);
  }
  s.mean[0] = U.at(0, 0).real();
  s.mean[1] = U.at(1, 0).real();
  return s;
}

namespace {
SpecField velocity_spec(const State& s) {
  const Grid& g = s.omega.grid();
  SpecField U(g, 2);
  for (std::size_t i = 1; i < g.points(); ++i) {
    cplx w = s.omega.at(0, i);
    if (w == cplx(0, 0)) continue;
    auto k = g.wavevector(i);
    cplx psi = w / g.wavenorm2(i);
    U.at(0, i) = cplx(0, k[1]) * psi;
    U.at(1, i) = -cplx(0, k[0]) * psi;
  }
  U.at(0, 0) = s.mean[0];
  U.at(1, 0) = s.mean[1];
  return U;
}
}  // namespace

GridField Solver::velocity(const State& s) const { return inverse(velocity_spec(s)); }

SpecField Solver::rhs(const State& s, double* umax) const {
  const Grid& g = cfg_.grid;
  GridField u = inverse(velocity_spec(s));
  SpecField G(g, 2);
  for (std::size_t i = 0; i < g.points(); ++i) {
    auto k = g.wavevector(i);
    G.at(0, i) = cplx(0, k[0]) * s.omega.at(0, i);
    G.at(1, i) = cplx(0, k[1]) * s.omega.at(0, i);
  }
  GridField grad = inverse(G);
  GridField adv(g, 1);
  double vmax = 0;
  for (std::size_t i = 0; i < g.points(); ++i) {
    double ux = u.at(0, i), uy = u.at(1, i);
    adv.at(0, i) = ux * grad.at(0, i) + uy * grad.at(1, i);
    vmax = std::max(vmax, ux * ux + uy * uy);
  }
  if (umax) *umax = std::sqrt(vmax);
  SpecField N = forward(adv);
  for (std::size_t i = 0; i < g.points(); ++i) N.at(0, i) = keep_[i] ? -N.at(0, i) : cplx(0, 0);
  return N;
}

void Solver::advance(State& s, double h) const {
  auto& w = s.omega.coeffs();
  const std::size_t P = w.size();
  double umax = 0;
  SpecField k1 = rhs(s, &umax);
  if (umax > 0 && h > cfg_.cfl * cfg_.grid.spacing() / umax * (1 + 1e-12))
    throw NumericalError("euler: CFL condition violated (dt = " + std::to_string(h) +
                         ", limit = " + std::to_string(cfg_.cfl * cfg_.grid.spacing() / umax) + ")");
  State tmp = s;
  auto stage = [&](const SpecField& k, double a) {
    for (std::size_t i = 0; i < P; ++i) tmp.omega.coeffs()[i] = w[i] + a * k.coeffs()[i];
  };
  stage(k1, 0.5 * h);
  SpecField k2 = rhs(tmp);
  stage(k2, 0.5 * h);
  SpecField k3 = rhs(tmp);
  stage(k3, h);
  SpecField k4 = rhs(tmp);
  for (std::size_t i = 0; i < P; ++i) {
    w[i] += h / 6.0 * (k1.coeffs()[i] + 2.0 * k2.coeffs()[i] + 2.0 * k3.coeffs()[i] + k4.coeffs()[i]);
    if (!std::isfinite(w[i].real()) || !std::isfinite(w[i].imag()))
      throw NumericalError("euler: non-finite vorticity");
  }
}

void Solver::advance_to(State& s, double duration) const {
  require(duration >= 0, "euler: negative duration");
  if (duration == 0) return;
  long steps = std::max(1L, static_cast<long>(std::ceil(duration / cfg_.dt - 1e-9)));
  double h = duration / double(steps);
  for (long i = 0; i < steps; ++i) advance(s, h);
}

GridField step(const GridField& u, const Config& cfg) {
  Solver S(cfg);
  State s = S.to_state(u);
  S.advance(s, cfg.dt);
  return S.velocity(s);
}

GridField evolve(const GridField& u, double t, const Config& cfg) {
  Solver S(cfg);
  State s = S.to_state(u);
  S.advance_to(s, t);
  return S.velocity(s);
}

std::vector<GridField> trajectory(const GridField& u, std::span<const double> times, const Config& cfg) {
  Solver S(cfg);
  State s = S.to_state(u);
  std::vector<GridField> out;
  double now = 0;
  for (double t : times) {
    require(t >= now, "euler: checkpoint times must be nondecreasing and nonnegative");
    S.advance_to(s, t - now);
    now = t;
    out.push_back(S.velocity(s));
  }
  return out;
}

Ensemble evolve_ensemble(const Ensemble& e, double t, const Config& cfg) {
  std::vector<GridField> out(e.size());
  parallel_for(e.size(), [&](std::size_t i) { out[i] = evolve(e[i], t, cfg); });
  return Ensemble(std::move(out));
}

GridField tendency(const GridField& u, const Config& cfg) {
  Solver S(cfg);
  State s = S.to_state(u);
  State rate;
  rate.omega = S.rhs(s);
  return S.velocity(rate);
}

GridField vorticity(const GridField& u) {
  require(u.grid().d == 2 && u.components() == 2, "vorticity: expected a 2D velocity field");
  SpecField U = forward(u);
  SpecField W(u.grid(), 1);
  SpecField dx = derivative(U, 0), dy = derivative(U, 1);
  for (std::size_t i = 0; i < u.points(); ++i) W.at(0, i) = dx.at(1, i) - dy.at(0, i);
  return inverse(W);
}

GridField taylor_green(const Grid& g, double amplitude) {
  require(g.d == 2, "taylor_green: d must be 2");
  GridField u(g, 2);
  const double dx = g.spacing();
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      std::size_t idx = static_cast<std::size_t>(i) * g.n + j;
      u.at(0, idx) = -amplitude * std::sin(j * dx);
      u.at(1, idx) = amplitude * std::sin(i * dx);
    }
  return u;
}

Conservation diagnostics(const GridField& u, double t) {
  Conservation c;
  c.t = t;
  c.energy = inner(u, u);
  GridField w = vorticity(u);
  c.enstrophy = inner(w, w);
  c.divergence = divergence_norm(u);
  return c;
}

double sym2_norm(double a, double b, double c) {
  double m = 0.5 * (a + c), r = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return std::abs(m) + r;
}

StrainField::StrainField(const GridField& v) : grid(v.grid()) {
  require(v.grid().d == 2 && v.components() == 2, "strain: expected a 2D velocity field");
  SpecField V = forward(v);
  GridField dx = inverse(derivative(V, 0)), dy = inverse(derivative(V, 1));
  const std::size_t P = v.points();
  s11.resize(P);
  s12.resize(P);
  s22.resize(P);
  for (std::size_t i = 0; i < P; ++i) {
    s11[i] = dx.at(0, i);
    s22[i] = dy.at(1, i);
    s12[i] = 0.5 * (dy.at(0, i) + dx.at(1, i));
  }
}

double StrainField::norm_at(std::size_t i) const { return sym2_norm(s11[i], s12[i], s22[i]); }

double StrainField::sup_norm() const {
  double m = 0;
  for (std::size_t i = 0; i < s11.size(); ++i) m = std::max(m, norm_at(i));
  return m;
}

LambdaParts lambda_parts(const GridField& u, const GridField& v) {
  require(u.compatible(v), "lambda: shape mismatch");
  StrainField S(v);
  LambdaParts p;
  const double dV = u.grid().cell_volume();
  for (std::size_t i = 0; i < u.points(); ++i) {
    double w0 = u.at(0, i) - v.at(0, i), w1 = u.at(1, i) - v.at(1, i);
    double w2 = w0 * w0 + w1 * w1;
    p.numerator += S.norm_at(i) * w2;
    p.denominator += w2;
  }
  p.numerator *= dV;
  p.denominator *= dV;
  return p;
}

double lambda_pointwise(const GridField& u, const GridField& v) {
  auto p = lambda_parts(u, v);
  return p.denominator > 0 ? p.numerator / p.denominator : 0.0;
}

double lambda_coupled(const std::vector<GridField>& first, const std::vector<GridField>& second) {
  require(first.size() == second.size() && !first.empty(), "lambda: coupled lists differ in length");
  std::vector<LambdaParts> parts(first.size());
  parallel_for(first.size(), [&](std::size_t i) { parts[i] = lambda_parts(first[i], second[i]); });
  double num = 0, den = 0;
  for (const auto& p : parts) {
    num += p.numerator;
    den += p.denominator;
  }
  return den > 0 ? num / den : 0.0;
}

double lambda_coupled(const Ensemble& a, const Ensemble& b, const TransportPlan& plan) {
  require(plan.mode == TransportPlan::Mode::Permutation, "lambda: permutation plan expected");
  require(plan.permutation.size() == a.size() && a.size() == b.size(), "lambda: plan size mismatch");
  std::vector<GridField> f(a.members()), s;
  for (int j : plan.permutation) s.push_back(b[j]);
  return lambda_coupled(f, s);
}

double strain_pairing(const GridField& w, const GridField& v, bool symmetric_part) {
  require(w.compatible(v), "strain pairing: shape mismatch");
  SpecField V = forward(v);
  GridField dx = inverse(derivative(V, 0)), dy = inverse(derivative(V, 1));
  double s = 0;
  for (std::size_t i = 0; i < w.points(); ++i) {
    // M_ij = d_j v_i
    double m00 = dx.at(0, i), m01 = dy.at(0, i), m10 = dx.at(1, i), m11 = dy.at(1, i);
    if (symmetric_part) m01 = m10 = 0.5 * (m01 + m10);
    double a = w.at(0, i), b = w.at(1, i);
    s += a * a * m00 + a * b * (m01 + m10) + b * b * m11;
  }
  return -s * w.grid().cell_volume();
}

IdentityResidual l2_difference_identity_check(const GridField& u0, const GridField& v0, const Config& cfg,
                                              double t, int checkpoints) {
  require(checkpoints >= 1, "identity check: need at least one checkpoint");
  Solver S(cfg);
  const long steps = std::lround(t / cfg.dt);
  require(steps >= 4 && std::abs(steps * cfg.dt - t) <= 1e-9 * std::max(1.0, t),
          "identity check: t must be a multiple of dt with at least 4 steps");
  std::vector<long> at;
  for (int c = 1; c <= checkpoints; ++c) {
    long n = std::lround(double(c) * steps / (checkpoints + 1));
    require(n >= 2 && n <= steps - 2, "identity check: too few steps for the stencil");
    at.push_back(n);
  }
  State su = S.to_state(u0), sv = S.to_state(v0);
  std::vector<double> half_sq(steps + 1);
  std::vector<double> rhs(at.size()), full(at.size());
  std::size_t next = 0;
  for (long n = 0; n <= steps; ++n) {
    GridField u = S.velocity(su), v = S.velocity(sv);
    GridField w = u - v;
    half_sq[n] = 0.5 * inner(w, w);
    if (next < at.size() && at[next] == n) {
      rhs[next] = strain_pairing(w, v, true);
      full[next] = strain_pairing(w, v, false);
      ++next;
    }
    if (n < steps) {
      S.advance(su, cfg.dt);
      S.advance(sv, cfg.dt);
    }
  }
  IdentityResidual r;
  double worst = 0, scale = 0, asym = 0;
  for (std::size_t c = 0; c < at.size(); ++c) {
    long n = at[c];
    double d = (-half_sq[n + 2] + 8 * half_sq[n + 1] - 8 * half_sq[n - 1] + half_sq[n - 2]) / (12 * cfg.dt);
    r.times.push_back(n * cfg.dt);
    r.lhs.push_back(d);
    r.rhs.push_back(rhs[c]);
    worst = std::max(worst, std::abs(d - rhs[c]));
    scale = std::max(scale, std::abs(rhs[c]));
    asym = std::max(asym, std::abs(full[c] - rhs[c]));
  }
  r.residual = scale > 0 ? worst / scale : worst;
  r.antisym_gap = scale > 0 ? asym / scale : asym;
  return r;
}

StrainWindow strain_window(const std::vector<GridField>& first, const std::vector<GridField>& second,
                           const Config& cfg, double t, int checkpoints) {
  require(first.size() == second.size() && !first.empty(), "strain window: coupled lists differ in length");
  require(checkpoints >= 1 && t >= 0, "strain window: bad checkpoints or horizon");
  const std::size_t N = first.size();
  const int C = checkpoints;
  std::vector<std::vector<LambdaParts>> parts(N, std::vector<LambdaParts>(C + 1));
  std::vector<std::vector<double>> sup(N, std::vector<double>(C + 1));
  StrainWindow out;
  out.first_end.resize(N);
  out.second_end.resize(N);
  Solver S(cfg);
  parallel_for(N, [&](std::size_t i) {
    State a = S.to_state(first[i]), b = S.to_state(second[i]);
    for (int c = 0; c <= C; ++c) {
      if (c > 0) {
        S.advance_to(a, t / C);
        S.advance_to(b, t / C);
      }
      GridField ua = S.velocity(a), ub = S.velocity(b);
      parts[i][c] = lambda_parts(ua, ub);
      sup[i][c] = StrainField(ub).sup_norm();
      if (c == C) {
        out.first_end[i] = std::move(ua);
        out.second_end[i] = std::move(ub);
      }
    }
  });
  const double h = C > 0 ? t / C : 0;
  for (int c = 0; c <= C; ++c) {
    double num = 0, den = 0, mx = 0;
    for (std::size_t i = 0; i < N; ++i) {
      num += parts[i][c].numerator;
      den += parts[i][c].denominator;
      mx = std::max(mx, sup[i][c]);
    }
    out.times.push_back(c * h);
    out.lambda_at.push_back(den > 0 ? num / den : 0.0);
    out.max_strain_at.push_back(mx);
  }
  for (int c = 1; c <= C; ++c) {
    out.alpha += 0.5 * h * (out.lambda_at[c] + out.lambda_at[c - 1]);
    out.max_strain_integral += 0.5 * h * (out.max_strain_at[c] + out.max_strain_at[c - 1]);
  }
  for (std::size_t i = 0; i < N; ++i) {
    double a = 0;
    auto lam = [&](int c) {
      return parts[i][c].denominator > 0 ? parts[i][c].numerator / parts[i][c].denominator : 0.0;
    };
    for (int c = 1; c <= C; ++c) a += 0.5 * h * (lam(c) + lam(c - 1));
    out.pair_alpha.push_back(a);
    out.pair_start.push_back(std::sqrt(parts[i][0].denominator));
    out.pair_end.push_back(std::sqrt(parts[i][C].denominator));
  }
  return out;
}

Report w2_strain_bound_check(const Ensemble& a, const Ensemble& b, const Config& cfg, double t, int checkpoints,
                             double tol) {
  require_matching(a, b);
  auto opt = transport::wasserstein_exact(a, b, 2);
  std::vector<GridField> first(a.members()), second;
  for (int j : opt.plan.permutation) second.push_back(b[j]);
  StrainWindow win = strain_window(first, second, cfg, t, checkpoints);

  double w2_0 = opt.value;
  double w2_t = transport::w2(Ensemble(win.first_end), Ensemble(win.second_end));
  double m0 = 0, mt = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m0 += win.pair_start[i] * win.pair_start[i];
    mt += win.pair_end[i] * win.pair_end[i];
  }
  m0 /= double(a.size());
  mt /= double(a.size());

  Report r;
  r.command = "stability";
  r.add(check_leq("w2_average_strain", w2_t, std::exp(win.alpha) * w2_0, tol));
  r.add(check_leq("coupled_moment_gronwall", mt, std::exp(2 * win.alpha) * m0, tol));
  double worst_ratio = 0;
  for (std::size_t c = 0; c < win.times.size(); ++c)
    worst_ratio = std::max(worst_ratio, win.lambda_at[c] - win.max_strain_at[c]);
  r.add(check_leq("average_strain_below_max_strain", worst_ratio, 0.0, 0.0, 1e-12));
  double pointwise_excess = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double bound = std::exp(win.pair_alpha[i]) * win.pair_start[i] * (1 + tol);
    pointwise_excess = std::max(pointwise_excess, win.pair_end[i] - bound);
  }
  r.add(check_leq("pointwise_stability", pointwise_excess, 0.0, 0.0, 0.0));
  r.metrics["w2_initial"] = w2_0;
  r.metrics["w2_final"] = w2_t;
  r.metrics["alpha"] = win.alpha;
  r.metrics["exp_alpha"] = std::exp(win.alpha);
  r.metrics["exp_max_strain"] = std::exp(win.max_strain_integral);
  r.metrics["moment_initial"] = m0;
  r.metrics["moment_final"] = mt;
  return r;
}

}  // namespace lawbound::euler
