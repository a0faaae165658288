#include "lawbound/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "lawbound/parallel.hpp"
#include "lawbound/transport.hpp"

namespace lawbound::sampler {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

int deterministic_steps(const KernelSpec& spec) {
  return std::max(1, static_cast<int>(std::ceil(spec.step_dt / spec.reference.dt - 1e-9)));
}

int node_count(const KernelSpec& spec) {
  return spec.kind == KernelKind::Deterministic ? deterministic_steps(spec) : spec.internal_steps;
}
}  // namespace

void validate(const KernelSpec& spec) {
  require(spec.internal_steps >= 1, "kernel: internal steps must be at least 1");
  require(spec.noise_scale >= 0, "kernel: noise scale must be nonnegative");
  require(spec.step_dt > 0, "kernel: physical step must be positive");
  require(spec.noise_band >= 1 && spec.curl_band >= 1, "kernel: band limits must be at least 1");
  require(spec.kind != KernelKind::PfOde || spec.pf_data_scale > 0, "kernel: pf-ode needs a positive data scale");
  euler::validate(spec.reference);
}

bool starts_at_input(const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::Deterministic:
    case KernelKind::PerturbedReference:
      return true;
    case KernelKind::RectifiedFlow:
      return spec.start == StartLaw::Delta || spec.noise_scale == 0.0;
    case KernelKind::PfOde:
      return false;
  }
  return false;
}

StepContext prepare(const GridField& u, const KernelSpec& spec, std::uint64_t seed) {
  validate(spec);
  require(u.grid() == spec.reference.grid && u.components() == 2, "kernel: input does not match the grid");
  StepContext c;
  c.spec = spec;
  c.input = u;
  const Grid& g = u.grid();
  GridField xi = random_divfree(g, 0.0, spec.noise_band, derive_seed(seed, 1));
  c.wiggle = GridField(g, 2);
  if (spec.kind == KernelKind::Deterministic) {
    c.start = u;
    c.target = GridField(g, 2);
    c.chord = GridField(g, 2);
    return c;
  }
  c.target = euler::evolve(u, spec.step_dt, spec.reference);
  switch (spec.kind) {
    case KernelKind::RectifiedFlow:
      c.start = u;
      if (spec.start == StartLaw::Gaussian) c.start.axpy(spec.noise_scale, xi);
      c.chord = c.target - u;
      if (spec.curl_amplitude != 0.0)
        c.wiggle = spec.curl_amplitude * random_divfree(g, 0.0, spec.curl_band, derive_seed(seed, 2));
      break;
    case KernelKind::PerturbedReference: {
      c.start = u;
      GridField out = c.target;
      out.axpy(spec.noise_scale, xi);
      c.chord = out - u;
      break;
    }
    case KernelKind::PfOde: {
      double s0 = spec.pf_data_scale, s = spec.noise_scale;
      c.start = c.target;
      c.start.axpy(std::sqrt(s0 * s0 + s * s), xi);
      c.chord = GridField(g, 2);
      break;
    }
    default:
      break;
  }
  return c;
}

GridField drift(const StepContext& ctx, const GridField& x, double tau) {
  const KernelSpec& s = ctx.spec;
  switch (s.kind) {
    case KernelKind::Deterministic:
      return s.step_dt * euler::tendency(x, s.reference);
    case KernelKind::RectifiedFlow:
    case KernelKind::PerturbedReference: {
      GridField v = ctx.chord;
      double w = std::sin(kTwoPi * tau);
      if (w != 0.0) v.axpy(w, ctx.wiggle);
      return v;
    }
    case KernelKind::PfOde: {
      double s0 = s.pf_data_scale, sig = s.noise_scale;
      double var = s0 * s0 + sig * sig * (1.0 - tau);
      GridField v = x - ctx.target;
      v *= -0.5 * sig * sig / var;
      return v;
    }
  }
  return GridField(x.grid(), x.components());
}

GridField integrate(const StepContext& ctx, GridField x, double tau0, double tau1, int substeps) {
  require(substeps >= 1, "integrate: substeps must be at least 1");
  const double h = (tau1 - tau0) / substeps;
  for (int k = 0; k < substeps; ++k) {
    double t = tau0 + k * h;
    GridField k1 = drift(ctx, x, t);
    GridField k2 = drift(ctx, GridField(x).axpy(0.5 * h, k1), t + 0.5 * h);
    GridField k3 = drift(ctx, GridField(x).axpy(0.5 * h, k2), t + 0.5 * h);
    GridField k4 = drift(ctx, GridField(x).axpy(h, k3), t + h);
    for (std::size_t i = 0; i < x.size(); ++i)
      x.values()[i] += h / 6.0 * (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i]);
    if (!x.all_finite()) throw NumericalError("sampler: non-finite state");
  }
  return x;
}

namespace {

StepSample run_step(const StepContext& ctx) {
  const KernelSpec& spec = ctx.spec;
  StepSample s;
  const int M = node_count(spec);
  for (int j = 0; j <= M; ++j) s.taus.push_back(double(j) / M);
  s.path.reserve(M + 1);
  s.path.push_back(ctx.start);
  if (spec.kind == KernelKind::Deterministic) {
    euler::Solver S(spec.reference);
    euler::State st = S.to_state(ctx.input);
    const double h = spec.step_dt / M;
    for (int j = 1; j <= M; ++j) {
      S.advance(st, h);
      s.path.push_back(S.velocity(st));
    }
  } else {
    for (int j = 1; j <= M; ++j) s.path.push_back(integrate(ctx, s.path.back(), s.taus[j - 1], s.taus[j], 1));
  }
  s.output = s.path.back();
  return s;
}

}  // namespace

StepSample sample_step(const GridField& u, const KernelSpec& spec, std::uint64_t seed) {
  return run_step(prepare(u, spec, seed));
}

GridField sample_output(const GridField& u, const KernelSpec& spec, std::uint64_t seed) {
  return sample_step(u, spec, seed).output;
}

LawCurve mixture_interpolation(const Ensemble& e, const KernelSpec& spec, const std::vector<double>& taus,
                               std::uint64_t seed, std::uint64_t step) {
  require(!taus.empty() && taus.front() == 0.0 && taus.back() <= 1.0, "mixture: taus must start at 0 and lie in [0, 1]");
  const int M = node_count(spec);
  std::vector<std::vector<GridField>> states(taus.size(), std::vector<GridField>(e.size()));
  parallel_for(e.size(), [&](std::size_t i) {
    StepContext ctx = prepare(e[i], spec, derive_seed(seed, i, step));
    StepSample s = run_step(ctx);
    for (std::size_t k = 0; k < taus.size(); ++k) {
      double pos = taus[k] * M;
      int j = static_cast<int>(std::floor(pos));
      if (pos == j) {
        states[k][i] = s.path[j];
        continue;
      }
      double tau0 = double(j) / M;
      if (spec.kind == KernelKind::Deterministic) {
        euler::Solver S(spec.reference);
        euler::State st = S.to_state(s.path[j]);
        S.advance_to(st, (taus[k] - tau0) * spec.step_dt);
        states[k][i] = S.velocity(st);
      } else {
        states[k][i] = integrate(ctx, s.path[j], tau0, taus[k], 8);
      }
    }
  });
  std::vector<Ensemble> ens;
  for (auto& s : states) ens.emplace_back(std::move(s));
  return LawCurve(taus, std::move(ens));
}

bool PathBundle::junctions_continuous() const {
  for (const auto& member : segments)
    for (std::size_t n = 1; n < member.size(); ++n)
      if (member[n].front().values() != member[n - 1].back().values()) return false;
  return true;
}

GridField PathBundle::at(std::size_t member, double t) const {
  require(member < members() && t >= 0 && t <= horizon() * (1 + 1e-12), "path: time outside the horizon");
  std::size_t n = std::min(steps() - 1, static_cast<std::size_t>(std::floor(t / dt)));
  double tau = std::clamp(t / dt - double(n), 0.0, 1.0);
  auto it = std::upper_bound(taus.begin(), taus.end(), tau);
  std::size_t j = std::min<std::size_t>(taus.size() - 2, it == taus.begin() ? 0 : (it - taus.begin()) - 1);
  double w = (tau - taus[j]) / (taus[j + 1] - taus[j]);
  const auto& seg = segments[member][n];
  // x + w (y - x) keeps equal nodes exact
  GridField x = seg[j];
  x.axpy(w, seg[j + 1] - seg[j]);
  return x;
}

RolloutSample sample_rollout(const Ensemble& init, const KernelSpec& spec, int steps, std::uint64_t seed,
                             bool keep_paths) {
  require(steps >= 1, "rollout: need at least one step");
  require(!keep_paths || starts_at_input(spec),
          "rollout: path bundles need segments that start at their input (delta reference law)");
  const std::size_t N = init.size();
  std::vector<double> times{0.0};
  std::vector<Ensemble> ens{init};
  PathBundle bundle;
  bundle.dt = spec.step_dt;
  if (keep_paths) bundle.segments.assign(N, {});
  std::vector<GridField> current(init.members());
  for (int n = 0; n < steps; ++n) {
    std::vector<StepSample> out(N);
    parallel_for(N, [&](std::size_t i) {
      out[i] = sample_step(current[i], spec, derive_seed(seed, i, static_cast<std::uint64_t>(n)));
    });
    for (std::size_t i = 0; i < N; ++i) {
      current[i] = out[i].output;
      if (keep_paths) {
        if (bundle.taus.empty()) bundle.taus = out[i].taus;
        bundle.segments[i].push_back(std::move(out[i].path));
      }
    }
    times.push_back((n + 1) * spec.step_dt);
    ens.emplace_back(current);
  }
  RolloutSample r{LawCurve(std::move(times), std::move(ens)), std::nullopt};
  if (keep_paths) r.paths = std::move(bundle);
  return r;
}

// ---------------------------------------------------------------- cylindrical observables

double Cylindrical::value(const GridField& x) const {
  std::vector<double> a;
  for (const auto& t : tests) a.push_back(inner(x, t));
  return f(a);
}

double Cylindrical::derivative(const GridField& x, const GridField& w) const {
  std::vector<double> a;
  for (const auto& t : tests) a.push_back(inner(x, t));
  auto g = grad(a);
  double s = 0;
  for (std::size_t j = 0; j < tests.size(); ++j) s += g[j] * inner(w, tests[j]);
  return s;
}

Cylindrical constant_observable(double c) {
  return {{}, [c](const std::vector<double>&) { return c; },
          [](const std::vector<double>&) { return std::vector<double>{}; }};
}

Cylindrical linear_observable(const GridField& test) {
  return {{test}, [](const std::vector<double>& a) { return a[0]; },
          [](const std::vector<double>&) { return std::vector<double>{1.0}; }};
}

Cylindrical bilinear_observable(const GridField& t1, const GridField& t2) {
  return {{t1, t2}, [](const std::vector<double>& a) { return a[0] * a[1]; },
          [](const std::vector<double>& a) { return std::vector<double>{a[1], a[0]}; }};
}

ContinuityResidual continuity_equation_check(const Ensemble& e, const KernelSpec& spec, const Cylindrical& phi,
                                             double dtau, const std::vector<double>& eval_taus,
                                             std::uint64_t seed, int fine_steps_per_unit) {
  require(dtau > 0 && dtau <= 0.5, "continuity: dtau must be in (0, 1/2]");
  const int J = static_cast<int>(std::lround(1.0 / dtau));
  require(std::abs(J * dtau - 1.0) < 1e-12, "continuity: 1 / dtau must be an integer");
  std::vector<int> at;
  for (double t : eval_taus) {
    int j = static_cast<int>(std::lround(t / dtau));
    require(j >= 1 && j < J && std::abs(j * dtau - t) < 1e-12, "continuity: eval taus must be interior multiples of dtau");
    at.push_back(j);
  }
  const std::size_t N = e.size();
  const int sub = std::max(1, static_cast<int>(std::ceil(dtau * fine_steps_per_unit - 1e-9)));
  // per member: Phi at every node and the drift pairing at eval nodes
  std::vector<std::vector<double>> vals(N, std::vector<double>(J + 1)), pair(N, std::vector<double>(at.size()));
  parallel_for(N, [&](std::size_t i) {
    StepContext ctx = prepare(e[i], spec, derive_seed(seed, i, 0));
    GridField x = ctx.start;
    std::size_t next = 0;
    for (int j = 0; j <= J; ++j) {
      if (j > 0) x = integrate(ctx, std::move(x), (j - 1) * dtau, j * dtau, sub);
      vals[i][j] = phi.value(x);
      if (next < at.size() && at[next] == j) {
        pair[i][next] = phi.derivative(x, drift(ctx, x, j * dtau));
        ++next;
      }
    }
  });
  ContinuityResidual r;
  r.eval_taus = eval_taus;
  for (std::size_t c = 0; c < at.size(); ++c) {
    int j = at[c];
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < N; ++i) {
      double li = (vals[i][j + 1] - vals[i][j - 1]) / (2 * dtau);
      r.conditional = std::max(r.conditional, std::abs(li - pair[i][c]));
      lhs += li;
      rhs += pair[i][c];
    }
    r.mixture = std::max(r.mixture, std::abs(lhs - rhs) / double(N));
  }
  return r;
}

// ---------------------------------------------------------------- regularity

namespace {
struct PairDraw {
  double s, t;
};
std::vector<PairDraw> draw_pairs(double T, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, T);
  std::vector<PairDraw> out;
  for (std::size_t k = 0; k < count; ++k) {
    double a = U(rng), b = U(rng);
    out.push_back({std::min(a, b), std::max(a, b)});
  }
  return out;
}
}  // namespace

RegularityReport time_regularity_report(const PathBundle& b, std::size_t pair_samples, std::uint64_t seed) {
  require(b.members() >= 1 && b.steps() >= 1, "regularity: empty path bundle");
  require(b.taus.size() >= 9, "regularity: need at least 8 internal intervals per step");
  const std::size_t N = b.members(), S = b.steps(), J = b.taus.size() - 1;
  const double dt = b.dt;
  RegularityReport r;
  for (std::size_t n = 0; n < S; ++n) {
    double chord = 0;
    std::vector<GridField> D(N);
    for (std::size_t i = 0; i < N; ++i) {
      D[i] = b.segments[i][n].back() - b.segments[i][n].front();
      chord += l2_norm(D[i]);
    }
    r.C_ch = std::max(r.C_ch, chord / double(N) / dt);
    for (std::size_t j = 0; j < J; ++j) {
      double h = b.taus[j + 1] - b.taus[j];
      double speed = 0, resid = 0;
      for (std::size_t i = 0; i < N; ++i) {
        GridField V = b.segments[i][n][j + 1] - b.segments[i][n][j];
        V *= 1.0 / h;
        speed += l2_norm(V);
        double rr = l2_distance(V, D[i]);
        resid += rr * rr;
      }
      r.C_spd = std::max(r.C_spd, speed / double(N) / dt);
      r.C_str = std::max(r.C_str, resid / double(N) / (dt * dt));
    }
  }
  auto pairs = draw_pairs(b.horizon(), pair_samples, seed);
  r.pairs = pairs.size();
  std::vector<double> incr(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    double s = 0;
    for (std::size_t i = 0; i < N; ++i) s += sobolev_norm(b.at(i, pairs[k].t) - b.at(i, pairs[k].s), -1.0);
    incr[k] = s / double(N);
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    double bound = r.C_spd * (pairs[k].t - pairs[k].s);
    double ratio = bound > 0 ? incr[k] / bound : (incr[k] > 0 ? INFINITY : 0.0);
    r.worst_increment_ratio = std::max(r.worst_increment_ratio, ratio);
  }
  r.report.command = "time_regularity";
  r.report.add(check_leq("lm_increment_ratio", r.worst_increment_ratio, 1.0, 1e-2));
  r.report.add(check_leq("speed_chord_straightness", r.C_spd, r.C_ch + std::sqrt(r.C_str), 1e-2));
  Check junction{"junction_continuity", b.junctions_continuous() ? 0.0 : 1.0, 0.0, 0.0, b.junctions_continuous()};
  r.report.add(junction);
  r.report.metrics["C_spd"] = r.C_spd;
  r.report.metrics["C_ch"] = r.C_ch;
  r.report.metrics["C_str"] = r.C_str;
  return r;
}

Report holder_from_action_check(const PathBundle& b, double p, std::size_t pair_samples, std::uint64_t seed,
                                double tol) {
  require(p > 1, "holder: p must exceed 1");
  const std::size_t N = b.members(), S = b.steps(), J = b.taus.size() - 1;
  const double dt = b.dt;
  // physical node times and piece speeds per member
  std::vector<double> node_t;
  for (std::size_t n = 0; n < S; ++n)
    for (std::size_t j = 0; j < J; ++j) node_t.push_back((double(n) + b.taus[j]) * dt);
  node_t.push_back(double(S) * dt);
  std::vector<std::vector<double>> speed(N);
  parallel_for(N, [&](std::size_t i) {
    for (std::size_t n = 0; n < S; ++n)
      for (std::size_t j = 0; j < J; ++j)
        speed[i].push_back(l2_distance(b.segments[i][n][j + 1], b.segments[i][n][j]) /
                           ((b.taus[j + 1] - b.taus[j]) * dt));
  });
  auto pairs = draw_pairs(b.horizon(), pair_samples, seed);
  std::vector<double> worst(pairs.size(), 0.0);
  parallel_for(pairs.size(), [&](std::size_t k) {
    double s = pairs[k].s, t = pairs[k].t;
    for (std::size_t i = 0; i < N; ++i) {
      double lhs = sobolev_norm(b.at(i, t) - b.at(i, s), -1.0);
      double action = 0;
      for (std::size_t q = 0; q + 1 < node_t.size(); ++q) {
        double lo = std::max(s, node_t[q]), hi = std::min(t, node_t[q + 1]);
        if (hi > lo) action += std::pow(speed[i][q], p) * (hi - lo);
      }
      double rhs = std::pow(t - s, 1.0 - 1.0 / p) * std::pow(action, 1.0 / p);
      double ratio = rhs > 0 ? lhs / rhs : (lhs > 0 ? INFINITY : 0.0);
      worst[k] = std::max(worst[k], ratio);
    }
  });
  Report r;
  r.command = "holder_from_action";
  r.add(check_leq("holder_increment_ratio", *std::max_element(worst.begin(), worst.end()), 1.0, tol));
  r.metrics["p"] = p;
  return r;
}

Report pipeline_coupling_check(const Ensemble& reference, const Ensemble& model) {
  require_matching(reference, model);
  double w1 = transport::w1(reference, model), w2 = transport::w2(reference, model);
  double rms = transport::diagonal_rms(reference, model);
  Report r;
  r.command = "pipeline_coupling";
  r.add(check_leq("w1_below_w2", w1, w2, 0.0, 1e-9));
  r.add(check_leq("w2_below_coupled_rms", w2, rms, 0.0, 1e-9));
  r.metrics["W1"] = w1;
  r.metrics["W2"] = w2;
  r.metrics["coupled_rms"] = rms;
  return r;
}

}  // namespace lawbound::sampler
