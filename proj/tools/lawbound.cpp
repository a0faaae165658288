#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "lawbound/certify.hpp"
#include "lawbound/euler.hpp"
#include "lawbound/io.hpp"
#include "lawbound/parallel.hpp"
#include "lawbound/rollout.hpp"
#include "lawbound/sampler.hpp"
#include "lawbound/scores.hpp"
#include "lawbound/transport.hpp"
#include "lawbound/verify.hpp"

using namespace lawbound;
using io::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "lawbound_out";
  bool timing = false;
};

// Raised for bad flag combinations that CLI11 cannot express.
struct UsageError : Error {
  using Error::Error;
};

json load(const Common& c) { return c.config.empty() ? json{{"schema_version", io::kSchemaVersion}} : io::load_config(c.config); }

std::uint64_t need_seed(const Common& c, io::ConfigReader& r) {
  if (!c.seed) throw UsageError("--seed is required for this command");
  if (r.has("seed") && r.get<std::uint64_t>("seed", 0) != *c.seed)
    throw UsageError("config seed disagrees with --seed");
  return *c.seed;
}

io::ConfigReader reader(json j) {
  io::ConfigReader r(std::move(j));
  r.get<int>("schema_version", io::kSchemaVersion);
  return r;
}

Ensemble generate(const Grid& g, std::size_t members, double p, double K, double scale, std::uint64_t seed) {
  require(members >= 1, "members must be positive");
  std::vector<GridField> m(members);
  parallel_for(members, [&](std::size_t i) {
    m[i] = random_divfree(g, p, K, derive_seed(seed, i));
    m[i] *= scale;
  });
  return Ensemble(std::move(m));
}

// Reads an ensemble manifest, or the final ensemble of a law-curve manifest.
Ensemble read_any(const std::string& path, double* time = nullptr) {
  json j = io::load_config(path);
  if (j.value("kind", "") == "law_curve") {
    LawCurve c = io::read_law_curve(path);
    if (time) *time = c.times.back();
    return c.ensembles.back();
  }
  return io::read_ensemble(path, time);
}

Check pass_plan(const TransportPlan& p) {
  bool ok = p.valid();
  return Check{"plan_marginals", ok ? 0.0 : 1.0, 0.0, 0.0, ok};
}

int finish(Report& r, const Common& c, const json& effective, const std::chrono::steady_clock::time_point& t0) {
  r.config_hash = config_hash(effective.dump());
  if (c.timing) r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::create_directories(c.out);
  write_report((fs::path(c.out) / "report.json").string(), r);
  io::write_text(fs::path(c.out) / "config.json", effective.dump(2) + "\n");
  for (const auto& ch : r.checks)
    std::printf("%s %s value=%.6e bound=%.6e\n", ch.satisfied ? "PASS" : "FAIL", ch.name.c_str(), ch.value, ch.bound);
  return r.all_satisfied() ? 0 : 2;
}

// ---------------------------------------------------------------- commands

int cmd_gen(const Common& c) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = reader(load(c));
  std::uint64_t seed = need_seed(c, r);
  Grid g = io::read_grid(r.child("grid"));
  auto members = r.get<std::size_t>("members", 16);
  double p = r.get<double>("p", 3.0), K = r.get<double>("K_max", g.n / 4.0), scale = r.get<double>("scale", 1.0);
  r.finish();
  Ensemble e = generate(g, members, p, K, scale, seed);
  io::write_ensemble(c.out, "ensemble", e, 0.0);
  Report rep;
  rep.command = "gen";
  double div = 0;
  for (const auto& u : e) div = std::max(div, divergence_norm(u) / std::max(1.0, l2_norm(u)));
  rep.add(check_leq("divergence_free", div, 0.0, 0.0, 1e-10));
  rep.metrics["second_moment"] = moment(e, 2);
  json eff = {{"grid", io::to_json(g)}, {"members", members}, {"p", p}, {"K_max", K}, {"scale", scale}, {"seed", seed}};
  return finish(rep, c, eff, t0);
}

int cmd_evolve(const Common& c, const std::string& in, int every) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = reader(load(c));
  euler::Config cfg = io::read_euler_config(r.child("euler"));
  double T = r.get<double>("T", 0.5), tol = r.get<double>("energy_tol", 1e-5);
  int cadence = r.get<int>("checkpoint_every", 10);
  r.finish();
  if (every > 0) cadence = every;
  require(cadence >= 1, "checkpoint cadence must be positive");
  Ensemble e = read_any(in);
  require(e.grid() == cfg.grid, "input grid differs from the solver grid");
  const long steps = std::lround(T / cfg.dt);
  require(steps >= 1 && std::abs(steps * cfg.dt - T) < 1e-9, "T must be a positive multiple of dt");
  std::vector<double> times;
  for (long s = 0; s <= steps; s += cadence) times.push_back(s * cfg.dt);
  if (std::abs(times.back() - T) > 1e-12) times.push_back(T);
  const std::size_t N = e.size();
  std::vector<std::vector<GridField>> traj(N);
  parallel_for(N, [&](std::size_t i) { traj[i] = euler::trajectory(e[i], times, cfg); });
  std::vector<Ensemble> ens;
  io::CsvTable csv{{"t", "energy", "enstrophy", "divergence"}, {}};
  double drift = 0, e0 = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<GridField> m;
    double en = 0, z = 0, dv = 0;
    for (std::size_t i = 0; i < N; ++i) {
      auto d = euler::diagnostics(traj[i][k], times[k]);
      en += d.energy / N;
      z += d.enstrophy / N;
      dv = std::max(dv, d.divergence);
      m.push_back(traj[i][k]);
    }
    if (k == 0) e0 = en;
    drift = std::max(drift, std::abs(en - e0) / std::max(e0, 1e-300));
    csv.rows.push_back({times[k], en, z, dv});
    ens.emplace_back(std::move(m));
  }
  // stamps are relative to the input state
  io::write_law_curve(c.out, "curve", LawCurve(times, ens));
  io::write_csv(fs::path(c.out) / "conservation.csv", csv);
  Report rep;
  rep.command = "evolve";
  rep.add(check_leq("energy_drift", drift, 0.0, 0.0, tol));
  json eff = {{"euler", io::to_json(cfg)}, {"T", T}, {"energy_tol", tol}, {"checkpoint_every", cadence}};
  return finish(rep, c, eff, t0);
}

int cmd_sample(const Common& c, const std::string& in) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = reader(load(c));
  std::uint64_t seed = need_seed(c, r);
  auto spec = io::read_kernel_spec(r.child("kernel"));
  int steps = r.get<int>("steps", 4);
  bool keep = r.get<bool>("keep_paths", false);
  r.finish();
  Ensemble e = read_any(in);
  auto s = sampler::sample_rollout(e, spec, steps, seed, keep);
  io::write_law_curve(c.out, "curve", s.curve);
  Report rep;
  rep.command = "sample";
  if (s.paths) {
    io::write_path_bundle(fs::path(c.out) / "paths", *s.paths);
    rep.add(Check{"junction_continuity", s.paths->junctions_continuous() ? 0.0 : 1.0, 0.0, 0.0,
                  s.paths->junctions_continuous()});
  }
  bool finite = true;
  for (const auto& en : s.curve.ensembles)
    for (const auto& u : en) finite = finite && u.all_finite();
  rep.add(Check{"finite_output", finite ? 0.0 : 1.0, 0.0, 0.0, finite});
  rep.metrics["final_second_moment"] = moment(s.curve.ensembles.back(), 2);
  json eff = {{"kernel", io::to_json(spec)}, {"steps", steps}, {"keep_paths", keep}, {"seed", seed}};
  return finish(rep, c, eff, t0);
}

int cmd_metrics(const Common& c, const std::string& a_path, const std::string& b_path) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = reader(load(c));
  double K = r.get<double>("K", 8.0);
  auto sweep = r.get<std::vector<double>>("K_sweep", {});
  r.finish();
  Ensemble a = read_any(a_path), b = read_any(b_path);
  require_matching(a, b);
  auto m = transport::capacity_coverage(a, b, K);
  Report rep;
  rep.command = "metrics";
  rep.add(check_leq("capacity_coverage", m.W2, m.bound, 0.0, 1e-9));
  rep.add(check_leq("w1_le_w2", m.W1, m.W2, 0.0, 1e-12));
  for (auto [k, v] : {std::pair{"W1", m.W1}, {"W2", m.W2}, {"tail_a", m.tail_a}, {"tail_b", m.tail_b},
                      {"train_K", m.train_K}, {"bound", m.bound}})
    rep.metrics[k] = v;
  rep.metrics["satisfied"] = m.satisfied ? 1.0 : 0.0;
  if (!sweep.empty()) {
    io::CsvTable csv{{"K", "tail_a", "train", "bound", "w2"}, {}};
    for (double k : sweep) {
      auto s = transport::capacity_coverage(a, b, k);
      csv.rows.push_back({k, s.tail_a, s.train_K, s.bound, s.W2});
      rep.add(check_leq("capacity_coverage_K" + io::format_number(k), s.W2, s.bound, 0.0, 1e-9));
    }
    io::write_csv(fs::path(c.out) / "k_sweep.csv", csv);
  }
  json eff = {{"K", K}, {"K_sweep", sweep}};
  return finish(rep, c, eff, t0);
}

int cmd_transport(const Common& c, const std::string& a_path, const std::string& b_path) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = reader(load(c));
  int p = r.get<int>("p", 2);
  std::string method = r.get<std::string>("method", "exact");
  double eps = r.get<double>("epsilon", 0.05);
  int iters = r.get<int>("max_iter", 5000);
  r.finish();
  require(method == "exact" || method == "sinkhorn", "method must be 'exact' or 'sinkhorn'");
  Ensemble a = read_any(a_path), b = read_any(b_path);
  Report rep;
  rep.command = "transport";
  auto exact = transport::wasserstein_exact(a, b, p);
  rep.metrics["exact"] = exact.value;
  rep.add(check_leq("dual_certificate_gap", exact.certificate_gap, 0.0, 0.0, 1e-9 * std::max(1.0, exact.plan.cost)));
  rep.add(pass_plan(exact.plan));
  if (method == "sinkhorn") {
    auto s = transport::sinkhorn(a, b, p, eps, iters);
    rep.metrics["sinkhorn"] = s.value;
    rep.add(check_leq("exact_le_sinkhorn", exact.value, s.value, 1e-9));
  }
  json eff = {{"p", p}, {"method", method}, {"epsilon", eps}, {"max_iter", iters}};
  return finish(rep, c, eff, t0);
}

int cmd_stability(const Common& c, const std::string& a_path, const std::string& b_path) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = reader(load(c));
  euler::Config cfg = io::read_euler_config(r.child("euler"));
  double t = r.get<double>("t", 0.25), tol = r.get<double>("tol", 1e-3);
  int cp = r.get<int>("checkpoints", 8);
  r.finish();
  Ensemble a = read_any(a_path), b = read_any(b_path);
  Report rep = euler::w2_strain_bound_check(a, b, cfg, t, cp, tol);
  rep.command = "stability";
  json eff = {{"euler", io::to_json(cfg)}, {"t", t}, {"tol", tol}, {"checkpoints", cp}};
  return finish(rep, c, eff, t0);
}

int cmd_rollout(const Common& c, const std::string& a_path, const std::string& b_path) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = reader(load(c));
  std::uint64_t seed = need_seed(c, r);
  auto spec = io::read_kernel_spec(r.child("kernel"));
  rollout::ExperimentConfig cfg;
  cfg.steps = r.get<int>("steps", cfg.steps);
  cfg.checkpoints = r.get<int>("checkpoints", cfg.checkpoints);
  cfg.slack = r.get<double>("slack", cfg.slack);
  cfg.coverage_K = r.get<double>("coverage_K", cfg.coverage_K);
  cfg.seed = derive_seed(seed, 7, 2);
  auto init = r.child("init");
  std::size_t members = init.get<std::size_t>("members", 16);
  double p = init.get<double>("p", 3.0), scale = init.get<double>("scale", 0.5);
  double offset = init.get<double>("offset", 0.05);
  init.finish();
  r.finish();
  const Grid& g = spec.reference.grid;
  Ensemble a, b;
  if (!a_path.empty() || !b_path.empty()) {
    if (a_path.empty() || b_path.empty()) throw UsageError("--a and --b go together");
    a = read_any(a_path);
    b = read_any(b_path);
  } else {
    a = generate(g, members, p, g.n / 4.0, scale, derive_seed(seed, 7, 0));
    Ensemble noise = generate(g, members, 2.0, 8, offset, derive_seed(seed, 7, 1));
    std::vector<GridField> bm;
    for (std::size_t i = 0; i < members; ++i) bm.push_back(a[i] + noise[i]);
    b = Ensemble(std::move(bm));
  }
  auto ex = rollout::run_rollout_experiment(a, b, spec, cfg);
  io::CsvTable csv{{"n", "alpha", "eps", "delta", "bound"}, {}};
  const auto& L = ex.ledger;
  for (std::size_t n = 0; n < L.delta.size(); ++n)
    csv.rows.push_back({double(n), n ? L.alpha[n - 1] : 0.0, n ? L.eps[n - 1] : 0.0, L.delta[n], L.bound[n]});
  io::write_csv(fs::path(c.out) / "ledger.csv", csv);
  json eff = {{"kernel", io::to_json(spec)}, {"steps", cfg.steps},   {"checkpoints", cfg.checkpoints},
              {"slack", cfg.slack},          {"coverage_K", cfg.coverage_K}, {"seed", seed},
              {"init", {{"members", members}, {"p", p}, {"scale", scale}, {"offset", offset}}}};
  return finish(ex.report, c, eff, t0);
}

int cmd_certify(const Common& c) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = reader(load(c));
  std::uint64_t seed = need_seed(c, r);
  int k = r.get<int>("k", 2);
  double K = r.get<double>("K", 8), K_test = r.get<double>("K_test", 4), eps = r.get<double>("epsilon", 1e-2);
  double dt = r.get<double>("dt", 0.00125), T = r.get<double>("T", 0.5);
  int n = r.get<int>("n", 32);
  std::size_t members = r.get<std::size_t>("members", 8);
  double p = r.get<double>("p", 2.0);
  r.finish();
  Grid g(2, n);
  Ensemble init = generate(g, members, p, K, 1.0, derive_seed(seed, 10, 0));
  auto spec = certify::DriftSpec::make(g, K, eps, derive_seed(seed, 10, 1));
  auto curve = certify::drift_driven_curve(init, spec.learned(), T, dt);
  auto tt = certify::make_test_tuple(g, k, K_test, T, derive_seed(seed, 10, 2));
  auto s = certify::residual_bound_check(curve, tt, spec);
  s.report.metrics["satisfied"] = s.satisfied ? 1.0 : 0.0;
  json eff = {{"k", k},   {"K", K}, {"K_test", K_test}, {"epsilon", eps}, {"dt", dt},
              {"T", T},   {"n", n}, {"members", members}, {"p", p},     {"seed", seed}};
  return finish(s.report, c, eff, t0);
}

int cmd_pfode(const Common& c) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = reader(load(c));
  std::uint64_t seed = need_seed(c, r);
  int dim = r.get<int>("dim", 4);
  std::string schedule = r.get<std::string>("schedule", "ve");
  double rate = r.get<double>("rate", 1.0), cc = r.get<double>("c", 0.1);
  int tau_count = r.get<int>("tau_count", 20);
  std::size_t samples = r.get<std::size_t>("samples", 4096);
  r.finish();
  require(schedule == "ve" || schedule == "vp", "schedule must be 've' or 'vp'");
  require(tau_count >= 1, "tau_count must be positive");
  auto gd = certify::GaussianDiffusion::make(
      dim, schedule == "ve" ? certify::Schedule::VarianceExploding : certify::Schedule::VariancePreserving, rate,
      derive_seed(seed, 11, 0));
  std::vector<double> taus;
  for (int i = 0; i <= tau_count; ++i) taus.push_back(double(i) / tau_count);
  Report rep = certify::pf_identities(gd, taus, cc, samples, derive_seed(seed, 11, 1));
  json eff = {{"dim", dim}, {"schedule", schedule}, {"rate", rate}, {"c", cc},
              {"tau_count", tau_count}, {"samples", samples}, {"seed", seed}};
  return finish(rep, c, eff, t0);
}

int cmd_scores(const Common& c, const std::string& a_path, const std::string& b_path) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = reader(load(c));
  std::uint64_t seed = need_seed(c, r);
  auto o = r.child("observable");
  std::string kind = o.get<std::string>("kind", "mollified");
  auto x = o.get<std::vector<double>>("x", {1.0, 1.0});
  int comp = o.get<int>("component", 0);
  double width = o.get<double>("width", 0.3), psi_p = o.get<double>("psi_p", 1.0), psi_K = o.get<double>("psi_K", 4);
  o.finish();
  r.finish();
  require(kind == "mollified" || kind == "inner", "observable kind must be 'mollified' or 'inner'");
  require(x.size() == 2, "observable x must have two coordinates");
  LawCurve a = io::read_law_curve(a_path), b = io::read_law_curve(b_path);
  const Grid& g = a.ensembles[0].grid();
  auto obs = kind == "mollified" ? scores::mollified_evaluation(g, {x[0], x[1]}, comp, width)
                                 : scores::inner_product_observable(random_divfree(g, psi_p, psi_K, seed));
  auto curve = scores::crps_curve(a, b, obs);
  io::CsvTable csv{{"t", "crps", "w1_pushforward", "bound"}, {}};
  for (std::size_t k = 0; k < curve.t.size(); ++k)
    csv.rows.push_back({curve.t[k], curve.crps[k], curve.w1_pushforward[k], curve.bound[k]});
  io::write_csv(fs::path(c.out) / "scores.csv", csv);
  Report rep = scores::crps_dT_check(curve, obs);
  json eff = {{"observable",
               {{"kind", kind}, {"x", x}, {"component", comp}, {"width", width}, {"psi_p", psi_p}, {"psi_K", psi_K}}},
              {"seed", seed}};
  return finish(rep, c, eff, t0);
}

int cmd_verify(const Common& c, bool quick) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = reader(load(c));
  // the suite has a fixed default stream so the bare command is reproducible
  std::uint64_t seed = c.seed.value_or(r.get<std::uint64_t>("seed", 1));
  if (c.seed && r.has("seed") && r.get<std::uint64_t>("seed", 0) != *c.seed)
    throw UsageError("config seed disagrees with --seed");
  r.finish();
  verify::SuiteOptions opt{quick, seed};
  auto res = verify::run_acceptance(opt, [&](const verify::CriterionResult& cr) {
    if (c.timing)
      std::printf("[%s] %2d %s (%.1fs)\n", cr.passed() ? "PASS" : "FAIL", cr.id, cr.name.c_str(), cr.seconds);
    else
      std::printf("[%s] %2d %s\n", cr.passed() ? "PASS" : "FAIL", cr.id, cr.name.c_str());
    std::fflush(stdout);
  });
  Report rep = res.combined;
  rep.config_hash = config_hash(json{{"quick", quick}, {"seed", seed}}.dump());
  if (c.timing) rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::create_directories(c.out);
  write_report((fs::path(c.out) / "report.json").string(), rep);
  return rep.all_satisfied() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lawbound: law-level diagnostics for incompressible flow ensembles"};
  app.require_subcommand(1);
  Common common;
  std::string in, a_path, b_path;
  int every = 0;
  bool quick = false;

  auto add_common = [&](CLI::App* s, bool stochastic) {
    s->add_option("--seed", common.seed, stochastic ? "master seed (required)" : "master seed");
    s->add_option("--config", common.config, "JSON configuration file")->check(CLI::ExistingFile);
    s->add_option("--out", common.out, "output directory");
    s->add_flag("--timing", common.timing, "record wall time in the report");
  };
  auto* gen = app.add_subcommand("gen", "synthesize a divergence-free ensemble");
  add_common(gen, true);
  auto* evolve = app.add_subcommand("evolve", "evolve an ensemble with the Euler solver");
  add_common(evolve, false);
  evolve->add_option("--in", in, "ensemble or law-curve manifest")->required()->check(CLI::ExistingFile);
  evolve->add_option("--every", every, "checkpoint cadence in solver steps");
  auto* sample = app.add_subcommand("sample", "roll an ensemble through a sampler kernel");
  add_common(sample, true);
  sample->add_option("--in", in, "ensemble manifest")->required()->check(CLI::ExistingFile);
  auto* metrics = app.add_subcommand("metrics", "capacity-coverage metrics between two ensembles");
  add_common(metrics, false);
  auto* transport = app.add_subcommand("transport", "Wasserstein distance between two ensembles");
  add_common(transport, false);
  auto* stability = app.add_subcommand("stability", "average-strain W2 stability check");
  add_common(stability, false);
  for (auto* s : {metrics, transport, stability}) {
    s->add_option("--a", a_path, "first ensemble manifest")->required()->check(CLI::ExistingFile);
    s->add_option("--b", b_path, "second ensemble manifest")->required()->check(CLI::ExistingFile);
  }
  auto* roll = app.add_subcommand("rollout", "end-to-end rollout bound experiment");
  add_common(roll, true);
  roll->add_option("--a", a_path, "reference initial ensemble")->check(CLI::ExistingFile);
  roll->add_option("--b", b_path, "model initial ensemble")->check(CLI::ExistingFile);
  auto* cert = app.add_subcommand("certify", "hierarchy residual certification");
  add_common(cert, true);
  auto* pf = app.add_subcommand("pfode", "probability-flow identities on the Gaussian testbed");
  add_common(pf, true);
  auto* sc = app.add_subcommand("scores", "CRPS against the d_T bound for two law curves");
  add_common(sc, true);
  sc->add_option("--a", a_path, "first law-curve manifest")->required()->check(CLI::ExistingFile);
  sc->add_option("--b", b_path, "second law-curve manifest")->required()->check(CLI::ExistingFile);
  auto* va = app.add_subcommand("verify-all", "run the acceptance suite");
  add_common(va, false);
  va->add_flag("--quick", quick, "reduced sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(common);
    if (evolve->parsed()) return cmd_evolve(common, in, every);
    if (sample->parsed()) return cmd_sample(common, in);
    if (metrics->parsed()) return cmd_metrics(common, a_path, b_path);
    if (transport->parsed()) return cmd_transport(common, a_path, b_path);
    if (stability->parsed()) return cmd_stability(common, a_path, b_path);
    if (roll->parsed()) return cmd_rollout(common, a_path, b_path);
    if (cert->parsed()) return cmd_certify(common);
    if (pf->parsed()) return cmd_pfode(common);
    if (sc->parsed()) return cmd_scores(common, a_path, b_path);
    if (va->parsed()) return cmd_verify(common, quick);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
