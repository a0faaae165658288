#include "lawbound/rollout.hpp"

#include <algorithm>
#include <cmath>

#include "lawbound/euler.hpp"
#include "lawbound/parallel.hpp"
#include "lawbound/transport.hpp"

namespace lawbound::rollout {

namespace {
void check_inputs(double delta0, std::span<const double> L, std::span<const double> eps, bool signed_L) {
  require(L.size() == eps.size(), "gronwall: coefficient and defect lists differ in length");
  require(std::isfinite(delta0) && delta0 >= 0, "gronwall: delta0 must be finite and nonnegative");
  for (double x : L) require(std::isfinite(x) && (signed_L || x >= 0), "gronwall: bad stability coefficient");
  for (double x : eps) require(std::isfinite(x) && x >= 0, "gronwall: defects must be finite and nonnegative");
}
}  // namespace

std::vector<double> gronwall_recursion(double delta0, std::span<const double> L, std::span<const double> eps) {
  check_inputs(delta0, L, eps, false);
  std::vector<double> d{delta0};
  for (std::size_t n = 0; n < L.size(); ++n) d.push_back(L[n] * d.back() + eps[n]);
  return d;
}

std::vector<double> gronwall_closed_form(double delta0, std::span<const double> L, std::span<const double> eps) {
  check_inputs(delta0, L, eps, false);
  std::vector<double> out{delta0};
  for (std::size_t N = 1; N <= L.size(); ++N) {
    double prod = 1;
    for (std::size_t m = 0; m < N; ++m) prod *= L[m];
    double s = prod * delta0;
    for (std::size_t j = 1; j <= N; ++j) {
      double p = 1;
      for (std::size_t m = j; m < N; ++m) p *= L[m];
      s += eps[j - 1] * p;
    }
    out.push_back(s);
  }
  return out;
}

std::vector<double> rollout_bound(double delta0, std::span<const double> alpha, std::span<const double> eps) {
  check_inputs(delta0, alpha, eps, true);
  std::vector<double> out{delta0};
  for (std::size_t N = 1; N <= alpha.size(); ++N) {
    double total = 0;
    for (std::size_t m = 0; m < N; ++m) total += alpha[m];
    double s = std::exp(total) * delta0;
    for (std::size_t j = 1; j <= N; ++j) {
      double tail = 0;
      for (std::size_t m = j; m < N; ++m) tail += alpha[m];
      s += eps[j - 1] * std::exp(tail);
    }
    out.push_back(s);
  }
  return out;
}

double constant_coefficient_bound(double delta0, double alpha_bar, double eps_bar, int N) {
  require(N >= 0, "constant bound: N must be nonnegative");
  require(delta0 >= 0 && eps_bar >= 0 && std::isfinite(alpha_bar), "constant bound: bad inputs");
  if (alpha_bar == 0.0) return delta0 + N * eps_bar;
  double g = std::exp(N * alpha_bar);
  return g * delta0 + eps_bar * (g - 1) / std::expm1(alpha_bar);
}

bool RolloutLedger::valid() const {
  const std::size_t N = alpha.size();
  if (eps.size() != N || stability.size() != N || delta.size() != N + 1 || bound.size() != N + 1) return false;
  auto ok = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && x >= 0; });
  };
  return ok(alpha) && ok(eps) && ok(delta) && ok(bound) && ok(stability);
}

Experiment run_rollout_experiment(const Ensemble& a, const Ensemble& b, const sampler::KernelSpec& spec,
                                  const ExperimentConfig& cfg) {
  require_matching(a, b);
  require(cfg.steps >= 1 && cfg.checkpoints >= 1, "rollout: need at least one step and one checkpoint");
  sampler::validate(spec);
  const std::size_t N = a.size();
  const double dt = spec.step_dt;
  Experiment ex;
  RolloutLedger& L = ex.ledger;
  Report& r = ex.report;
  r.command = "rollout";

  std::vector<GridField> mu(a.members()), muh(b.members());
  try {
    for (int n = 0; n < cfg.steps; ++n) {
      Ensemble E(mu), Eh(muh);
      auto opt = transport::wasserstein_exact(E, Eh, 2);
      if (n == 0) L.delta.push_back(opt.value);
      std::vector<GridField> second(N);
      for (std::size_t i = 0; i < N; ++i) second[i] = muh[opt.plan.permutation[i]];
      auto sw = euler::strain_window(mu, second, spec.reference, dt, cfg.checkpoints);
      L.alpha.push_back(sw.alpha);

      std::vector<GridField> next(N), pushed(N), model(N);
      parallel_for(N, [&](std::size_t i) {
        next[i] = euler::evolve(mu[i], dt, spec.reference);
        pushed[i] = euler::evolve(muh[i], dt, spec.reference);
        model[i] = sampler::sample_output(muh[i], spec, derive_seed(cfg.seed, i, static_cast<std::uint64_t>(n)));
      });
      Ensemble En(next), Ep(pushed), Em(model);
      L.stability.push_back(transport::w2(En, Ep));
      L.eps.push_back(transport::w2(Ep, Em));
      L.delta.push_back(transport::w2(En, Em));
      if (cfg.coverage_K > 0) {
        auto cc = transport::capacity_coverage(Ep, Em, cfg.coverage_K);
        r.add(check_leq("defect_coverage_step_" + std::to_string(n + 1), L.eps.back(), cc.bound, 1e-9));
      }
      mu = std::move(next);
      muh = std::move(model);
    }
  } catch (const NumericalError& e) {
    ex.left_admissible_class = true;
    r.add(Check{"admissible_class", 1.0, 0.0, 0.0, false});
    r.metrics["admissible_class_error_step"] = double(L.eps.size());
    // drop the partial step so the ledger stays consistent
    while (L.alpha.size() > L.eps.size()) L.alpha.pop_back();
    if (L.delta.empty()) L.delta.push_back(transport::w2(a, b));
  }
  const std::size_t S = L.alpha.size();
  L.bound = rollout_bound(L.delta[0], std::span(L.alpha).first(S), std::span(L.eps).first(S));
  for (std::size_t n = 0; n < S; ++n) {
    double step_bound = std::exp(L.alpha[n]) * L.delta[n] + L.eps[n];
    r.add(check_leq("recursion_step_" + std::to_string(n + 1), L.delta[n + 1], step_bound, cfg.slack, 1e-12));
    r.add(check_leq("stability_step_" + std::to_string(n + 1), L.stability[n], std::exp(L.alpha[n]) * L.delta[n],
                    cfg.slack, 1e-12));
  }
  if (S > 0) {
    ex.alpha_bar = *std::max_element(L.alpha.begin(), L.alpha.end());
    ex.eps_bar = *std::max_element(L.eps.begin(), L.eps.end());
    ex.constant_bound = constant_coefficient_bound(L.delta[0], ex.alpha_bar, ex.eps_bar, int(S));
    r.add(check_leq("rollout_bound", L.delta[S], L.bound[S], cfg.slack, 1e-12));
    r.add(check_leq("rollout_le_constant_coefficient", L.bound[S], ex.constant_bound, 1e-12));
  }
  r.metrics["delta_final"] = L.delta.back();
  r.metrics["bound_final"] = L.bound.back();
  r.metrics["alpha_bar_run_max"] = ex.alpha_bar;
  r.metrics["eps_bar_run_max"] = ex.eps_bar;
  r.metrics["constant_coefficient_bound"] = ex.constant_bound;
  r.metrics["slack"] = cfg.slack;
  return ex;
}

}  // namespace lawbound::rollout
