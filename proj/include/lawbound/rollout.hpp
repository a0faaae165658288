#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lawbound/ensemble.hpp"
#include "lawbound/report.hpp"
#include "lawbound/sampler.hpp"

namespace lawbound::rollout {

// delta_{n+1} = L_n delta_n + eps_{n+1}, returned for n = 0..N.
std::vector<double> gronwall_recursion(double delta0, std::span<const double> L, std::span<const double> eps);
// Product/sum form of the same quantity for every prefix n = 0..N (empty product = 1).
std::vector<double> gronwall_closed_form(double delta0, std::span<const double> L, std::span<const double> eps);

// exp(sum alpha) delta0 + sum_j eps_j exp(sum_{m >= j} alpha_m), for n = 0..N.
std::vector<double> rollout_bound(double delta0, std::span<const double> alpha, std::span<const double> eps);
double constant_coefficient_bound(double delta0, double alpha_bar, double eps_bar, int N);

struct RolloutLedger {
  std::vector<double> alpha;      // alpha_n, n = 0..N-1
  std::vector<double> eps;        // eps_{n+1}, n = 0..N-1 (measured defect on the model law)
  std::vector<double> delta;      // delta_n, n = 0..N
  std::vector<double> bound;      // general rollout bound, n = 0..N
  std::vector<double> stability;  // W2 of both laws pushed by the reference, n = 0..N-1

  std::size_t steps() const { return alpha.size(); }
  // finite, nonnegative, consistent lengths
  bool valid() const;
};

struct ExperimentConfig {
  int steps = 8;
  int checkpoints = 8;     // quadrature nodes per window for alpha_n
  double slack = 5e-2;
  double coverage_K = 0;   // > 0: also bound eps_n by the capacity-coverage route at this K
  std::uint64_t seed = 0;
};

struct Experiment {
  RolloutLedger ledger;
  double alpha_bar = 0.0, eps_bar = 0.0;  // maxima over the run (stand-in for the class supremum)
  double constant_bound = 0.0;
  bool left_admissible_class = false;
  Report report;
};

// Reference law: a pushed by the reference flow over spec.step_dt. Model law: b pushed by the
// sampler kernel `spec`, member i at step n seeded with derive_seed(seed, i, n).
Experiment run_rollout_experiment(const Ensemble& a, const Ensemble& b, const sampler::KernelSpec& spec,
                                  const ExperimentConfig& cfg);

}  // namespace lawbound::rollout
