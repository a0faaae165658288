#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lawbound/ensemble.hpp"
#include "lawbound/euler.hpp"
#include "lawbound/report.hpp"

namespace lawbound::sampler {

enum class KernelKind { Deterministic, RectifiedFlow, PfOde, PerturbedReference };
enum class StartLaw { Delta, Gaussian };

struct KernelSpec {
  KernelKind kind = KernelKind::RectifiedFlow;
  int internal_steps = 8;      // RK4 steps over internal time [0, 1]
  double noise_scale = 0.0;    // Gaussian start / perturbation / pf noise level
  int noise_band = 8;          // band limit of the noise fields
  StartLaw start = StartLaw::Delta;
  double curl_amplitude = 0.0; // amplitude of the sin(2 pi tau) divergence-free wiggle
  int curl_band = 4;
  double step_dt = 0.05;       // physical step
  double pf_data_scale = 0.05; // spread of the pf-ode target law around S(u)
  euler::Config reference;
};

void validate(const KernelSpec& spec);
// True when every segment starts at its input state.
bool starts_at_input(const KernelSpec& spec);

// Per-member randomness and fixed fields for one physical step.
struct StepContext {
  KernelSpec spec;
  GridField input;
  GridField start;    // U_0
  GridField target;   // S_dt(u) (pf-ode: centre of the target law)
  GridField chord;    // constant part of the drift
  GridField wiggle;   // divergence-free curl field (scaled by curl_amplitude)
};

StepContext prepare(const GridField& u, const KernelSpec& spec, std::uint64_t seed);
// Internal-time drift v(X, tau; u).
GridField drift(const StepContext& ctx, const GridField& x, double tau);
// RK4 from `from` at tau0 to tau1 using `substeps` equal steps.
GridField integrate(const StepContext& ctx, GridField x, double tau0, double tau1, int substeps);

struct StepSample {
  GridField output;
  std::vector<double> taus;
  std::vector<GridField> path;  // states at taus; path.front() = U_0, path.back() = output
};

StepSample sample_step(const GridField& u, const KernelSpec& spec, std::uint64_t seed);
// Endpoint only (used as a model kernel).
GridField sample_output(const GridField& u, const KernelSpec& spec, std::uint64_t seed);

// Member i uses derive_seed(seed, i, step), matching step `step` of sample_rollout.
LawCurve mixture_interpolation(const Ensemble& e, const KernelSpec& spec, const std::vector<double>& taus,
                               std::uint64_t seed, std::uint64_t step = 0);

// Concatenated per-member paths over several physical steps.
struct PathBundle {
  double dt = 0.0;
  std::vector<double> taus;                                   // shared internal nodes
  std::vector<std::vector<std::vector<GridField>>> segments;  // [member][step][node]

  std::size_t members() const { return segments.size(); }
  std::size_t steps() const { return segments.empty() ? 0 : segments.front().size(); }
  double horizon() const { return dt * double(steps()); }
  bool junctions_continuous() const;  // bitwise
  // Piecewise-linear interpolation in physical time.
  GridField at(std::size_t member, double t) const;
};

struct RolloutSample {
  LawCurve curve;  // ensembles at t_0 .. t_N
  std::optional<PathBundle> paths;
};

// Member i at step n uses the stream derive_seed(seed, i, n).
RolloutSample sample_rollout(const Ensemble& init, const KernelSpec& spec, int steps, std::uint64_t seed,
                             bool keep_paths);

// Cylindrical observable f(<x, t_1>, ..., <x, t_m>).
struct Cylindrical {
  std::vector<GridField> tests;
  std::function<double(const std::vector<double>&)> f;
  std::function<std::vector<double>(const std::vector<double>&)> grad;

  double value(const GridField& x) const;
  // <D Phi(x), w>
  double derivative(const GridField& x, const GridField& w) const;
};
Cylindrical constant_observable(double c);
Cylindrical linear_observable(const GridField& test);
Cylindrical bilinear_observable(const GridField& t1, const GridField& t2);

struct ContinuityResidual {
  double mixture = 0.0;      // max |FD d/dtau E Phi - E <D Phi, v>| over eval taus
  double conditional = 0.0;  // max over members of the same per-member quantity
  std::vector<double> eval_taus;
};
// Central differences with step dtau evaluated at eval_taus (multiples of dtau in (0, 1)).
ContinuityResidual continuity_equation_check(const Ensemble& e, const KernelSpec& spec, const Cylindrical& phi,
                                             double dtau, const std::vector<double>& eval_taus,
                                             std::uint64_t seed, int fine_steps_per_unit = 512);

struct RegularityReport {
  double C_spd = 0.0;
  double C_ch = 0.0;
  double C_str = 0.0;
  double worst_increment_ratio = 0.0;  // max over pairs of mean H^-1 increment / (C_spd |t - s|)
  std::size_t pairs = 0;
  Report report;
};
RegularityReport time_regularity_report(const PathBundle& b, std::size_t pair_samples, std::uint64_t seed);

Report holder_from_action_check(const PathBundle& b, double p, std::size_t pair_samples, std::uint64_t seed,
                                double tol = 1e-2);

// W1 <= W2 <= coupled RMS for index-coupled ensembles.
Report pipeline_coupling_check(const Ensemble& reference, const Ensemble& model);

}  // namespace lawbound::sampler
