#pragma once

#include <span>
#include <vector>

#include "lawbound/ensemble.hpp"
#include "lawbound/report.hpp"
#include "lawbound/transport.hpp"

namespace lawbound::euler {

struct Config {
  Grid grid{2, 64};
  double dt = 0.01;
  double dealias = 2.0 / 3.0;
  int K_init = 16;
  double cfl = 0.5;
};

void validate(const Config& cfg);
// Largest retained |k_i| under the dealiasing rule.
int dealias_cutoff(const Config& cfg);

// Vorticity plus the (conserved) mean velocity.
struct State {
  SpecField omega;
  double mean[2] = {0.0, 0.0};
};

class Solver {
 public:
  explicit Solver(Config cfg);
  const Config& config() const { return cfg_; }

  State to_state(const GridField& u) const;
  GridField velocity(const State& s) const;
  // One RK4 step of size h (h <= cfg.dt); checks CFL and finiteness.
  void advance(State& s, double h) const;
  // Advances by exactly `duration` with ceil(duration / dt) equal substeps.
  void advance_to(State& s, double duration) const;
  // d omega / dt
  SpecField rhs(const State& s, double* umax = nullptr) const;

 private:
  Config cfg_;
  std::vector<char> keep_;
};

GridField step(const GridField& u, const Config& cfg);
GridField evolve(const GridField& u, double t, const Config& cfg);
// States at the given increasing times (first time may be 0).
std::vector<GridField> trajectory(const GridField& u, std::span<const double> times, const Config& cfg);
Ensemble evolve_ensemble(const Ensemble& e, double t, const Config& cfg);

// du/dt of the (dealiased) Euler dynamics at u.
GridField tendency(const GridField& u, const Config& cfg);

GridField vorticity(const GridField& u);
GridField taylor_green(const Grid& g, double amplitude = 1.0);

struct Conservation {
  double t = 0.0;
  double energy = 0.0;
  double enstrophy = 0.0;
  double divergence = 0.0;
};
Conservation diagnostics(const GridField& u, double t);

class StrainField {
 public:
  explicit StrainField(const GridField& v);
  double norm_at(std::size_t i) const;  // operator norm of the 2x2 symmetric tensor
  double trace_at(std::size_t i) const { return s11[i] + s22[i]; }
  double sup_norm() const;
  std::vector<double> s11, s12, s22;
  Grid grid;
};

// Operator norm of [[a, b], [b, c]].
double sym2_norm(double a, double b, double c);

// integral of |S(v)| |u - v|^2 over ||u - v||^2 (0 when u = v)
double lambda_pointwise(const GridField& u, const GridField& v);
struct LambdaParts {
  double numerator = 0.0;
  double denominator = 0.0;
};
LambdaParts lambda_parts(const GridField& u, const GridField& v);
// Pairs (first[i], second[i]) already coupled; ratio of summed parts.
double lambda_coupled(const std::vector<GridField>& first, const std::vector<GridField>& second);
double lambda_coupled(const Ensemble& a, const Ensemble& b, const TransportPlan& plan);

// -integral (w x w) : M for M = S(v) (symmetric) or grad v (full)
double strain_pairing(const GridField& w, const GridField& v, bool symmetric_part);

struct IdentityResidual {
  double residual = 0.0;       // max |lhs - rhs| / max |rhs|
  double antisym_gap = 0.0;    // |pairing with S - pairing with grad v| relative
  std::vector<double> times, lhs, rhs;
};
// Compares d/dt (1/2)||u - v||^2 (4th-order central differences of per-step values)
// against -integral (w x w) : S(v) at `checkpoints` interior times in (0, t).
IdentityResidual l2_difference_identity_check(const GridField& u0, const GridField& v0, const Config& cfg,
                                              double t, int checkpoints = 9);

Report w2_strain_bound_check(const Ensemble& a, const Ensemble& b, const Config& cfg, double t,
                             int checkpoints = 8, double tol = 1e-3);

struct StrainWindow {
  double alpha = 0.0;                  // trapezoid of the coupled average strain
  double max_strain_integral = 0.0;    // trapezoid of max_i sup_x |S(second_i)|
  std::vector<double> times, lambda_at, max_strain_at;
  std::vector<double> pair_alpha;      // per-pair pointwise exponent
  std::vector<double> pair_start, pair_end;  // ||first_i - second_i|| at both ends
  std::vector<GridField> first_end, second_end;
};
// Pushes coupled pairs through the flow over [0, t] with `checkpoints` equal intervals.
StrainWindow strain_window(const std::vector<GridField>& first, const std::vector<GridField>& second,
                           const Config& cfg, double t, int checkpoints);

}  // namespace lawbound::euler
