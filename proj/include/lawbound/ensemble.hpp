#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lawbound/fields.hpp"

namespace lawbound {

// Uniformly weighted empirical law.
class Ensemble {
 public:
  Ensemble() = default;
  explicit Ensemble(std::vector<GridField> members);

  std::size_t size() const { return members_.size(); }
  const Grid& grid() const { return members_.front().grid(); }
  int components() const { return members_.front().components(); }
  const GridField& operator[](std::size_t i) const { return members_[i]; }
  const std::vector<GridField>& members() const { return members_; }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

 private:
  std::vector<GridField> members_;
};

struct LawCurve {
  std::vector<double> times;
  std::vector<Ensemble> ensembles;

  LawCurve() = default;
  LawCurve(std::vector<double> t, std::vector<Ensemble> e);
  double horizon() const { return times.back(); }
  std::size_t size() const { return times.size(); }
  const Grid& grid() const { return ensembles.front().grid(); }
};

struct StructureCurve {
  std::vector<double> radii;
  std::vector<double> values;
  bool time_averaged = false;
};

// Same grid/m and same member count.
void require_matching(const Ensemble& a, const Ensemble& b);

double moment(const Ensemble& e, int p);
double tail(const Ensemble& e, double K);
// sqrt(mean ||P<=K u||^2)
double resolved_rms(const Ensemble& e, double K);
std::vector<double> tail_sweep(const Ensemble& e, std::span<const double> Ks);
// mean over members of sum_c |uhat_c(k)|^2, per mode
std::vector<double> mean_power_spectrum(const Ensemble& e);
std::vector<double> tail_sweep_from_spectrum(const Grid& g, std::span<const double> power,
                                             std::span<const double> Ks);

// Lattice offsets with 0 < |h| dx <= r; throws if empty.
std::vector<std::array<int, 2>> ball_offsets(const Grid& g, double r);

StructureCurve pointwise_modulus(const Ensemble& e, std::span<const double> radii);
// sqrt of the trapezoid-in-time integral of the pointwise squared modulus.
StructureCurve structure_function(const LawCurve& c, std::span<const double> radii);

struct TimeAverageCheck {
  std::vector<double> lhs;  // S_r
  std::vector<double> rhs;  // sqrt(T) max_t omega_t(r)
  bool holds = true;
};
TimeAverageCheck pointwise_to_timeavg_check(const LawCurve& c, std::span<const double> radii);

// Geometrically spaced radii in [r_min, r_max].
std::vector<double> default_radii(const Grid& g, double r_min, double r_max, int count);

struct PowerFit {
  double C0 = 0.0;
  double s = 0.0;
  double residual = 0.0;  // RMS log-residual
};
// log omega^2 = log C0 + 2 s log r over radii in [r_min, r_max]
PowerFit fit_power_modulus(const StructureCurve& s, double r_min, double r_max);

// log-log least squares y = a + b x; returns {a, b, r2}
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  double rms_residual = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

using ScalarFn = std::function<double(std::span<const double>)>;

struct MarginalCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double std_error = 0.0;  // zero for exact enumeration
};
// Exact: sum over all k-tuples of lattice points of psi(u(x_i)) vs |D|^{k-1} sum psi(u(x)).
MarginalCheck kpoint_marginal_exact(const Ensemble& e, int k, int i, const ScalarFn& psi);
// Monte Carlo over uniformly drawn k-tuples of lattice points.
MarginalCheck kpoint_marginal_check(const Ensemble& e, int k, const ScalarFn& psi,
                                    std::size_t samples, std::uint64_t seed);

}  // namespace lawbound
