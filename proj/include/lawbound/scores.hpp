#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lawbound/ensemble.hpp"
#include "lawbound/report.hpp"

namespace lawbound::scores {

// Population (all-pairs) forms.
double crps(std::span<const double> samples, double observation);
double crps(std::span<const double> P, std::span<const double> Q);
// Exact 1D W1 between empirical laws (integral of |F - G|); sizes may differ.
double w1_1d(std::span<const double> P, std::span<const double> Q);

using Vec = std::vector<double>;
double energy_score(const std::vector<Vec>& samples, const Vec& observation);
double energy_score(const std::vector<Vec>& P, const std::vector<Vec>& Q);
// Euclidean W1 by exact assignment; equal sizes.
double w1_euclidean(const std::vector<Vec>& P, const std::vector<Vec>& Q);

// CRPS(P,Q) <= 2 W1(P,Q) and |CRPS(P,Q) - CRPS(P',Q)| <= 2 W1(P,P').
Report crps_w1_check(std::span<const double> P, std::span<const double> Pprime, std::span<const double> Q,
                     double slack = 1e-12);
// Randomized triples of Gaussian/uniform/mixture samples.
Report crps_w1_suite(int triples, std::size_t samples, std::uint64_t seed, double slack = 1e-12);
Report energy_w1_suite(int pairs, std::size_t samples, int dim, std::uint64_t seed, double slack = 1e-12);

struct ResolvedObservable {
  enum class Kind { InnerProduct, MollifiedPoint };
  Kind kind = Kind::InnerProduct;
  GridField psi;  // representing field
  double lipschitz = 0.0;

  double operator()(const GridField& u) const { return inner(u, psi); }
};
ResolvedObservable inner_product_observable(GridField psi);
// Periodic Gaussian of width `width` centred at `x`, unit mass, on component `component`.
ResolvedObservable mollified_evaluation(const Grid& g, std::array<double, 2> x, int component, double width);

struct CrpsCurve {
  std::vector<double> t, crps, w1_pushforward, w1_fields, bound;  // bound = 2 Lip W1(fields)
  double integrated_crps = 0.0, dT = 0.0;
};
CrpsCurve crps_curve(const LawCurve& a, const LawCurve& b, const ResolvedObservable& obs);
Report crps_dT_check(const LawCurve& a, const LawCurve& b, const ResolvedObservable& obs, double slack = 1e-9);
Report crps_dT_check(const CrpsCurve& c, const ResolvedObservable& obs, double slack = 1e-9);

struct QuadraticCertificate {
  double lambda = 1.0;
  double C_R = 1.0;
  double clip = 1e6;
};
void validate(const QuadraticCertificate& c);

// Fourier-diagonal restriction to a coarse grid and multiplier-weighted reconstruction.
struct DownUp {
  int fine_n = 64, coarse_n = 32;
  double gain_slope = 0.0;  // multiplier 1 + slope |k|^2 / (coarse_n/2)^2

  GridField down(const GridField& u) const;
  GridField up(const GridField& z) const;
  double multiplier(double k2) const;
  double stability_constant() const;  // max multiplier over kept coarse modes
};

struct XnllSummary {
  double mse = 0.0, expected_xnll = 0.0, bound = 0.0, equality_gap = 0.0;
  Report report;
};
using TruthMap = std::function<GridField(const GridField&)>;
// Quadratic conditional NLL 1/2 lambda |b - b_true(a)|^2 integrated over the domain.
XnllSummary xnll_check(const Ensemble& inputs, const Ensemble& model_outputs, const TruthMap& truth,
                       const QuadraticCertificate& cert, const DownUp* reconstruction = nullptr);

double clip(double r, double M);
std::vector<double> clipped_certificate(std::span<const double> values, double M);

// Empirical P(||a_i|| + ||b_i|| > R) against 2 (E||a||^2 + E||b||^2) / R^2.
Report tail_bound_report(const Ensemble& a, const Ensemble& b, std::span<const double> radii);

}  // namespace lawbound::scores
