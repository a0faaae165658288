#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lawbound/ensemble.hpp"

namespace lawbound {

struct TransportPlan {
  enum class Mode { Permutation, Dense };
  Mode mode = Mode::Permutation;
  std::vector<int> permutation;  // a[i] -> b[permutation[i]]
  std::vector<double> matrix;    // rows x cols, row-major (dense mode)
  std::size_t rows = 0, cols = 0;
  double cost = 0.0;  // sum_ij pi_ij d_ij^p
  int order = 2;

  // Bijection / marginal check.
  bool valid(double tol = 1e-9) const;
};

struct AssignmentResult {
  std::vector<int> assignment;  // row -> column
  double total = 0.0;
  std::vector<double> row_potential, col_potential;
};

// Square min-cost assignment (shortest augmenting path with potentials).
// Ties resolve to the lowest column index.
AssignmentResult solve_assignment(std::span<const double> cost, std::size_t n);
// max violation of c_ij - u_i - v_j >= 0 plus the primal-dual gap
double dual_certificate_gap(std::span<const double> cost, std::size_t n, const AssignmentResult& r);

namespace transport {

// N x M matrix of grid-quadrature L2 distances.
std::vector<double> pairwise_distances(const Ensemble& a, const Ensemble& b);

struct Result {
  double value = 0.0;
  TransportPlan plan;
  double certificate_gap = 0.0;
};

Result wasserstein_exact(const Ensemble& a, const Ensemble& b, int p);
double w1(const Ensemble& a, const Ensemble& b);
double w2(const Ensemble& a, const Ensemble& b);

// Log-domain entropic transport; value = (sum pi c)^{1/p} without the entropy term.
Result sinkhorn(const Ensemble& a, const Ensemble& b, int p, double epsilon, int max_iterations);

// sqrt(mean ||a_i - b_i||^2): cost of the index-matched coupling.
double diagonal_rms(const Ensemble& a, const Ensemble& b);

double dT(const LawCurve& a, const LawCurve& b);

Ensemble project_ensemble(const Ensemble& e, double K);

struct MetricReport {
  double W1 = 0.0, W2 = 0.0;
  double tail_a = 0.0, tail_b = 0.0;
  double train_K = 0.0;
  double bound = 0.0;
  bool satisfied = true;
  double K = 0.0;
  bool b_band_limited = false;    // tail_b == 0
  double band_limited_bound = 0;  // tail_a + train_K
  bool band_limited_satisfied = true;
  double dT = std::nan("");
};

MetricReport capacity_coverage(const Ensemble& a, const Ensemble& b, double K);

using ReferenceMap = std::function<GridField(const GridField&)>;
using ModelKernel = std::function<GridField(const GridField&, std::uint64_t)>;

// Pushes rho through both maps (model seeded per member) and returns the output ensembles.
std::pair<Ensemble, Ensemble> pushforwards(const Ensemble& rho, const ReferenceMap& ref,
                                           const ModelKernel& model, std::uint64_t seed);
double one_step_defect(const Ensemble& rho, const ReferenceMap& ref, const ModelKernel& model,
                       int p, std::uint64_t seed);

}  // namespace transport
}  // namespace lawbound
