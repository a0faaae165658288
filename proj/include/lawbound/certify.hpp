#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "lawbound/ensemble.hpp"
#include "lawbound/report.hpp"

namespace lawbound::certify {

// k divergence-free band-limited tests with temporal profile (1 - t/T)^3.
struct TestTuple {
  std::vector<GridField> tests;
  double T = 1.0;

  int k() const { return static_cast<int>(tests.size()); }
  double theta(double t) const;
  double dtheta(double t) const;
  // sum_i ||phi_i|| prod_{j != i} ||phi_j|| with L^inf_t L^2_x norms
  double norm_factor() const;
};

TestTuple make_test_tuple(const Grid& g, int k, double K_test, double T, std::uint64_t seed);

// Leray P<=K (-div(u x u)), exact on |k| <= K for band-limited u.
GridField euler_drift_resolved(const GridField& u, double K);
// Same without the Leray projection (differs by a gradient).
GridField euler_drift_unprojected(const GridField& u, double K);
// int (u x u) : grad phi by grid quadrature
double euler_drift_pairing_quadrature(const GridField& u, const GridField& phi);

double product_observable(const TestTuple& tt, double t, const GridField& u);
double dt_product_observable(const TestTuple& tt, double t, const GridField& u);
double directional_derivative(const TestTuple& tt, double t, const GridField& u, const GridField& w);

using Drift = std::function<GridField(double, const GridField&)>;

// B = B*_K + epsilon (g0 + shear P<=K d_x u)
struct DriftSpec {
  double K = 8;
  double epsilon = 0.0;
  double shear = 1.0;
  GridField g0;

  static DriftSpec make(const Grid& g, double K, double epsilon, std::uint64_t seed);
  GridField perturbation(const GridField& u) const;
  GridField apply(const GridField& u) const;
  Drift learned() const;
  Drift resolved() const;
};

// RK4 on du/dt = drift(t, u) per member with step dt; curve stored at every step.
LawCurve drift_driven_curve(const Ensemble& init, const Drift& drift, double T, double dt);

double residual_direct(const LawCurve& c, const TestTuple& tt, const Drift& resolved);
double residual_direct(const LawCurve& c, const TestTuple& tt, double K);
double residual_via_defect(const LawCurve& c, const TestTuple& tt, const Drift& resolved, const Drift& learned);
double residual_via_defect(const LawCurve& c, const TestTuple& tt, const DriftSpec& drift);

struct ResidualSummary {
  double residual_direct = 0.0;
  double residual_defect = 0.0;
  double rel_gap = 0.0;
  double L_drift = 0.0;
  double M_2k = 0.0;
  double bound = 0.0;
  bool satisfied = true;
  Report report;
};
ResidualSummary residual_bound_check(const LawCurve& c, const TestTuple& tt, const DriftSpec& drift);

// ---------------------------------------------------------------- Gaussian diffusion

enum class Schedule { VarianceExploding, VariancePreserving };

struct GaussianDiffusion {
  Eigen::VectorXd m0;
  Eigen::MatrixXd S0;
  Schedule schedule = Schedule::VarianceExploding;
  double rate = 1.0;  // sigma (VE) or beta (VP)
  // learned score = exact score + c (B (x - m_tau) + e)
  Eigen::MatrixXd B;
  Eigen::VectorXd e;

  static GaussianDiffusion make(int dim, Schedule s, double rate, std::uint64_t seed);
  int dim() const { return static_cast<int>(m0.size()); }
  double sigma(double tau) const;
  Eigen::VectorXd mean(double tau) const;
  Eigen::MatrixXd cov(double tau) const;
};

// x -> F x + g
struct Affine {
  Eigen::MatrixXd F;
  Eigen::VectorXd g;
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return F * x + g; }
  Affine operator-(const Affine& o) const { return {F - o.F, g - o.g}; }
  Affine scaled(double a) const { return {a * F, a * g}; }
};
// E ||f(X)||^2 for X ~ N(m, S)
double gaussian_sq_expectation(const Affine& f, const Eigen::VectorXd& m, const Eigen::MatrixXd& S);

Affine forward_drift(const GaussianDiffusion& gd, double tau);
Affine exact_score(const GaussianDiffusion& gd, double tau);
Affine learned_score(const GaussianDiffusion& gd, double tau, double c);
Affine pf_drift(const GaussianDiffusion& gd, double tau, const Affine& score);

struct PfIdentity {
  std::vector<double> taus, drift_side, score_side;
  double max_rel_gap = 0.0;
  double integrated_drift = 0.0, integrated_score = 0.0;
};
PfIdentity pf_identity(const GaussianDiffusion& gd, const std::vector<double>& taus, double c);

struct MarginalReport {
  double worst_mean_z = 0.0;  // |mean error| / standard error
  double worst_cov_z = 0.0;
};
// Samples p_0, integrates the exact PF-ODE forward, compares moments at the taus.
MarginalReport pf_marginal_check(const GaussianDiffusion& gd, const std::vector<double>& taus, std::size_t samples,
                                 std::uint64_t seed, int rk4_steps = 200);

Report pf_identities(const GaussianDiffusion& gd, const std::vector<double>& taus, double c, std::size_t samples,
                     std::uint64_t seed);

}  // namespace lawbound::certify
