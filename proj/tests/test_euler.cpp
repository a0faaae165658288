#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "lawbound/euler.hpp"
#include "support.hpp"

using namespace lbtest;

namespace {

euler::Config cfg_for(int n, double dt) {
  euler::Config c;
  c.grid = Grid(2, n);
  c.dt = dt;
  c.K_init = n / 4;
  return c;
}

// |S(v)| at every point from spectral gradients and a dense eigen solve
std::vector<double> strain_norm_oracle(const GridField& v) {
  auto V = forward(v);
  auto dx = inverse(derivative(V, 0)), dy = inverse(derivative(V, 1));
  std::vector<double> out(v.points());
  for (std::size_t i = 0; i < v.points(); ++i) {
    Eigen::Matrix2d G;
    G << dx.at(0, i), dy.at(0, i), dx.at(1, i), dy.at(1, i);
    Eigen::Matrix2d S = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S);
    out[i] = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  return out;
}

}  // namespace

TEST(EulerConfig, Validation) {
  auto c = cfg_for(32, 0.01);
  EXPECT_NO_THROW(euler::validate(c));
  auto bad = c;
  bad.dt = 0;
  EXPECT_THROW(euler::validate(bad), Error);
  bad = c;
  bad.K_init = 9;
  EXPECT_THROW(euler::validate(bad), Error);
  bad = c;
  bad.grid = Grid(1, 32);
  EXPECT_THROW(euler::validate(bad), Error);
  EXPECT_EQ(euler::dealias_cutoff(c), 10);
}

TEST(EulerStep, ZeroStaysZero) {
  auto c = cfg_for(32, 0.01);
  GridField z(c.grid, 2);
  EXPECT_EQ(l2_norm(euler::evolve(z, 0.3, c)), 0.0);
}

TEST(EulerStep, TaylorGreenIsSteady) {
  auto c = cfg_for(64, 0.01);
  auto u = euler::taylor_green(c.grid);
  // vorticity equation residual at t = 0
  EXPECT_LT(l2_norm(euler::tendency(u, c)), 1e-12);
  auto w = euler::vorticity(u);
  auto expect = from_fn(c.grid, 1, [](int, double x, double y) { return std::cos(x) + std::cos(y); });
  EXPECT_LT(sup_norm(w - expect), 1e-12);
  auto ut = euler::evolve(u, 1.0, c);
  EXPECT_LE(l2_distance(ut, u) / l2_norm(u), 1e-6);
}

TEST(EulerStep, ConservesEnergyEnstrophyAndDivergence) {
  auto c = cfg_for(64, 0.005);
  auto u = random_divfree(c.grid, 3, 8, 17);
  u *= 0.5;
  auto d0 = euler::diagnostics(u, 0);
  auto ut = euler::evolve(u, 0.5, c);
  auto d1 = euler::diagnostics(ut, 0.5);
  EXPECT_LE(std::abs(d1.energy - d0.energy) / d0.energy, 1e-6);
  EXPECT_LE(std::abs(d1.enstrophy - d0.enstrophy) / d0.enstrophy, 1e-6);
  EXPECT_LE(d1.divergence, 1e-8);
  EXPECT_LE(divergence_norm(ut), 1e-8);
  EXPECT_NEAR(d0.energy, inner(u, u), 1e-10 * d0.energy);
  EXPECT_GT(l2_distance(ut, u), 1e-3);  // it actually moved
}

TEST(EulerStep, TrajectoryMatchesEvolve) {
  auto c = cfg_for(32, 0.01);
  auto u = random_divfree(c.grid, 3, 6, 2);
  std::vector<double> ts{0.0, 0.1, 0.25};
  auto tr = euler::trajectory(u, ts, c);
  ASSERT_EQ(tr.size(), 3u);
  EXPECT_LT(l2_distance(tr[0], u), 1e-13 * l2_norm(u));
  EXPECT_LT(l2_distance(tr[2], euler::evolve(u, 0.25, c)), 1e-12);
}

TEST(EulerStep, GuardsTrip) {
  auto c = cfg_for(32, 0.5);
  auto u = random_divfree(c.grid, 3, 6, 2);
  u *= 10.0;
  EXPECT_THROW(euler::step(u, c), NumericalError);
  auto bad = random_divfree(c.grid, 3, 6, 2);
  bad.values()[7] = std::nan("");
  EXPECT_THROW(euler::step(bad, cfg_for(32, 0.01)), Error);
}

TEST(Strain, NormClosedFormMatchesEigenSolve) {
  Grid g(2, 32);
  auto v = random_divfree(g, 2, 8, 4);
  euler::StrainField S(v);
  auto oracle = strain_norm_oracle(v);
  double trace = 0;
  for (std::size_t i = 0; i < g.points(); ++i) {
    EXPECT_NEAR(S.norm_at(i), oracle[i], 1e-10);
    trace = std::max(trace, std::abs(S.trace_at(i)));
  }
  EXPECT_LE(trace, 1e-8);
  EXPECT_NEAR(euler::sym2_norm(3, 0, -5), 5, 1e-15);
  EXPECT_NEAR(euler::sym2_norm(1, 2, 1), 3, 1e-14);
}

TEST(Lambda, Examples) {
  Grid g(2, 32);
  auto u = random_divfree(g, 2, 8, 4), v = random_divfree(g, 2, 8, 5);
  EXPECT_EQ(euler::lambda_pointwise(u, u), 0.0);
  GridField zero(g, 2);
  EXPECT_EQ(euler::lambda_pointwise(u, zero), 0.0);
  auto constant = from_fn(g, 2, [](int c, double, double) { return c ? 0.3 : -1.0; });
  EXPECT_NEAR(euler::lambda_pointwise(u, constant), 0.0, 1e-14);
  // oracle
  auto norms = strain_norm_oracle(v);
  auto w = u - v;
  double num = 0;
  for (std::size_t i = 0; i < g.points(); ++i) num += norms[i] * (w.at(0, i) * w.at(0, i) + w.at(1, i) * w.at(1, i));
  num *= g.cell_volume();
  EXPECT_LT(rel(euler::lambda_pointwise(u, v), num / inner(w, w)), 1e-10);
  EXPECT_LE(euler::lambda_pointwise(u, v), euler::StrainField(v).sup_norm() * (1 + 1e-12));
}

TEST(Lambda, CoupledIsRatioOfSums) {
  Grid g(2, 32);
  std::vector<GridField> a, b;
  double num = 0, den = 0;
  for (int i = 0; i < 4; ++i) {
    a.push_back(random_divfree(g, 2, 8, 10 + i));
    b.push_back(random_divfree(g, 2, 8, 20 + i));
    auto p = euler::lambda_parts(a.back(), b.back());
    num += p.numerator;
    den += p.denominator;
  }
  EXPECT_LT(rel(euler::lambda_coupled(a, b), num / den), 1e-12);
  EXPECT_EQ(euler::lambda_coupled(a, a), 0.0);
}

TEST(L2Identity, EqualStartsGiveZero) {
  auto c = cfg_for(32, 0.01);
  auto u = euler::taylor_green(c.grid);
  auto r = euler::l2_difference_identity_check(u, u, c, 0.2);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(L2Identity, SecondOrderUnderRefinement) {
  Grid g(2, 64);
  auto v0 = euler::taylor_green(g);
  auto pert = random_divfree(g, 3, 8, 3);
  auto u0 = v0 + (1e-2 / l2_norm(pert) * l2_norm(v0)) * pert;
  std::vector<double> res;
  for (double dt : {0.02, 0.01, 0.005}) {
    auto c = cfg_for(64, dt);
    auto r = euler::l2_difference_identity_check(u0, v0, c, 0.5);
    EXPECT_LE(r.residual, std::max(1e-4, dt * dt));
    EXPECT_LE(r.antisym_gap, 1e-10);
    res.push_back(r.residual);
  }
  EXPECT_GE(res[0] / res[1], 3.5);
  EXPECT_GE(res[1] / res[2], 3.5);
}

TEST(StrainPairing, AntisymmetricPartInvisible) {
  Grid g(2, 32);
  auto w = random_divfree(g, 2, 8, 1), v = random_divfree(g, 2, 8, 2);
  double s = euler::strain_pairing(w, v, true), full = euler::strain_pairing(w, v, false);
  EXPECT_LE(std::abs(s - full), 1e-10 * std::max(1.0, std::abs(s)));
}

TEST(W2StrainBound, Examples) {
  auto c = cfg_for(32, 0.01);
  auto a = random_ensemble(c.grid, 4, 3, 8, 0.5, 1);
  auto same = euler::w2_strain_bound_check(a, a, c, 0.1, 4);
  EXPECT_TRUE(same.all_satisfied());
  EXPECT_EQ(same.metrics.at("w2_initial"), 0.0);
  EXPECT_EQ(same.metrics.at("w2_final"), 0.0);
  auto b = random_ensemble(c.grid, 4, 3, 8, 0.5, 2);
  auto at0 = euler::w2_strain_bound_check(a, b, c, 0.0, 4);
  EXPECT_TRUE(at0.all_satisfied());
  EXPECT_NEAR(at0.metrics.at("w2_final"), at0.metrics.at("w2_initial"), 1e-12 * at0.metrics.at("w2_initial"));
  EXPECT_EQ(at0.metrics.at("alpha"), 0.0);
  auto r = euler::w2_strain_bound_check(a, b, c, 0.02, 2);
  EXPECT_TRUE(r.all_satisfied());
  EXPECT_NEAR(r.metrics.at("w2_final"), r.metrics.at("w2_initial"), 0.05 * r.metrics.at("w2_initial"));
}

TEST(W2StrainBound, PerturbationPairsHold) {
  auto c = cfg_for(32, 0.01);
  c.K_init = 8;
  auto a = random_ensemble(c.grid, 8, 3, 8, 0.5, 11);
  std::vector<GridField> bm;
  for (std::size_t i = 0; i < a.size(); ++i) bm.push_back(a[i] + 0.1 * random_divfree(c.grid, 3, 8, derive_seed(12, i)));
  Ensemble b(std::move(bm));
  auto r = euler::w2_strain_bound_check(a, b, c, 0.25, 8);
  for (const auto& ch : r.checks) EXPECT_TRUE(ch.satisfied) << ch.name << " " << ch.value << " " << ch.bound;
  EXPECT_LE(r.metrics.at("exp_alpha"), r.metrics.at("exp_max_strain") * (1 + 1e-12));
}

TEST(StrainWindow, PairwiseExponentsBoundEndpoints) {
  auto c = cfg_for(32, 0.01);
  std::vector<GridField> a, b;
  for (int i = 0; i < 3; ++i) {
    a.push_back(random_divfree(c.grid, 3, 8, 40 + i));
    a.back() *= 0.5;
    b.push_back(a.back() + 0.05 * random_divfree(c.grid, 3, 8, 50 + i));
  }
  auto w = euler::strain_window(a, b, c, 0.2, 8);
  ASSERT_EQ(w.times.size(), 9u);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_LE(w.pair_end[i], std::exp(w.pair_alpha[i]) * w.pair_start[i] * (1 + 1e-3));
  EXPECT_LE(w.alpha, w.max_strain_integral * (1 + 1e-12));
}
