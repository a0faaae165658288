#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "lawbound/transport.hpp"
#include "support.hpp"

using namespace lbtest;

namespace {

double brute_force(const Ensemble& a, const Ensemble& b, int p) {
  const std::size_t N = a.size();
  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double c = 0;
    for (std::size_t i = 0; i < N; ++i) c += std::pow(l2_distance(a[i], b[perm[i]]), p);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / N, 1.0 / p);
}

Ensemble shifted(const Ensemble& e, double c) {
  std::vector<GridField> m;
  for (const auto& u : e) {
    GridField v = u;
    for (auto& x : v.values()) x += c;
    m.push_back(std::move(v));
  }
  return Ensemble(std::move(m));
}

}  // namespace

TEST(Assignment, MatchesBruteForceAndCertifies) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + t % 7;
    std::vector<double> c(n * n);
    for (auto& v : c) v = U(rng);
    auto r = solve_assignment(c, n);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += c[i * n + perm[i]];
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(r.total, best, 1e-12);
    EXPECT_LT(dual_certificate_gap(c, n, r), 1e-12);
  }
  // ties go to the lowest column
  std::vector<double> zeros(16, 0.0);
  auto r = solve_assignment(zeros, 4);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(r.assignment[i], i);
}

TEST(Wasserstein, Examples) {
  Grid g(2, 16);
  auto a = random_ensemble(g, 5, 2, 6, 1, 1);
  auto r = transport::wasserstein_exact(a, a, 2);
  EXPECT_EQ(r.value, 0.0);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(r.plan.permutation[i], i);
  auto u = random_divfree(g, 2, 6, 10), v = random_divfree(g, 2, 6, 11);
  Ensemble su({u}), sv({v});
  for (int p : {1, 2}) EXPECT_NEAR(transport::wasserstein_exact(su, sv, p).value, l2_distance(u, v), 1e-12);
  auto b = random_ensemble(g, 5, 2, 6, 1, 2);
  EXPECT_THROW(transport::wasserstein_exact(a, random_ensemble(g, 4, 2, 6, 1, 2), 2), Error);
  EXPECT_THROW(transport::wasserstein_exact(a, b, 3), Error);
}

TEST(Wasserstein, BruteForcePermutationOracle) {
  Grid g(2, 16);
  for (int t = 0; t < 10; ++t) {
    auto a = random_ensemble(g, 4, 2, 6, 1, 100 + t), b = random_ensemble(g, 4, 2, 6, 1.3, 200 + t);
    for (int p : {1, 2}) {
      auto r = transport::wasserstein_exact(a, b, p);
      EXPECT_NEAR(r.value, brute_force(a, b, p), 1e-12);
      EXPECT_TRUE(r.plan.valid());
      EXPECT_GE(r.plan.cost, 0.0);
      EXPECT_LT(r.certificate_gap, 1e-9);
    }
  }
}

TEST(Wasserstein, MetricAxioms) {
  Grid g(2, 16);
  for (int t = 0; t < 50; ++t) {
    auto a = random_ensemble(g, 6, 2, 6, 1, 3 * t), b = random_ensemble(g, 6, 2.5, 6, 1, 3 * t + 1),
         c = random_ensemble(g, 6, 3, 6, 0.7, 3 * t + 2);
    for (int p : {1, 2}) {
      double ab = transport::wasserstein_exact(a, b, p).value, ba = transport::wasserstein_exact(b, a, p).value;
      double bc = transport::wasserstein_exact(b, c, p).value, ac = transport::wasserstein_exact(a, c, p).value;
      EXPECT_NEAR(ab, ba, 1e-12);
      EXPECT_LE(ac, ab + bc + 1e-9);
    }
    EXPECT_LE(transport::w1(a, b), transport::w2(a, b) + 1e-9);
    for (double K : {2.0, 4.0})
      EXPECT_LE(transport::w2(transport::project_ensemble(a, K), transport::project_ensemble(b, K)),
                transport::w2(a, b) + 1e-9);
    EXPECT_LE(transport::w2(a, b), transport::diagonal_rms(a, b) + 1e-12);
  }
}

TEST(Sinkhorn, Examples) {
  Grid g(2, 16);
  auto a = random_ensemble(g, 8, 2, 6, 1, 5);
  auto same = transport::sinkhorn(a, a, 2, 0.01, 5000);
  EXPECT_LT(same.value, 0.1 * transport::w2(a, random_ensemble(g, 8, 2, 6, 1, 6)));
  EXPECT_TRUE(same.plan.valid(1e-6));
  auto u = random_divfree(g, 2, 6, 10), v = random_divfree(g, 2, 6, 11);
  EXPECT_NEAR(transport::sinkhorn(Ensemble({u}), Ensemble({v}), 2, 0.1, 100).value, l2_distance(u, v), 1e-6);
  EXPECT_THROW(transport::sinkhorn(a, a, 2, 0.0, 100), Error);
}

TEST(Sinkhorn, CloseToExactForSmallEpsilon) {
  Grid g(2, 16);
  auto a = random_ensemble(g, 64, 2, 6, 1, 7), b = random_ensemble(g, 64, 2, 6, 1.2, 8);
  double exact = transport::w2(a, b);
  auto s = transport::sinkhorn(a, b, 2, 0.02 * exact * exact, 20000);
  EXPECT_NEAR(s.value, exact, 0.05 * exact);
  EXPECT_GE(s.value, exact * (1 - 1e-9));
  EXPECT_TRUE(s.plan.valid(1e-6));
}

TEST(Sinkhorn, NonConvergenceIsSignalled) {
  Grid g(2, 16);
  auto a = random_ensemble(g, 16, 2, 6, 1, 7), b = random_ensemble(g, 16, 2, 6, 1.2, 8);
  EXPECT_THROW(transport::sinkhorn(a, b, 2, 1e-4, 2), NumericalError);
}

TEST(DT, Examples) {
  Grid g(2, 16);
  auto e0 = random_ensemble(g, 4, 2, 6, 1, 1), e1 = random_ensemble(g, 4, 2, 6, 1, 2),
       e2 = random_ensemble(g, 4, 2, 6, 1, 3);
  LawCurve c({0.0, 0.4, 1.0}, {e0, e1, e2});
  EXPECT_EQ(transport::dT(c, c), 0.0);
  auto u = random_divfree(g, 2, 6, 10), v = random_divfree(g, 2, 6, 11);
  LawCurve cu({0.0, 0.3, 0.7}, {Ensemble({u}), Ensemble({u}), Ensemble({u})});
  LawCurve cv({0.0, 0.3, 0.7}, {Ensemble({v}), Ensemble({v}), Ensemble({v})});
  EXPECT_NEAR(transport::dT(cu, cv), 0.7 * l2_distance(u, v), 1e-12);
  auto f0 = random_ensemble(g, 4, 2, 6, 1, 4), f1 = random_ensemble(g, 4, 2, 6, 1, 5),
       f2 = random_ensemble(g, 4, 2, 6, 1, 6);
  LawCurve d({0.0, 0.4, 1.0}, {f0, f1, f2});
  double w[3] = {brute_force(e0, f0, 1), brute_force(e1, f1, 1), brute_force(e2, f2, 1)};
  EXPECT_NEAR(transport::dT(c, d), 0.2 * (w[0] + w[1]) + 0.3 * (w[1] + w[2]), 1e-12);
  LawCurve other({0.0, 0.5, 1.0}, {f0, f1, f2});
  EXPECT_THROW(transport::dT(c, other), Error);
}

TEST(CapacityCoverage, Examples) {
  Grid g(2, 32);
  auto a = random_ensemble(g, 8, 2, 14, 1, 9);
  auto m = transport::capacity_coverage(a, a, 4);
  EXPECT_EQ(m.W2, 0.0);
  EXPECT_EQ(m.train_K, 0.0);
  EXPECT_NEAR(m.tail_a, m.tail_b, 1e-14);
  auto pa = transport::project_ensemble(a, 4);
  auto r = transport::capacity_coverage(a, pa, 4);
  EXPECT_TRUE(r.b_band_limited);
  EXPECT_NEAR(r.train_K, 0.0, 1e-12);
  // diagonal coupling achieves the tail exactly, so W2 <= tail_a with the bound tight for that coupling
  EXPECT_NEAR(transport::diagonal_rms(a, pa), r.tail_a, 1e-12);
  EXPECT_LE(r.W2, r.tail_a + 1e-12);
  EXPECT_TRUE(r.band_limited_satisfied);
}

TEST(CapacityCoverage, RandomPairsNeverViolate) {
  Grid g(2, 32);
  for (int t = 0; t < 100; ++t) {
    auto a = random_ensemble(g, 32, 2 + (t % 3), 15, 1, derive_seed(t, 1));
    auto b = random_ensemble(g, 32, 2 + (t % 4), 15, 0.5 + 0.01 * t, derive_seed(t, 2));
    double K = 2 << (t % 3);
    auto m = transport::capacity_coverage(a, b, K);
    EXPECT_TRUE(m.satisfied);
    EXPECT_LE(m.W2, m.tail_a + m.train_K + m.tail_b + 1e-9);
    EXPECT_NEAR(m.train_K, transport::w2(transport::project_ensemble(a, K), transport::project_ensemble(b, K)), 1e-12);
    EXPECT_NEAR(m.tail_a, tail(a, K), 1e-12);
    EXPECT_LE(m.W1, m.W2 + 1e-9);
  }
}

TEST(OneStepDefect, Examples) {
  Grid g(2, 16);
  auto rho = random_ensemble(g, 6, 2, 6, 1, 4);
  transport::ReferenceMap ref = [](const GridField& u) { return project_leq(u, 3); };
  transport::ModelKernel same = [&](const GridField& u, std::uint64_t) { return ref(u); };
  EXPECT_EQ(transport::one_step_defect(rho, ref, same, 2, 1), 0.0);
  const double c = 0.3;
  transport::ModelKernel shift = [&](const GridField& u, std::uint64_t) {
    GridField v = ref(u);
    for (auto& x : v.values()) x += c;
    return v;
  };
  // a constant shift of every member moves the law by ||c||_2 = |c| sqrt(2 |D|)
  EXPECT_NEAR(transport::one_step_defect(rho, ref, shift, 2, 1), c * std::sqrt(2 * g.domain_volume()), 1e-12);
  auto moved = shifted(rho, c);
  EXPECT_NEAR(transport::w2(rho, moved), c * std::sqrt(2 * g.domain_volume()), 1e-12);
}

TEST(OneStepDefect, PerturbedModelScalesWithAmplitude) {
  Grid g(2, 16);
  auto rho = random_ensemble(g, 16, 2, 6, 1, 4);
  transport::ReferenceMap ref = [](const GridField& u) { return u; };
  for (double eps : {1e-3, 1e-2, 1e-1}) {
    transport::ModelKernel model = [&](const GridField& u, std::uint64_t s) {
      GridField v = random_divfree(g, 2, 4, s);
      return u + eps * v;
    };
    double defect = transport::one_step_defect(rho, ref, model, 2, 5);
    // oracle: identity coupling of the pushforwards
    auto [r, m] = transport::pushforwards(rho, ref, model, 5);
    double upper = transport::diagonal_rms(r, m);
    EXPECT_LE(defect, upper * (1 + 1e-12));
    EXPECT_GE(defect, 0.9 * upper);
    double rms = 0;
    for (std::size_t i = 0; i < rho.size(); ++i) rms += std::pow(l2_norm(random_divfree(g, 2, 4, derive_seed(5, i))), 2);
    rms = std::sqrt(rms / rho.size());
    EXPECT_NEAR(defect, eps * rms, 0.1 * eps * rms);
  }
}
