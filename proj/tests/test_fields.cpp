#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace lbtest;

namespace {

std::vector<double> energies(const SpecField& F) {
  std::vector<double> e(F.points(), 0.0);
  for (std::size_t i = 0; i < F.points(); ++i)
    for (int c = 0; c < F.components(); ++c) e[i] += std::norm(F.at(c, i));
  return e;
}

}  // namespace

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(Grid(3, 16), Error);
  EXPECT_THROW(Grid(2, 12), Error);
  EXPECT_THROW(Grid(2, 4), Error);
  Grid g(2, 16);
  EXPECT_EQ(g.points(), 256u);
  EXPECT_EQ(g.wavenumber(8), -8);
  EXPECT_EQ(g.wavenumber(9), -7);
  for (std::size_t i = 0; i < g.points(); ++i) EXPECT_EQ(g.index_of(g.wavevector(i)), i);
}

TEST(Forward, SingleCosineMode) {
  Grid g(1, 32);
  auto f = from_fn(g, 1, [](int, double x, double) { return std::cos(3 * x); });
  auto F = forward(f);
  for (std::size_t i = 0; i < g.points(); ++i) {
    int k = g.wavevector(i)[0];
    double want = (k == 3 || k == -3) ? 0.5 : 0.0;
    EXPECT_NEAR(F.at(0, i).real(), want, 1e-14);
    EXPECT_NEAR(F.at(0, i).imag(), 0.0, 1e-14);
  }
}

TEST(Forward, ConstantOnlyZeroMode) {
  Grid g(2, 16);
  auto f = from_fn(g, 1, [](int, double, double) { return 2.5; });
  auto F = forward(f);
  EXPECT_NEAR(std::abs(F.at(0, 0) - cplx(2.5, 0)), 0.0, 1e-14);
  for (std::size_t i = 1; i < g.points(); ++i) EXPECT_LT(std::abs(F.at(0, i)), 1e-14);
}

TEST(Forward, MatchesNaiveDftAndParseval) {
  for (int d : {1, 2}) {
    Grid g(d, 16);
    auto f = random_field(g, 2, 11 + d);
    auto F = forward(f);
    for (int c = 0; c < 2; ++c) {
      auto oracle = naive_dft(f, c);
      for (std::size_t i = 0; i < g.points(); ++i) EXPECT_LT(std::abs(F.at(c, i) - oracle[i]), 1e-13);
    }
    double direct = 0;
    for (double v : f.values()) direct += v * v;
    direct *= g.cell_volume();
    EXPECT_LT(rel(F.energy(), direct), 1e-12);
    EXPECT_NEAR(l2_norm(f) * l2_norm(f), direct, 1e-10 * direct);
    EXPECT_LT(F.hermitian_defect(), 1e-14);
  }
}

TEST(Forward, RoundTripOnManySizes) {
  for (int n : {8, 16, 32, 64, 128}) {
    Grid g(2, n);
    auto f = random_field(g, 2, n);
    auto back = inverse(forward(f));
    EXPECT_LT(l2_distance(back, f) / l2_norm(f), 1e-13) << n;
    EXPECT_LT(sup_norm(back - f), 1e-12 * std::max(1.0, sup_norm(f)));
  }
}

TEST(Project, SharpCutoffExamples) {
  Grid g(1, 32);
  auto c3 = from_fn(g, 1, [](int, double x, double) { return std::cos(3 * x); });
  auto c5 = from_fn(g, 1, [](int, double x, double) { return std::cos(5 * x); });
  EXPECT_LT(l2_distance(project_leq(c3, 4), c3), 1e-13);
  EXPECT_LT(l2_norm(project_leq(c5, 4)), 1e-13);
  EXPECT_LT(l2_distance(project_gt(c5, 4), c5), 1e-13);
}

TEST(Project, EnergySplitMatchesModeEnumeration) {
  Grid g(2, 32);
  auto f = random_field(g, 2, 5);
  auto F = forward(f);
  auto e = energies(F);
  double lo = 0, hi = 0;
  for (std::size_t i = 0; i < g.points(); ++i) (g.wavenorm2(i) <= 9.0 ? lo : hi) += e[i];
  lo *= g.domain_volume();
  hi *= g.domain_volume();
  EXPECT_LT(rel(project_leq(F, 3).energy(), lo), 1e-12);
  EXPECT_LT(rel(project_gt(F, 3).energy(), hi), 1e-12);
}

TEST(Project, OrthogonalityOverManyFields) {
  Grid g(2, 32);
  for (int s = 0; s < 100; ++s) {
    auto u = random_divfree(g, 2.0, 12, s);
    double K = 1 + s % 10;
    double a = l2_norm(u), b = l2_norm(project_leq(u, K)), c = l2_norm(project_gt(u, K));
    EXPECT_LT(std::abs(a * a - b * b - c * c), 1e-10 * std::max(1.0, a * a));
  }
}

TEST(Dyadic, PartitionOfUnityOnEveryMode) {
  for (int n : {16, 32, 64, 128}) {
    Grid g(2, n);
    DyadicCutoffs dc(g);
    for (std::size_t i = 0; i < g.points(); ++i) {
      double km = std::sqrt(g.wavenorm2(i)), s = 0;
      for (int j = -1; j <= dc.max_block(); ++j) s += DyadicCutoffs::multiplier(j, km);
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Dyadic, SupportOfSingleMode) {
  // |k| = 3 lives only in blocks with 2^{j-1} <= 3 <= 2^{j+1}
  for (int j = -1; j <= 6; ++j) {
    double m = DyadicCutoffs::multiplier(j, 3.0);
    bool allowed = j >= 1 && j <= 2;
    if (!allowed) EXPECT_EQ(m, 0.0) << j;
  }
  Grid g(2, 16);
  auto c = from_fn(g, 1, [](int, double, double) { return 1.0; });
  auto C = forward(c);
  EXPECT_LT(std::abs(inverse(dyadic_block(C, -1)).values()[0] - 1.0), 1e-14);
  for (int j = 0; j < 5; ++j) EXPECT_LT(l2_norm(inverse(dyadic_block(C, j))), 1e-14);
}

TEST(Dyadic, BlockEnergiesWithinMeasuredConstants) {
  Grid g(2, 32);
  DyadicCutoffs dc(g);
  // independent oracle for c*, C*: scan every lattice mode
  double lo = 1e300, hi = 0;
  for (std::size_t i = 1; i < g.points(); ++i) {
    double km = std::sqrt(g.wavenorm2(i)), s = 0;
    for (int j = 0; j <= dc.max_block(); ++j) s += std::pow(DyadicCutoffs::phi(km / std::ldexp(1.0, j)), 2);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  EXPECT_NEAR(dc.c_star(), lo, 1e-14);
  EXPECT_NEAR(dc.C_star(), hi, 1e-14);
  EXPECT_GT(lo, 0.0);
  for (int s = 0; s < 5; ++s) {
    auto u = random_divfree(g, 1.0, 15, 100 + s);  // mean free
    auto U = forward(u);
    double blocks = 0;
    for (int j = 0; j <= dc.max_block(); ++j) blocks += dyadic_block(U, j).energy();
    EXPECT_GE(blocks, lo * U.energy() * (1 - 1e-12));
    EXPECT_LE(blocks, hi * U.energy() * (1 + 1e-12));
  }
  // blocks sum back to the field
  auto u = random_field(g, 2, 9);
  auto U = forward(u);
  GridField sum(g, 2);
  for (int j = -1; j <= dc.max_block(); ++j) sum += inverse(dyadic_block(U, j));
  EXPECT_LT(l2_distance(sum, u), 1e-10 * l2_norm(u));
}

TEST(Increment, Examples) {
  Grid g(1, 32);
  auto f = from_fn(g, 1, [](int, double x, double) { return std::cos(x); });
  int zero[1] = {0}, half[1] = {16};
  EXPECT_EQ(l2_norm(increment(f, zero)), 0.0);
  auto d = increment(f, half);
  EXPECT_LT(l2_distance(d, -2.0 * f), 1e-13);
  EXPECT_NEAR(std::pow(l2_norm(d), 2), 4 * std::pow(l2_norm(f), 2), 1e-12);
}

TEST(Increment, SpectralIdentity) {
  Grid g(2, 32);
  auto u = random_field(g, 2, 21);
  auto U = forward(u);
  for (auto h : std::vector<std::array<int, 2>>{{1, 0}, {0, 3}, {5, -7}, {16, 16}, {-2, 11}}) {
    double direct = std::pow(l2_norm(increment(u, h)), 2);
    EXPECT_LT(std::abs(direct - increment_energy_spectral(U, h)) / direct, 1e-8);
  }
  EXPECT_THROW(increment(u, std::array<int, 1>{1}), Error);
}

TEST(Sobolev, Examples) {
  Grid g(1, 32);
  auto c = from_fn(g, 1, [](int, double, double) { return -1.5; });
  for (double s : {-2.0, -1.0, 0.0, 1.0}) EXPECT_NEAR(sobolev_norm(c, s), 1.5 * std::sqrt(2 * kPi), 1e-12);
  auto f = from_fn(g, 1, [](int, double x, double) { return std::cos(4 * x); });
  EXPECT_NEAR(sobolev_norm(f, -1), l2_norm(f) / std::sqrt(17.0), 1e-12);
  Grid g2(2, 32);
  for (int s = 0; s < 20; ++s) {
    auto u = random_field(g2, 2, 40 + s);
    EXPECT_LE(sobolev_norm(u, -1), l2_norm(u) * (1 + 1e-12));
    EXPECT_NEAR(sobolev_norm(u, 0), l2_norm(u), 1e-10 * l2_norm(u));
  }
}

TEST(Bernstein, Examples) {
  Grid g(1, 64);
  for (int K : {1, 3, 7}) {
    auto f = from_fn(g, 1, [K](int, double x, double) { return std::cos(K * x); });
    EXPECT_NEAR(grad_sup(f), K * sup_norm(f), 1e-10 * K);
  }
  auto c = from_fn(g, 1, [](int, double, double) { return 3.0; });
  EXPECT_NEAR(bernstein_ratio(c, 4), 0.0, 1e-12);
  auto hi = from_fn(g, 1, [](int, double x, double) { return std::cos(9 * x); });
  EXPECT_THROW(bernstein_ratio(hi, 4), Error);
}

TEST(Bernstein, RatioBoundedAcrossK) {
  Grid g(2, 128);
  std::vector<double> worst;
  for (double K : {4.0, 8.0, 16.0, 32.0}) {
    double w = 0;
    for (int s = 0; s < 50; ++s) w = std::max(w, bernstein_ratio(random_divfree(g, 0.0, K, 1000 * K + s), K));
    worst.push_back(w);
  }
  for (std::size_t i = 1; i < worst.size(); ++i) EXPECT_LE(worst[i], worst[i - 1] * 1.1) << i;
}

TEST(RandomDivfree, ShellsDivergenceDeterminism) {
  Grid g(2, 32);
  auto u = random_divfree(g, 3.0, 1.0, 7);
  auto U = forward(u);
  for (std::size_t i = 0; i < g.points(); ++i)
    if (g.wavenorm2(i) != 1.0) EXPECT_LT(std::abs(U.at(0, i)) + std::abs(U.at(1, i)), 1e-14);
  EXPECT_GT(l2_norm(u), 0.0);
  for (int s = 0; s < 10; ++s) EXPECT_LT(divergence_norm(random_divfree(g, 2, 10, s)), 1e-12);
  EXPECT_EQ(random_divfree(g, 2, 10, 3).values(), random_divfree(g, 2, 10, 3).values());
  EXPECT_NE(random_divfree(g, 2, 10, 3).values(), random_divfree(g, 2, 10, 4).values());
  EXPECT_THROW(random_divfree(Grid(1, 32), 2, 4, 1), Error);
}

TEST(RandomDivfree, StructureExponentMatchesTarget) {
  // E|delta_r u|^2 ~ r^{2s} on [4 dx, pi/4] when p = 2 + 2s
  Grid g(2, 256);
  for (double s : {0.3, 0.5, 0.8}) {
    std::vector<double> lr, le;
    std::vector<double> acc;
    std::vector<int> hs;
    for (int h = 4; h * g.spacing() <= kPi / 4 + 1e-12; h = h * 3 / 2 + 1) hs.push_back(h);
    acc.assign(hs.size(), 0.0);
    for (int m = 0; m < 128; ++m) {
      auto U = forward(random_divfree(g, 2 + 2 * s, 127, derive_seed(77, m)));
      for (std::size_t i = 0; i < hs.size(); ++i) {
        std::array<int, 2> hx{hs[i], 0}, hy{0, hs[i]};
        acc[i] += increment_energy_spectral(U, hx) + increment_energy_spectral(U, hy);
      }
    }
    for (std::size_t i = 0; i < hs.size(); ++i) {
      lr.push_back(std::log(hs[i] * g.spacing()));
      le.push_back(std::log(acc[i]));
    }
    auto fit = fit_line(lr, le);
    EXPECT_NEAR(fit.slope / 2, s, 0.1) << s;
  }
}

TEST(Leray, Examples) {
  Grid g(2, 32);
  // grad of a mean-zero potential
  auto grad = from_fn(g, 2, [](int c, double x, double y) {
    return c == 0 ? std::cos(x) * std::sin(2 * y) : 2 * std::sin(x) * std::cos(2 * y);
  });
  EXPECT_LT(l2_norm(leray_project(grad)), 1e-12);
  auto u = random_divfree(g, 2, 10, 3);
  EXPECT_LT(l2_distance(leray_project(u), u), 1e-12);
  auto r = random_field(g, 2, 4);
  auto P = leray_project(r);
  EXPECT_LT(divergence_norm(P), 1e-12 * l2_norm(r));
  EXPECT_LT(l2_distance(leray_project(P), P), 1e-12 * l2_norm(r));
  EXPECT_THROW(leray_project(random_field(g, 1, 1)), Error);
}

TEST(Derivative, MatchesAnalytic) {
  Grid g(2, 32);
  auto f = from_fn(g, 1, [](int, double x, double y) { return std::sin(2 * x) * std::cos(3 * y); });
  auto dx = inverse(derivative(forward(f), 0));
  auto dy = inverse(derivative(forward(f), 1));
  auto ex = from_fn(g, 1, [](int, double x, double y) { return 2 * std::cos(2 * x) * std::cos(3 * y); });
  auto ey = from_fn(g, 1, [](int, double x, double y) { return -3 * std::sin(2 * x) * std::sin(3 * y); });
  EXPECT_LT(sup_norm(dx - ex), 1e-12);
  EXPECT_LT(sup_norm(dy - ey), 1e-12);
}

TEST(Lbf1, RoundTripAndRejection) {
  auto dir = std::filesystem::temp_directory_path() / "lb_fields_test";
  std::filesystem::create_directories(dir);
  Grid g(2, 16);
  auto u = random_field(g, 2, 8);
  auto p = (dir / "u.lbf").string();
  write_lbf1(p, u);
  auto v = read_lbf1(p);
  EXPECT_EQ(v.values(), u.values());
  EXPECT_TRUE(v.compatible(u));
  std::string bytes;
  {
    std::ifstream in(p, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  EXPECT_EQ(bytes.substr(0, 4), "LBF1");
  EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 2 * 4 + 2 * 256 * 8u);
  auto corrupt = [&](std::size_t at, char c) {
    std::string b = bytes;
    b[at] = c;
    std::ofstream(dir / "bad.lbf", std::ios::binary) << b;
    return (dir / "bad.lbf").string();
  };
  EXPECT_THROW(read_lbf1(corrupt(0, 'X')), Error);
  EXPECT_THROW(read_lbf1(corrupt(4, 2)), Error);
  {
    std::ofstream(dir / "short.lbf", std::ios::binary) << bytes.substr(0, 40);
  }
  EXPECT_THROW(read_lbf1((dir / "short.lbf").string()), Error);
  EXPECT_THROW(read_lbf1((dir / "missing.lbf").string()), Error);
}

TEST(GridField, ArithmeticAndCompatibility) {
  Grid g(2, 8);
  auto a = random_field(g, 2, 1), b = random_field(g, 2, 2);
  auto c = a + b;
  c -= b;
  EXPECT_LT(l2_distance(c, a), 1e-14);
  EXPECT_THROW(a += random_field(g, 1, 3), Error);
  EXPECT_NEAR(inner(a, a), l2_norm(a) * l2_norm(a), 1e-12);
  GridField bad = a;
  bad.values()[3] = std::nan("");
  EXPECT_FALSE(bad.all_finite());
}

TEST(Dyadic, IncrementControlConstantStableAcrossBlocks) {
  // ||Delta_j u||^2 against the lattice sum of ||delta_h u||^2 / |h|^d over |h dx| <= c 2^{-j}, c = pi/4
  Grid g(2, 256);
  std::vector<GridField> m;
  for (int i = 0; i < 16; ++i) m.push_back(random_divfree(g, 3.0, 127, derive_seed(5, i)));
  Ensemble e(std::move(m));
  auto power = mean_power_spectrum(e);
  std::vector<double> ratios;
  for (int j = 0; j <= 3; ++j) {
    const double r = (kPi / 4) * std::ldexp(1.0, -j);
    const int hmax = int(std::floor(r / g.spacing() + 1e-9));
    double block = 0, integral = 0;
    for (std::size_t i = 0; i < g.points(); ++i) {
      if (power[i] == 0) continue;
      auto k = g.wavevector(i);
      block += std::pow(DyadicCutoffs::multiplier(j, std::sqrt(g.wavenorm2(i))), 2) * power[i];
      double w = 0;
      for (int a = -hmax; a <= hmax; ++a)
        for (int b = -hmax; b <= hmax; ++b) {
          double len = std::hypot(a, b) * g.spacing();
          if ((a == 0 && b == 0) || len > r * (1 + 1e-12)) continue;
          double ph = (k[0] * a + k[1] * b) * g.spacing();
          w += (2 - 2 * std::cos(ph)) / (len * len);
        }
      integral += w * g.cell_volume() * power[i];
    }
    ratios.push_back(block / integral);
    std::printf("j=%d C_emp=%.5f\n", j, ratios.back());
  }
  double lo = *std::min_element(ratios.begin(), ratios.end()), hi = *std::max_element(ratios.begin(), ratios.end());
  double mid = 0.5 * (lo + hi);
  RecordProperty("C_emp_low", std::to_string(lo));
  RecordProperty("C_emp_high", std::to_string(hi));
  EXPECT_LE(hi, 1.2 * mid);
  EXPECT_GE(lo, 0.8 * mid);
}
