#pragma once
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "lawbound/ensemble.hpp"
#include "lawbound/fields.hpp"

namespace lbtest {

using namespace lawbound;
constexpr double kPi = 3.14159265358979323846;

// Scalar (m = 1) or vector field from a pointwise formula.
inline GridField from_fn(const Grid& g, int m, const std::function<double(int, double, double)>& f) {
  GridField out(g, m);
  const double h = g.spacing();
  for (int c = 0; c < m; ++c)
    for (std::size_t idx = 0; idx < g.points(); ++idx) {
      double x = g.d == 1 ? idx * h : (idx / g.n) * h;
      double y = g.d == 1 ? 0.0 : (idx % g.n) * h;
      out.at(c, idx) = f(c, x, y);
    }
  return out;
}

inline GridField random_field(const Grid& g, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  GridField f(g, m);
  for (auto& v : f.values()) v = nd(rng);
  return f;
}

// O(N^2) DFT of one component, normalized by n^d.
inline std::vector<std::complex<double>> naive_dft(const GridField& f, int c) {
  const Grid& g = f.grid();
  const std::size_t P = g.points();
  std::vector<std::complex<double>> out(P);
  for (std::size_t k = 0; k < P; ++k) {
    auto kv = g.wavevector(k);
    std::complex<double> s = 0;
    for (std::size_t x = 0; x < P; ++x) {
      double ph = 0;
      if (g.d == 1)
        ph = kv[0] * double(x);
      else
        ph = kv[0] * double(x / g.n) + kv[1] * double(x % g.n);
      s += f.at(c, x) * std::polar(1.0, -2 * kPi * ph / g.n);
    }
    out[k] = s / double(P);
  }
  return out;
}

inline Ensemble random_ensemble(const Grid& g, std::size_t N, double p, double K, double scale, std::uint64_t seed) {
  std::vector<GridField> m;
  for (std::size_t i = 0; i < N; ++i) {
    auto u = random_divfree(g, p, K, derive_seed(seed, i));
    u *= scale;
    m.push_back(std::move(u));
  }
  return Ensemble(std::move(m));
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace lbtest
