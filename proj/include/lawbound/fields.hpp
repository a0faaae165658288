#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lawbound/common.hpp"

namespace lawbound {

using cplx = std::complex<double>;

// Periodic lattice on [0, 2pi)^d.
struct Grid {
  int d = 2;
  int n = 64;

  Grid() = default;
  Grid(int dim, int samples);

  std::size_t points() const;
  double spacing() const;
  double cell_volume() const;    // spacing^d
  double domain_volume() const;  // (2pi)^d
  // Signed wavenumber for index i along one axis (Nyquist maps to -n/2).
  int wavenumber(int i) const { return i < n / 2 ? i : i - n; }
  std::array<int, 2> wavevector(std::size_t idx) const;
  double wavenorm2(std::size_t idx) const;
  bool is_nyquist(std::size_t idx) const;
  std::size_t index_of(std::array<int, 2> k) const;  // inverse of wavevector (mod n)

  bool operator==(const Grid&) const = default;
};

// Real m-component field; component-major, row-major within a component.
class GridField {
 public:
  GridField() = default;
  GridField(Grid grid, int m);
  GridField(Grid grid, int m, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  int components() const { return m_; }
  std::size_t points() const { return grid_.points(); }
  std::size_t size() const { return values_.size(); }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::span<double> component(int c);
  std::span<const double> component(int c) const;
  double& at(int c, std::size_t idx) { return values_[c * points() + idx]; }
  double at(int c, std::size_t idx) const { return values_[c * points() + idx]; }

  bool compatible(const GridField& o) const { return grid_ == o.grid_ && m_ == o.m_; }
  bool all_finite() const;

  GridField& operator+=(const GridField& o);
  GridField& operator-=(const GridField& o);
  GridField& operator*=(double a);
  GridField& axpy(double a, const GridField& x);  // this += a x

 private:
  Grid grid_;
  int m_ = 0;
  std::vector<double> values_;
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(double a, GridField b);

// Grid quadrature: cell_volume * sum.
double inner(const GridField& a, const GridField& b);
double l2_norm(const GridField& f);
double l2_distance(const GridField& a, const GridField& b);
double sup_norm(const GridField& f);

// Fourier coefficients with uhat = DFT(u) / n^d, so u(x) = sum_k uhat(k) e^{ik.x}.
class SpecField {
 public:
  SpecField() = default;
  SpecField(Grid grid, int m);

  const Grid& grid() const { return grid_; }
  int components() const { return m_; }
  std::size_t points() const { return grid_.points(); }
  std::vector<cplx>& coeffs() { return c_; }
  const std::vector<cplx>& coeffs() const { return c_; }
  cplx& at(int c, std::size_t idx) { return c_[c * points() + idx]; }
  const cplx& at(int c, std::size_t idx) const { return c_[c * points() + idx]; }

  // (2pi)^d sum |uhat|^2
  double energy() const;
  // max |uhat(-k) - conj(uhat(k))|
  double hermitian_defect() const;

 private:
  Grid grid_;
  int m_ = 0;
  std::vector<cplx> c_;
};

SpecField forward(const GridField& f);
GridField inverse(const SpecField& F);

SpecField project_leq(const SpecField& F, double K);
SpecField project_gt(const SpecField& F, double K);
GridField project_leq(const GridField& f, double K);
GridField project_gt(const GridField& f, double K);

// Smooth radial cutoff and dyadic multipliers.
class DyadicCutoffs {
 public:
  explicit DyadicCutoffs(const Grid& grid);

  static double chi(double r);
  static double phi(double r) { return chi(r) - chi(2.0 * r); }
  // Multiplier of block j at |k|; j = -1 is the low block chi(2|k|).
  static double multiplier(int j, double kmag);

  int max_block() const { return max_block_; }
  double c_star() const { return c_star_; }
  double C_star() const { return C_star_; }

 private:
  int max_block_ = 0;
  double c_star_ = 0.0;
  double C_star_ = 0.0;
};

SpecField dyadic_block(const SpecField& F, int j);

// Periodic shift difference u(x + h) - u(x), h in lattice units.
GridField increment(const GridField& f, std::span<const int> h);
// (2pi)^d sum |e^{ik.h dx} - 1|^2 |uhat|^2
double increment_energy_spectral(const SpecField& F, std::span<const int> h);

double sobolev_norm(const SpecField& F, double s);
double sobolev_norm(const GridField& f, double s);

// max over grid points of the Frobenius norm of the spectral gradient
double grad_sup(const GridField& f);
// grad_sup / (K^{1 + d/2} ||f||); requires f = P<=K f
double bernstein_ratio(const GridField& f, double K);
double band_limit_defect(const GridField& f, double K);  // ||P>K f|| / ||f||

// Divergence-free Gaussian field with E|uhat(k)|^2 ~ |k|^{-p} on 1 <= |k| <= K_max.
GridField random_divfree(const Grid& grid, double p, double K_max, std::uint64_t seed);

SpecField leray_project(const SpecField& F);
GridField leray_project(const GridField& f);
// L2 norm of the spectral divergence
double divergence_norm(const SpecField& F);
double divergence_norm(const GridField& f);

// Spectral derivative d/dx_axis of every component (Nyquist zeroed).
SpecField derivative(const SpecField& F, int axis);

void write_lbf1(const std::string& path, const GridField& f);
GridField read_lbf1(const std::string& path);

}  // namespace lawbound
