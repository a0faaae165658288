#include "lawbound/fields.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "fft.hpp"

namespace lawbound {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

// ---------------------------------------------------------------- Grid

Grid::Grid(int dim, int samples) : d(dim), n(samples) {
  require(d == 1 || d == 2, "grid: d must be 1 or 2");
  require(n >= 8, "grid: n must be at least 8");
  require(detail::is_power_of_two(n), "grid: n must be a power of two");
}

std::size_t Grid::points() const {
  std::size_t p = 1;
  for (int i = 0; i < d; ++i) p *= static_cast<std::size_t>(n);
  return p;
}

double Grid::spacing() const { return kTwoPi / n; }
double Grid::cell_volume() const { return std::pow(spacing(), d); }
double Grid::domain_volume() const { return std::pow(kTwoPi, d); }

std::array<int, 2> Grid::wavevector(std::size_t idx) const {
  if (d == 1) return {wavenumber(static_cast<int>(idx)), 0};
  return {wavenumber(static_cast<int>(idx / n)), wavenumber(static_cast<int>(idx % n))};
}

double Grid::wavenorm2(std::size_t idx) const {
  auto k = wavevector(idx);
  return double(k[0]) * k[0] + double(k[1]) * k[1];
}

bool Grid::is_nyquist(std::size_t idx) const {
  auto k = wavevector(idx);
  return k[0] == -n / 2 || (d == 2 && k[1] == -n / 2);
}

std::size_t Grid::index_of(std::array<int, 2> k) const {
  auto wrap = [this](int v) { return static_cast<std::size_t>(((v % n) + n) % n); };
  if (d == 1) return wrap(k[0]);
  return wrap(k[0]) * n + wrap(k[1]);
}

// ---------------------------------------------------------------- GridField

GridField::GridField(Grid grid, int m) : grid_(grid), m_(m) {
  require(m >= 1, "field: component count must be positive");
  values_.assign(static_cast<std::size_t>(m) * grid.points(), 0.0);
}

GridField::GridField(Grid grid, int m, std::vector<double> values)
    : grid_(grid), m_(m), values_(std::move(values)) {
  require(m >= 1, "field: component count must be positive");
  require(values_.size() == static_cast<std::size_t>(m) * grid.points(),
          "field: value count does not match m * n^d");
  require(all_finite(), "field: non-finite value");
}

std::span<double> GridField::component(int c) {
  return {values_.data() + static_cast<std::size_t>(c) * points(), points()};
}
std::span<const double> GridField::component(int c) const {
  return {values_.data() + static_cast<std::size_t>(c) * points(), points()};
}

bool GridField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

GridField& GridField::operator+=(const GridField& o) {
  require(compatible(o), "field: shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}
GridField& GridField::operator-=(const GridField& o) {
  require(compatible(o), "field: shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}
GridField& GridField::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}
GridField& GridField::axpy(double a, const GridField& x) {
  require(compatible(x), "field: shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
  return *this;
}

GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(double a, GridField b) { return b *= a; }

double inner(const GridField& a, const GridField& b) {
  require(a.compatible(b), "inner: shape mismatch");
  double s = 0.0;
  const auto& x = a.values();
  const auto& y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s * a.grid().cell_volume();
}

double l2_norm(const GridField& f) { return std::sqrt(inner(f, f)); }

double l2_distance(const GridField& a, const GridField& b) {
  require(a.compatible(b), "distance: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = a.values()[i] - b.values()[i];
    s += t * t;
  }
  return std::sqrt(s * a.grid().cell_volume());
}

double sup_norm(const GridField& f) {
  // pointwise Euclidean norm over components
  double best = 0.0;
  for (std::size_t i = 0; i < f.points(); ++i) {
    double s = 0.0;
    for (int c = 0; c < f.components(); ++c) s += f.at(c, i) * f.at(c, i);
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

// ---------------------------------------------------------------- SpecField

SpecField::SpecField(Grid grid, int m) : grid_(grid), m_(m) {
  c_.assign(static_cast<std::size_t>(m) * grid.points(), cplx(0.0, 0.0));
}

double SpecField::energy() const {
  double s = 0.0;
  for (const auto& z : c_) s += std::norm(z);
  return s * grid_.domain_volume();
}

double SpecField::hermitian_defect() const {
  double worst = 0.0;
  for (int c = 0; c < m_; ++c)
    for (std::size_t i = 0; i < points(); ++i) {
      auto k = grid_.wavevector(i);
      std::size_t j = grid_.index_of({-k[0], -k[1]});
      worst = std::max(worst, std::abs(at(c, j) - std::conj(at(c, i))));
    }
  return worst;
}

SpecField forward(const GridField& f) {
  const Grid& g = f.grid();
  SpecField F(g, f.components());
  const double scale = 1.0 / static_cast<double>(g.points());
  for (int c = 0; c < f.components(); ++c) {
    cplx* block = F.coeffs().data() + static_cast<std::size_t>(c) * g.points();
    auto src = f.component(c);
    for (std::size_t i = 0; i < g.points(); ++i) block[i] = cplx(src[i], 0.0);
    detail::fft_block(block, g.d, g.n, -1);
    for (std::size_t i = 0; i < g.points(); ++i) block[i] *= scale;
  }
  return F;
}

GridField inverse(const SpecField& F) {
  const Grid& g = F.grid();
  GridField f(g, F.components());
  std::vector<cplx> block(g.points());
  for (int c = 0; c < F.components(); ++c) {
    std::copy_n(F.coeffs().begin() + static_cast<std::ptrdiff_t>(c * g.points()), g.points(),
                block.begin());
    detail::fft_block(block.data(), g.d, g.n, +1);
    auto dst = f.component(c);
    for (std::size_t i = 0; i < g.points(); ++i) dst[i] = block[i].real();
  }
  return f;
}

// ---------------------------------------------------------------- projectors

namespace {
template <class Keep>
SpecField mask(const SpecField& F, Keep keep) {
  SpecField out = F;
  for (int c = 0; c < F.components(); ++c)
    for (std::size_t i = 0; i < F.points(); ++i)
      if (!keep(i)) out.at(c, i) = 0.0;
  return out;
}
}  // namespace

SpecField project_leq(const SpecField& F, double K) {
  require(K >= 1, "projector: K must be at least 1");
  const double K2 = K * K;
  return mask(F, [&](std::size_t i) { return F.grid().wavenorm2(i) <= K2; });
}

SpecField project_gt(const SpecField& F, double K) {
  require(K >= 1, "projector: K must be at least 1");
  const double K2 = K * K;
  return mask(F, [&](std::size_t i) { return F.grid().wavenorm2(i) > K2; });
}

GridField project_leq(const GridField& f, double K) { return inverse(project_leq(forward(f), K)); }
GridField project_gt(const GridField& f, double K) { return inverse(project_gt(forward(f), K)); }

// ---------------------------------------------------------------- dyadic blocks

double DyadicCutoffs::chi(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  double t = r - 1.0;
  double s = t * t * t * (t * (6.0 * t - 15.0) + 10.0);
  return 1.0 - s;
}

double DyadicCutoffs::multiplier(int j, double kmag) {
  if (j == -1) return chi(2.0 * kmag);
  double x = std::ldexp(kmag, -j);
  return phi(x);
}

DyadicCutoffs::DyadicCutoffs(const Grid& grid) {
  const double kmax = (grid.n / 2) * std::sqrt(double(grid.d));
  max_block_ = 0;
  while (std::ldexp(1.0, max_block_) < kmax) ++max_block_;
  c_star_ = INFINITY;
  C_star_ = 0.0;
  for (std::size_t i = 1; i < grid.points(); ++i) {
    double km = std::sqrt(grid.wavenorm2(i));
    double s = 0.0;
    for (int j = 0; j <= max_block_; ++j) {
      double p = multiplier(j, km);
      s += p * p;
    }
    c_star_ = std::min(c_star_, s);
    C_star_ = std::max(C_star_, s);
  }
}

SpecField dyadic_block(const SpecField& F, int j) {
  require(j >= -1, "dyadic_block: j must be >= -1");
  SpecField out = F;
  for (std::size_t i = 0; i < F.points(); ++i) {
    double w = DyadicCutoffs::multiplier(j, std::sqrt(F.grid().wavenorm2(i)));
    for (int c = 0; c < F.components(); ++c) out.at(c, i) *= w;
  }
  return out;
}

// ---------------------------------------------------------------- increments, norms

GridField increment(const GridField& f, std::span<const int> h) {
  const Grid& g = f.grid();
  require(static_cast<int>(h.size()) == g.d, "increment: offset dimension mismatch");
  GridField out(g, f.components());
  const int n = g.n;
  auto wrap = [n](int v) { return ((v % n) + n) % n; };
  for (int c = 0; c < f.components(); ++c) {
    auto src = f.component(c);
    auto dst = out.component(c);
    if (g.d == 1) {
      for (int i = 0; i < n; ++i) dst[i] = src[wrap(i + h[0])] - src[i];
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          dst[i * n + j] = src[wrap(i + h[0]) * n + wrap(j + h[1])] - src[i * n + j];
    }
  }
  return out;
}

double increment_energy_spectral(const SpecField& F, std::span<const int> h) {
  const Grid& g = F.grid();
  require(static_cast<int>(h.size()) == g.d, "increment: offset dimension mismatch");
  const double dx = g.spacing();
  double s = 0.0;
  for (std::size_t i = 0; i < F.points(); ++i) {
    auto k = g.wavevector(i);
    double phase = k[0] * h[0] * dx + (g.d == 2 ? k[1] * h[1] * dx : 0.0);
    double w = 2.0 - 2.0 * std::cos(phase);
    double a = 0.0;
    for (int c = 0; c < F.components(); ++c) a += std::norm(F.at(c, i));
    s += w * a;
  }
  return s * g.domain_volume();
}

double sobolev_norm(const SpecField& F, double s) {
  const Grid& g = F.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < F.points(); ++i) {
    double w = std::pow(1.0 + g.wavenorm2(i), s);
    for (int c = 0; c < F.components(); ++c) acc += w * std::norm(F.at(c, i));
  }
  return std::sqrt(acc * g.domain_volume());
}

double sobolev_norm(const GridField& f, double s) { return sobolev_norm(forward(f), s); }

SpecField derivative(const SpecField& F, int axis) {
  const Grid& g = F.grid();
  require(axis >= 0 && axis < g.d, "derivative: bad axis");
  SpecField out(g, F.components());
  for (std::size_t i = 0; i < F.points(); ++i) {
    if (g.is_nyquist(i)) continue;
    cplx mult(0.0, g.wavevector(i)[axis]);
    for (int c = 0; c < F.components(); ++c) out.at(c, i) = mult * F.at(c, i);
  }
  return out;
}

double grad_sup(const GridField& f) {
  const Grid& g = f.grid();
  SpecField F = forward(f);
  std::vector<double> sq(g.points(), 0.0);
  for (int a = 0; a < g.d; ++a) {
    GridField da = inverse(derivative(F, a));
    for (int c = 0; c < f.components(); ++c) {
      auto comp = da.component(c);
      for (std::size_t i = 0; i < g.points(); ++i) sq[i] += comp[i] * comp[i];
    }
  }
  return std::sqrt(*std::max_element(sq.begin(), sq.end()));
}

double band_limit_defect(const GridField& f, double K) {
  double total = l2_norm(f);
  if (total == 0.0) return 0.0;
  return std::sqrt(project_gt(forward(f), K).energy()) / total;
}

double bernstein_ratio(const GridField& f, double K) {
  require(band_limit_defect(f, K) <= 1e-10, "bernstein_ratio: field is not band-limited to K");
  double nrm = l2_norm(f);
  if (nrm == 0.0) return 0.0;
  return grad_sup(f) / (std::pow(K, 1.0 + 0.5 * f.grid().d) * nrm);
}

// ---------------------------------------------------------------- synthesis, Leray

GridField random_divfree(const Grid& grid, double p, double K_max, std::uint64_t seed) {
  require(grid.d == 2, "random_divfree: only d = 2 admits non-constant divergence-free fields");
  require(K_max >= 1, "random_divfree: K_max must be at least 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  GridField noise(grid, 1);
  for (double& v : noise.values()) v = gauss(rng);
  SpecField W = forward(noise);

  // unit expected energy density: E ||u||^2 = (2pi)^2
  const double K2 = K_max * K_max;
  double norm_sum = 0.0;
  for (std::size_t i = 0; i < grid.points(); ++i) {
    double k2 = grid.wavenorm2(i);
    if (k2 >= 1.0 && k2 <= K2 && !grid.is_nyquist(i)) norm_sum += std::pow(k2, -0.5 * p);
  }
  require(norm_sum > 0.0, "random_divfree: empty shell set");
  const double amp = std::sqrt(double(grid.points()) / norm_sum);

  SpecField U(grid, 2);
  for (std::size_t i = 0; i < grid.points(); ++i) {
    double k2 = grid.wavenorm2(i);
    if (k2 < 1.0 || k2 > K2 || grid.is_nyquist(i)) continue;
    auto k = grid.wavevector(i);
    cplx psi = W.at(0, i) * amp * std::pow(k2, -0.25 * (p + 2.0));
    U.at(0, i) = cplx(0.0, k[1]) * psi;    // d psi / dy
    U.at(1, i) = -cplx(0.0, k[0]) * psi;   // -d psi / dx
  }
  return inverse(U);
}

SpecField leray_project(const SpecField& F) {
  const Grid& g = F.grid();
  require(F.components() == g.d, "leray: expected a vector field with m = d");
  SpecField out(g, F.components());
  for (std::size_t i = 0; i < F.points(); ++i) {
    if (g.is_nyquist(i)) continue;
    double k2 = g.wavenorm2(i);
    if (k2 == 0.0) {
      for (int c = 0; c < g.d; ++c) out.at(c, i) = F.at(c, i);
      continue;
    }
    auto k = g.wavevector(i);
    cplx kdotu = 0.0;
    for (int c = 0; c < g.d; ++c) kdotu += double(k[c]) * F.at(c, i);
    for (int c = 0; c < g.d; ++c) out.at(c, i) = F.at(c, i) - double(k[c]) * kdotu / k2;
  }
  return out;
}

GridField leray_project(const GridField& f) { return inverse(leray_project(forward(f))); }

double divergence_norm(const SpecField& F) {
  const Grid& g = F.grid();
  require(F.components() == g.d, "divergence: expected m = d");
  double s = 0.0;
  for (std::size_t i = 0; i < F.points(); ++i) {
    if (g.is_nyquist(i)) continue;
    auto k = g.wavevector(i);
    cplx div = 0.0;
    for (int c = 0; c < g.d; ++c) div += cplx(0.0, k[c]) * F.at(c, i);
    s += std::norm(div);
  }
  return std::sqrt(s * g.domain_volume());
}

double divergence_norm(const GridField& f) { return divergence_norm(forward(f)); }

// ---------------------------------------------------------------- LBF1

static_assert(std::endian::native == std::endian::little, "LBF1 I/O assumes a little-endian host");

void write_lbf1(const std::string& path, const GridField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("lbf1: cannot open " + path + " for writing");
  const Grid& g = f.grid();
  out.write("LBF1", 4);
  std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), 4);
  std::uint8_t d = static_cast<std::uint8_t>(g.d), m = static_cast<std::uint8_t>(f.components());
  std::uint16_t reserved = 0;
  out.write(reinterpret_cast<const char*>(&d), 1);
  out.write(reinterpret_cast<const char*>(&m), 1);
  out.write(reinterpret_cast<const char*>(&reserved), 2);
  for (int i = 0; i < g.d; ++i) {
    std::uint32_t n = static_cast<std::uint32_t>(g.n);
    out.write(reinterpret_cast<const char*>(&n), 4);
  }
  out.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(f.values().size() * sizeof(double)));
  if (!out) throw Error("lbf1: write failed for " + path);
}

GridField read_lbf1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("lbf1: cannot open " + path);
  char magic[4];
  std::uint32_t version = 0;
  std::uint8_t d = 0, m = 0;
  std::uint16_t reserved = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&d), 1);
  in.read(reinterpret_cast<char*>(&m), 1);
  in.read(reinterpret_cast<char*>(&reserved), 2);
  if (!in || std::memcmp(magic, "LBF1", 4) != 0) throw Error("lbf1: bad magic in " + path);
  if (version != 1) throw Error("lbf1: unsupported version " + std::to_string(version));
  if (d < 1 || d > 2) throw Error("lbf1: bad dimension");
  std::uint32_t dims[2] = {0, 0};
  for (int i = 0; i < d; ++i) in.read(reinterpret_cast<char*>(&dims[i]), 4);
  if (d == 2 && dims[0] != dims[1]) throw Error("lbf1: non-square grids are not supported");
  Grid g(d, static_cast<int>(dims[0]));
  std::vector<double> vals(static_cast<std::size_t>(m) * g.points());
  in.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(vals.size() * sizeof(double)));
  if (!in) throw Error("lbf1: truncated payload in " + path);
  return GridField(g, m, std::move(vals));
}

}  // namespace lawbound
