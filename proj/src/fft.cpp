#include "fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace lawbound::detail {

namespace {

struct Plan {
  int n = 0;
  std::vector<int> rev;
  std::vector<std::complex<double>> twiddle;  // e^{-2 pi i k / n}, k < n/2
};

const Plan& plan_for(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Plan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    auto p = std::make_unique<Plan>();
    p->n = n;
    int bits = 0;
    while ((1 << bits) < n) ++bits;
    p->rev.resize(n);
    for (int i = 0; i < n; ++i) {
      int r = 0;
      for (int b = 0; b < bits; ++b)
        if (i & (1 << b)) r |= 1 << (bits - 1 - b);
      p->rev[i] = r;
    }
    p->twiddle.resize(n / 2);
    for (int k = 0; k < n / 2; ++k) {
      double a = -2.0 * std::numbers::pi * k / n;
      p->twiddle[k] = {std::cos(a), std::sin(a)};
    }
    slot = std::move(p);
  }
  return *slot;
}

void fft_line(std::complex<double>* a, const Plan& p, int sign) {
  const int n = p.n;
  for (int i = 0; i < n; ++i)
    if (i < p.rev[i]) std::swap(a[i], a[p.rev[i]]);
  for (int len = 2; len <= n; len <<= 1) {
    const int half = len / 2, step = n / len;
    for (int i = 0; i < n; i += len) {
      for (int k = 0; k < half; ++k) {
        std::complex<double> w = p.twiddle[k * step];
        if (sign > 0) w = std::conj(w);
        std::complex<double> t = w * a[i + k + half];
        a[i + k + half] = a[i + k] - t;
        a[i + k] += t;
      }
    }
  }
}

}  // namespace

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_block(std::complex<double>* data, int d, int n, int sign) {
  if (!is_power_of_two(n)) throw std::invalid_argument("fft: n must be a power of two");
  const Plan& p = plan_for(n);
  if (d == 1) {
    fft_line(data, p, sign);
    return;
  }
  for (int i = 0; i < n; ++i) fft_line(data + static_cast<std::size_t>(i) * n, p, sign);
  std::vector<std::complex<double>> col(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = data[static_cast<std::size_t>(i) * n + j];
    fft_line(col.data(), p, sign);
    for (int i = 0; i < n; ++i) data[static_cast<std::size_t>(i) * n + j] = col[i];
  }
}

}  // namespace lawbound::detail
