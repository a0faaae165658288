#pragma once

#include <complex>
#include <cstddef>

namespace lawbound::detail {

// In-place radix-2 transform of one d-dimensional block of n^d values.
// sign = -1 forward (unscaled), +1 backward (unscaled).
void fft_block(std::complex<double>* data, int d, int n, int sign);

bool is_power_of_two(int n);

}  // namespace lawbound::detail
