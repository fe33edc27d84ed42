#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace notchkit {

constexpr bool is_power_of_two(std::size_t n) {
  return n != 0 && (n & (n - 1)) == 0;
}

// In-place iterative radix-2 Cooley-Tukey. Size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a);

}  // namespace notchkit
