#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "whdet/errors.hpp"

namespace whdet {

inline bool is_power_of_two(std::size_t m) { return m != 0 && (m & (m - 1)) == 0; }

/// In-place radix-2 transform of power-of-two length.
/// sign = -1: forward (e^{-2pi i jk/M}), sign = +1: inverse, unnormalized.
/// Twiddles are evaluated trigonometrically per butterfly column; at the
/// grid sizes used here (M <= 2^16) this keeps rounding near machine eps.
inline void fft_radix2(std::vector<std::complex<double>>& x, int sign) {
  const std::size_t m = x.size();
  if (m <= 1) return;
  if (!is_power_of_two(m)) throw WindowTooSmall("fft length must be a power of two");

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < m; ++i) {
    std::size_t bit = m >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  for (std::size_t len = 2; len <= m; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < m; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> w = std::polar(1.0, ang * static_cast<double>(k));
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + half] * w;
        x[i + k] = u + v;
        x[i + k + half] = u - v;
      }
    }
  }
}

}  // namespace whdet
