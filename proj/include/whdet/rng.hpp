#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace whdet {

/// mt19937_64 with an explicit bits-to-double mapping. The standard pins the
/// engine's output sequence, so streams are reproducible across platforms;
/// distributions are avoided because their draws are implementation-defined.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// uniform in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// uniform in [-1, 1)
  double uniform_symmetric() { return 2.0 * uniform() - 1.0; }

  /// uniform over the square [-1,1) x [-1,1)
  std::complex<double> complex_in_square() {
    const double re = uniform_symmetric();
    const double im = uniform_symmetric();
    return {re, im};
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace whdet
