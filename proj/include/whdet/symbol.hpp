#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "whdet/errors.hpp"
#include "whdet/fft.hpp"

namespace whdet {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kDefaultDropThreshold = 1e-14;

/// Numeric knobs shared by grid sizing, conditioning checks, and the
/// finite-section determinant machinery.
struct NumericPolicy {
  double drop_threshold = kDefaultDropThreshold;
  double cond_cap = 1e12;   // grid-point condition number above which we refuse
  int grid_slack = 16;      // initial grid = next power of two >= 4*(width + slack)
  long grid_cap = 1L << 16;
  long dim_cap = 4096;      // finite-section window cap, in block indices
  double det_tol = 1e-10;   // default stabilization tolerance for determinants
};

inline double max_entry_magnitude(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

/// Spectral norm (largest singular value) of a small block.
inline double spectral_norm(const CMatrix& m) {
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

inline long next_power_of_two(long v) {
  long m = 1;
  while (m < v) m <<= 1;
  return m;
}

/// N x N matrix-valued function on the unit circle, represented by finitely
/// supported Laurent coefficients stored densely on a contiguous index window
/// [k_min, k_max]. Coefficients whose largest entry falls below the drop
/// threshold are treated as zero; the removed mass is accounted in dropped().
/// Values are immutable after construction and safe to share across threads.
class Symbol {
 public:
  explicit Symbol(int block_size = 1, double drop = kDefaultDropThreshold)
      : block_(block_size), k_min_(0), drop_(drop) {
    if (block_ < 1) throw BlockSizeMismatch("block size must be positive");
  }

  Symbol(int block_size, long k_min, std::vector<CMatrix> coeffs,
         double drop = kDefaultDropThreshold)
      : block_(block_size), k_min_(k_min), coeffs_(std::move(coeffs)), drop_(drop) {
    if (block_ < 1) throw BlockSizeMismatch("block size must be positive");
    for (const auto& c : coeffs_) {
      if (c.rows() != block_ || c.cols() != block_)
        throw BlockSizeMismatch("coefficient block does not match declared block size");
    }
    canonicalize();
  }

  static Symbol zero(int block_size, double drop = kDefaultDropThreshold) {
    return Symbol(block_size, drop);
  }

  static Symbol constant(const CMatrix& value, double drop = kDefaultDropThreshold) {
    std::vector<CMatrix> c{value};
    return Symbol(static_cast<int>(value.rows()), 0, std::move(c), drop);
  }

  static Symbol identity(int block_size, double drop = kDefaultDropThreshold) {
    return constant(CMatrix::Identity(block_size, block_size), drop);
  }

  /// t^w times the identity block.
  static Symbol monomial(long w, int block_size = 1,
                         double drop = kDefaultDropThreshold) {
    std::vector<CMatrix> c{CMatrix::Identity(block_size, block_size)};
    return Symbol(block_size, w, std::move(c), drop);
  }

  int block_size() const { return block_; }
  bool is_zero() const { return coeffs_.empty(); }
  long k_min() const { return k_min_; }
  long k_max() const { return k_min_ + static_cast<long>(coeffs_.size()) - 1; }
  long support_width() const { return static_cast<long>(coeffs_.size()); }
  double drop_threshold() const { return drop_; }
  double dropped() const { return dropped_; }

  bool in_support(long k) const {
    return !coeffs_.empty() && k >= k_min_ && k <= k_max();
  }

  const CMatrix& stored(long k) const { return coeffs_[static_cast<std::size_t>(k - k_min_)]; }

  CMatrix coeff(long k) const {
    if (in_support(k)) return stored(k);
    return CMatrix::Zero(block_, block_);
  }

  /// Largest |k| carrying a coefficient of magnitude >= tol, plus one.
  /// Used to seed finite-section padding from the observed decay.
  long effective_halfwidth(double tol) const {
    long h = 0;
    for (long k = k_min(); !is_zero() && k <= k_max(); ++k) {
      if (max_entry_magnitude(stored(k)) >= tol) h = std::max(h, std::labs(k) + 1);
    }
    return h;
  }

  /// a(t) -> a(1/t): index reflection k -> -k, blocks unchanged.
  Symbol reflected() const {
    if (is_zero()) return Symbol(block_, drop_);
    std::vector<CMatrix> c(coeffs_.rbegin(), coeffs_.rend());
    return Symbol(block_, -k_max(), std::move(c), drop_);
  }

  /// Keep coefficients with lo <= k <= hi only.
  Symbol restricted(long lo, long hi) const {
    std::vector<CMatrix> c;
    const long from = std::max(lo, is_zero() ? 0L : k_min());
    const long to = std::min(hi, is_zero() ? -1L : k_max());
    for (long k = from; k <= to; ++k) c.push_back(stored(k));
    if (c.empty()) return Symbol(block_, drop_);
    return Symbol(block_, from, std::move(c), drop_);
  }

  Symbol scaled(const Complex& s) const {
    std::vector<CMatrix> c(coeffs_);
    for (auto& m : c) m *= s;
    Symbol r(block_, drop_);
    if (!c.empty()) r = Symbol(block_, k_min_, std::move(c), drop_);
    return r;
  }

  Symbol with_drop(double drop) const {
    if (is_zero()) return Symbol(block_, drop);
    return Symbol(block_, k_min_, coeffs_, drop);
  }

 private:
  // Zero sub-threshold coefficients and trim the window so that the stored
  // boundary entries are significant. The removed mass is accumulated.
  void canonicalize() {
    if (drop_ <= 0.0 || coeffs_.empty()) {
      if (all_zero()) coeffs_.clear();
      return;
    }
    for (auto& c : coeffs_) {
      const double mag = max_entry_magnitude(c);
      if (mag > 0.0 && mag < drop_) {
        dropped_ += mag;
        c.setZero();
      }
    }
    std::size_t lead = 0;
    while (lead < coeffs_.size() && max_entry_magnitude(coeffs_[lead]) == 0.0) ++lead;
    if (lead == coeffs_.size()) {
      coeffs_.clear();
      k_min_ = 0;
      return;
    }
    std::size_t tail = coeffs_.size();
    while (tail > lead && max_entry_magnitude(coeffs_[tail - 1]) == 0.0) --tail;
    if (lead > 0 || tail < coeffs_.size()) {
      std::vector<CMatrix> kept(coeffs_.begin() + static_cast<std::ptrdiff_t>(lead),
                                coeffs_.begin() + static_cast<std::ptrdiff_t>(tail));
      k_min_ += static_cast<long>(lead);
      coeffs_ = std::move(kept);
    }
  }

  bool all_zero() const {
    for (const auto& c : coeffs_)
      if (max_entry_magnitude(c) != 0.0) return false;
    return true;
  }

  int block_;
  long k_min_;
  std::vector<CMatrix> coeffs_;
  double drop_;
  double dropped_ = 0.0;
};

/// Samples of a symbol at the M-th roots of unity, M a power of two.
struct GridSamples {
  int block_size;
  std::vector<CMatrix> values;  // values[j] = a(exp(2 pi i j / M))

  GridSamples(int n, std::vector<CMatrix> v) : block_size(n), values(std::move(v)) {
    if (!is_power_of_two(values.size()))
      throw WindowTooSmall("grid size must be a power of two");
  }
  long size() const { return static_cast<long>(values.size()); }
};

struct NormReport {
  double wiener = 0.0;  // sum of block spectral norms
  double k11 = 0.0;     // sum of (|k|+1) * norm
  double krein = 0.0;   // sum of (|k|+1) * norm^2
};

inline NormReport norms(const Symbol& a) {
  NormReport r;
  for (long k = a.k_min(); !a.is_zero() && k <= a.k_max(); ++k) {
    const double s = spectral_norm(a.stored(k));
    const double w = static_cast<double>(std::labs(k) + 1);
    r.wiener += s;
    r.k11 += w * s;
    r.krein += w * s * s;
  }
  return r;
}

inline double wiener_norm(const Symbol& a) { return norms(a).wiener; }

inline Symbol add(const Symbol& a, const Symbol& b) {
  if (a.block_size() != b.block_size())
    throw BlockSizeMismatch("cannot add symbols of different block size");
  const double drop = std::max(a.drop_threshold(), b.drop_threshold());
  if (a.is_zero()) return b.with_drop(drop);
  if (b.is_zero()) return a.with_drop(drop);
  const long lo = std::min(a.k_min(), b.k_min());
  const long hi = std::max(a.k_max(), b.k_max());
  std::vector<CMatrix> c(static_cast<std::size_t>(hi - lo + 1),
                         CMatrix::Zero(a.block_size(), a.block_size()));
  for (long k = a.k_min(); k <= a.k_max(); ++k) c[static_cast<std::size_t>(k - lo)] += a.stored(k);
  for (long k = b.k_min(); k <= b.k_max(); ++k) c[static_cast<std::size_t>(k - lo)] += b.stored(k);
  return Symbol(a.block_size(), lo, std::move(c), drop);
}

inline Symbol operator+(const Symbol& a, const Symbol& b) { return add(a, b); }
inline Symbol operator-(const Symbol& a, const Symbol& b) { return add(a, b.scaled(-1.0)); }
inline Symbol operator*(const Complex& s, const Symbol& a) { return a.scaled(s); }

/// Coefficient convolution (ab)_k = sum_j a_j b_{k-j}; the block product
/// order is preserved, so this is noncommutative for block symbols.
inline Symbol multiply(const Symbol& a, const Symbol& b) {
  if (a.block_size() != b.block_size())
    throw BlockSizeMismatch("cannot multiply symbols of different block size");
  const double drop = std::max(a.drop_threshold(), b.drop_threshold());
  if (a.is_zero() || b.is_zero()) return Symbol(a.block_size(), drop);
  const long lo = a.k_min() + b.k_min();
  const long hi = a.k_max() + b.k_max();
  std::vector<CMatrix> c(static_cast<std::size_t>(hi - lo + 1),
                         CMatrix::Zero(a.block_size(), a.block_size()));
  for (long ka = a.k_min(); ka <= a.k_max(); ++ka) {
    for (long kb = b.k_min(); kb <= b.k_max(); ++kb) {
      c[static_cast<std::size_t>(ka + kb - lo)] += a.stored(ka) * b.stored(kb);
    }
  }
  return Symbol(a.block_size(), lo, std::move(c), drop);
}

inline Symbol operator*(const Symbol& a, const Symbol& b) { return multiply(a, b); }

/// Evaluate at the M-th roots of unity. Requires M >= 2 * support width so
/// the samples determine the coefficients without aliasing.
inline GridSamples evaluate(const Symbol& a, long m) {
  if (!is_power_of_two(static_cast<std::size_t>(m)))
    throw WindowTooSmall("grid size must be a power of two");
  if (m < 2 * a.support_width())
    throw WindowTooSmall("grid of size " + std::to_string(m) +
                         " cannot resolve support width " +
                         std::to_string(a.support_width()));
  const int n = a.block_size();
  std::vector<CMatrix> values(static_cast<std::size_t>(m), CMatrix::Zero(n, n));
  std::vector<Complex> buf(static_cast<std::size_t>(m));
  for (int r = 0; r < n; ++r) {
    for (int col = 0; col < n; ++col) {
      std::fill(buf.begin(), buf.end(), Complex{0.0, 0.0});
      for (long k = a.k_min(); !a.is_zero() && k <= a.k_max(); ++k) {
        const long idx = ((k % m) + m) % m;
        buf[static_cast<std::size_t>(idx)] += a.stored(k)(r, col);
      }
      fft_radix2(buf, +1);  // values_j = sum_k a_k e^{+2 pi i jk/M}
      for (long j = 0; j < m; ++j) values[static_cast<std::size_t>(j)](r, col) = buf[static_cast<std::size_t>(j)];
    }
  }
  return GridSamples(n, std::move(values));
}

/// Discrete Fourier coefficients of grid samples, for k in (-M/2, M/2].
inline Symbol fourier_from_samples(const GridSamples& g, double drop) {
  const long m = g.size();
  const int n = g.block_size;
  const long k_lo = -m / 2 + 1;
  std::vector<CMatrix> coeffs(static_cast<std::size_t>(m), CMatrix::Zero(n, n));
  std::vector<Complex> buf(static_cast<std::size_t>(m));
  for (int r = 0; r < n; ++r) {
    for (int col = 0; col < n; ++col) {
      for (long j = 0; j < m; ++j) buf[static_cast<std::size_t>(j)] = g.values[static_cast<std::size_t>(j)](r, col);
      fft_radix2(buf, -1);
      for (long k = k_lo; k <= m / 2; ++k) {
        const long idx = ((k % m) + m) % m;
        coeffs[static_cast<std::size_t>(k - k_lo)](r, col) =
            buf[static_cast<std::size_t>(idx)] / static_cast<double>(m);
      }
    }
  }
  return Symbol(n, k_lo, std::move(coeffs), drop);
}

namespace detail {

inline long grid_start(long width, const NumericPolicy& pol) {
  return next_power_of_two(std::max(8L, 4 * (width + pol.grid_slack)));
}

/// True if the computed coefficients stay clear of the representable window
/// (-M/2, M/2], i.e. the transform resolved the decay at this grid size.
inline bool resolved_on_grid(const Symbol& s, long m) {
  if (s.is_zero()) return true;
  return s.k_min() > -m / 2 + 1 && s.k_max() < m / 2;
}

inline std::vector<Complex> scalar_samples(const GridSamples& g) {
  std::vector<Complex> v;
  v.reserve(g.values.size());
  for (const auto& b : g.values) v.push_back(b(0, 0));
  return v;
}

/// Unwrapped argument along the grid, nearest-branch continuation.
/// theta[0] is the principal argument of v[0]; total is the full increment
/// around the circle (including the closing step back to j = 0).
struct UnwrappedPhase {
  std::vector<double> theta;
  double total = 0.0;
};

inline UnwrappedPhase unwrap_phase(const std::vector<Complex>& v,
                                   const NumericPolicy& pol) {
  constexpr double kStepCap = 0.9 * std::numbers::pi;
  double vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
  for (const auto& z : v) {
    const double a = std::abs(z);
    vmax = std::max(vmax, a);
    vmin = std::min(vmin, a);
  }
  if (vmin == 0.0 || vmax / vmin > pol.cond_cap)
    throw SingularOnCircle("symbol vanishes (or nearly vanishes) on the grid");
  UnwrappedPhase u;
  u.theta.resize(v.size());
  u.theta[0] = std::arg(v[0]);
  double total = 0.0;
  for (std::size_t j = 1; j < v.size(); ++j) {
    const double step = std::arg(v[j] / v[j - 1]);
    if (std::abs(step) > kStepCap)
      throw PhaseStepTooLarge("phase step near the branch cut; raise the grid size");
    u.theta[j] = u.theta[j - 1] + step;
    total += step;
  }
  const double closing = std::arg(v[0] / v.back());
  if (std::abs(closing) > kStepCap)
    throw PhaseStepTooLarge("phase step near the branch cut; raise the grid size");
  u.total = total + closing;
  return u;
}

inline long winding_from_total(double total) {
  const double turns = total / (2.0 * std::numbers::pi);
  const long w = std::lround(turns);
  if (std::abs(turns - static_cast<double>(w)) >= 0.1)
    throw AmbiguousWinding("unwrapped phase is not close to a whole number of turns");
  return w;
}

}  // namespace detail

/// Pointwise matrix inversion on an M-point grid followed by the inverse
/// transform. The result must decay inside the window; a residual
/// || a * a^{-1} - I ||_W is reported through the optional out-parameter.
inline Symbol invert(const Symbol& a, long m, double drop,
                     double* residual = nullptr, const NumericPolicy& pol = {}) {
  auto g = evaluate(a, m);
  const int n = a.block_size();
  if (n == 1) {
    double vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
    for (auto& b : g.values) {
      const double mag = std::abs(b(0, 0));
      vmax = std::max(vmax, mag);
      vmin = std::min(vmin, mag);
    }
    if (vmin == 0.0 || vmax / vmin > pol.cond_cap)
      throw SingularOnCircle("symbol is singular (or nearly so) on the grid");
    for (auto& b : g.values) b(0, 0) = 1.0 / b(0, 0);
  } else {
    for (auto& b : g.values) {
      Eigen::JacobiSVD<CMatrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const double smax = svd.singularValues()(0);
      const double smin = svd.singularValues()(n - 1);
      if (smin == 0.0 || smax / smin > pol.cond_cap)
        throw SingularOnCircle("matrix symbol is singular (or nearly so) on the grid");
      b = svd.solve(CMatrix::Identity(n, n));
    }
  }
  Symbol inv = fourier_from_samples(GridSamples(n, std::move(g.values)), drop);
  if (drop > 0.0 && !detail::resolved_on_grid(inv, m))
    throw NotResolved("inverse coefficients reach the grid window boundary");
  if (residual) *residual = wiener_norm(multiply(a, inv) - Symbol::identity(n));
  return inv;
}

/// invert() with the grid sized automatically: start at the policy grid and
/// double until the inverse decays inside the window, up to the cap.
inline Symbol invert_auto(const Symbol& a, const NumericPolicy& pol = {},
                          double* residual = nullptr) {
  long m = detail::grid_start(a.support_width(), pol);
  for (;;) {
    try {
      return invert(a, m, pol.drop_threshold, residual, pol);
    } catch (const NotResolved&) {
      if (2 * m > pol.grid_cap) throw;
      m *= 2;
    }
  }
}

/// Winding number of a scalar symbol about the origin on an M-point grid.
inline long winding_number(const Symbol& a, long m, const NumericPolicy& pol = {}) {
  if (a.block_size() != 1)
    throw BlockSizeMismatch("winding_number requires a scalar symbol");
  const auto v = detail::scalar_samples(evaluate(a, m));
  const auto u = detail::unwrap_phase(v, pol);
  return detail::winding_from_total(u.total);
}

inline long winding_number(const Symbol& a, const NumericPolicy& pol = {}) {
  long m = detail::grid_start(a.support_width(), pol);
  for (;;) {
    try {
      return winding_number(a, m, pol);
    } catch (const PhaseStepTooLarge&) {
      if (2 * m > pol.grid_cap) throw;
      m *= 2;
    }
  }
}

/// Continuous-branch logarithm of a zero-winding scalar symbol on an M grid.
inline Symbol log_scalar(const Symbol& a, long m, const NumericPolicy& pol = {}) {
  if (a.block_size() != 1)
    throw BlockSizeMismatch("log_scalar requires a scalar symbol");
  const auto v = detail::scalar_samples(evaluate(a, m));
  const auto u = detail::unwrap_phase(v, pol);
  if (detail::winding_from_total(u.total) != 0)
    throw NonzeroWinding("logarithm requires winding number zero");
  std::vector<CMatrix> vals(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    CMatrix b(1, 1);
    b(0, 0) = Complex{std::log(std::abs(v[j])), u.theta[j]};
    vals[j] = b;
  }
  Symbol lg = fourier_from_samples(GridSamples(1, std::move(vals)), a.drop_threshold());
  if (a.drop_threshold() > 0.0 && !detail::resolved_on_grid(lg, m))
    throw NotResolved("log coefficients reach the grid window boundary");
  return lg;
}

inline Symbol log_scalar_auto(const Symbol& a, const NumericPolicy& pol = {}) {
  long m = detail::grid_start(a.support_width(), pol);
  for (;;) {
    try {
      return log_scalar(a, m, pol);
    } catch (const PhaseStepTooLarge&) {
      if (2 * m > pol.grid_cap) throw;
      m *= 2;
    } catch (const NotResolved&) {
      if (2 * m > pol.grid_cap) throw;
      m *= 2;
    }
  }
}

/// exp of a scalar symbol, computed by exponentiating grid samples.
inline Symbol exp_symbol(const Symbol& a, const NumericPolicy& pol = {}) {
  if (a.block_size() != 1)
    throw BlockSizeMismatch("exp_symbol requires a scalar symbol");
  long m = detail::grid_start(a.support_width() + 8, pol);
  for (;;) {
    auto g = evaluate(a, m);
    std::vector<CMatrix> vals(g.values.size());
    for (std::size_t j = 0; j < g.values.size(); ++j) {
      CMatrix b(1, 1);
      b(0, 0) = std::exp(g.values[j](0, 0));
      vals[j] = b;
    }
    Symbol ex = fourier_from_samples(GridSamples(1, std::move(vals)), a.drop_threshold());
    if (a.drop_threshold() <= 0.0 || detail::resolved_on_grid(ex, m)) return ex;
    if (2 * m > pol.grid_cap)
      throw NotResolved("exp coefficients reach the grid window boundary");
    m *= 2;
  }
}

/// Split a = t^w * b with wind(b) = 0; returns (w, b).
inline std::pair<long, Symbol> split_winding(const Symbol& a,
                                             const NumericPolicy& pol = {}) {
  const long w = winding_number(a, pol);
  return {w, multiply(Symbol::monomial(-w, 1, a.drop_threshold()), a)};
}

}  // namespace whdet
