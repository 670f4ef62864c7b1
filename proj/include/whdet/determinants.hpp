#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "whdet/operators.hpp"
#include "whdet/symbol.hpp"
#include "whdet/wiener_hopf.hpp"

namespace whdet {

/// Determinant of a dense complex matrix by partial-pivot LU. Pivot products
/// are accumulated in log-magnitude + phase form so large windows cannot
/// overflow the intermediate product. Singular input yields 0.
inline Complex det_finite(const CMatrix& m) {
  const long n = m.rows();
  if (n == 0) return {1.0, 0.0};
  Eigen::PartialPivLU<CMatrix> lu(m);
  double logmag = 0.0;
  double phase = 0.0;
  for (long i = 0; i < n; ++i) {
    const Complex d = lu.matrixLU()(i, i);
    if (d == Complex{0.0, 0.0}) return {0.0, 0.0};
    logmag += std::log(std::abs(d));
    phase += std::arg(d);
  }
  const double sign = static_cast<double>(lu.permutationP().determinant());
  return sign * std::exp(logmag) * std::polar(1.0, std::remainder(phase, 2.0 * std::numbers::pi));
}

/// Value of a stabilized finite-section determinant together with the last
/// stabilization increment and the window that produced it.
struct DeterminantResult {
  Complex value{1.0, 0.0};
  double error_estimate = std::numeric_limits<double>::infinity();
  WindowSpec window_used{};
  bool converged = false;
  std::vector<double> increments;  // successive |d_k - d_{k-1}|
};

namespace detail {

struct SectionPlan {
  long active_lo = 0;
  long active_hi = 0;
  long pad = 0;
  long step = 0;
  bool flip = false;
  int block = 1;
};

inline SectionPlan plan_sections(const std::vector<OperatorExpr>& parts) {
  SectionPlan p;
  long u = 1;
  int block = 0;
  for (const auto& e : parts) {
    const auto [lo, hi] = e.anchors();
    p.active_lo = std::min(p.active_lo, lo);
    p.active_hi = std::max(p.active_hi, hi);
    u = std::max(u, e.effective_halfwidth(1e-4));
    p.flip = p.flip || e.has_flip();
    const int b = e.block_size();
    if (block != 0 && b != 1 && b != block)
      throw BlockSizeMismatch("determinant family mixes block sizes");
    if (b != 1) block = b;
  }
  p.block = block == 0 ? 1 : block;
  // Initial padding covers a few decay lengths of the slowest symbol; the
  // confirmation window adds one more. Growth accelerates geometrically so
  // an unconverged family still reaches the cap quickly.
  p.pad = 2 * u + 12;
  p.step = u + 8;
  return p;
}

}  // namespace detail

/// Stabilized determinants of the family det(I + sum_i weights[j][i] A_i)
/// where A_i is the interior section of parts[i]. All members share the
/// realized sections; windows grow until every member's successive change
/// falls below tol * max(1, |value|).
inline std::vector<DeterminantResult> fredholm_det_family(
    const std::vector<OperatorExpr>& parts,
    const std::vector<std::vector<Complex>>& weights, double tol,
    const NumericPolicy& pol = {}, long initial_pad = 0, long initial_step = 0) {
  auto plan = detail::plan_sections(parts);
  const int nb = plan.block;
  std::vector<Complex> prev(weights.size());
  std::vector<std::vector<double>> incs(weights.size());
  bool have_prev = false;
  long pad = initial_pad > 0 ? initial_pad : plan.pad;
  long step = initial_step > 0 ? initial_step : plan.step;

  for (;;) {
    const WindowSpec core{plan.active_lo - pad, plan.active_hi + pad};
    if (core.count() + 2 * pad > pol.dim_cap)
      throw NotConverged("finite sections reached the window cap without stabilizing");
    const long d = core.count() * nb;
    std::vector<CMatrix> sections;
    sections.reserve(parts.size());
    for (const auto& e : parts) sections.push_back(realize_section(e, core, pad));

    std::vector<Complex> vals(weights.size());
    bool all_ok = have_prev;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      CMatrix m = CMatrix::Identity(d, d);
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (weights[j][i] != Complex{0.0, 0.0}) m += weights[j][i] * sections[i];
      }
      vals[j] = det_finite(m);
      if (have_prev) {
        const double inc = std::abs(vals[j] - prev[j]);
        incs[j].push_back(inc);
        if (!(inc <= tol * std::max(1.0, std::abs(vals[j])))) all_ok = false;
      }
    }
    if (all_ok) {
      std::vector<DeterminantResult> out(weights.size());
      for (std::size_t j = 0; j < weights.size(); ++j) {
        out[j].value = vals[j];
        out[j].error_estimate = incs[j].back();
        out[j].window_used = core;
        out[j].converged = true;
        out[j].increments = incs[j];
      }
      return out;
    }
    prev = std::move(vals);
    have_prev = true;
    pad += step;
    step *= 2;
  }
}

/// Stabilized determinant of a single identity-plus-trace-class expression.
inline DeterminantResult fredholm_det(const OperatorExpr& e, double tol,
                                      const NumericPolicy& pol = {}) {
  const OperatorExpr part = OperatorExpr::sum(
      {e, OperatorExpr::scaled(Complex{-1.0, 0.0}, OperatorExpr::identity())});
  return fredholm_det_family({part}, {{Complex{1.0, 0.0}}}, tol, pol)[0];
}

/// det(I - Q_n H(b) H(~c) Q_n) for each n >= 0 in ns, computed from finite
/// Hankel sections on the half line and stabilized jointly in the section
/// size. n = 0 gives det(I - H(b) H(~c)).
inline std::vector<DeterminantResult> hankel_correction_dets(
    const Symbol& b, const Symbol& c, const std::vector<long>& ns, double tol,
    const NumericPolicy& pol = {}) {
  if (b.block_size() != c.block_size())
    throw BlockSizeMismatch("Hankel pair mixes block sizes");
  const int nb = b.block_size();
  long nmax = 0;
  for (long n : ns) {
    if (n < 0) throw ConstraintViolated("Hankel correction determinants need n >= 0");
    nmax = std::max(nmax, n);
  }
  const long u = std::max({b.effective_halfwidth(1e-4), c.effective_halfwidth(1e-4), 1L});
  long m = nmax + 2 * u + 16;
  long step = u + 8;
  std::vector<Complex> prev(ns.size());
  std::vector<std::vector<double>> incs(ns.size());
  bool have_prev = false;
  for (;;) {
    if (m > pol.dim_cap)
      throw NotConverged("Hankel sections reached the size cap without stabilizing");
    const CMatrix hb = hankel_finite(b, m, m);
    const CMatrix hc = hankel_finite(c, m, m, /*reflected=*/true);
    const CMatrix k = hb * hc;
    std::vector<Complex> vals(ns.size());
    bool all_ok = have_prev;
    for (std::size_t j = 0; j < ns.size(); ++j) {
      CMatrix t = k;
      if (ns[j] > 0) {
        t.topRows(ns[j] * nb).setZero();
        t.leftCols(ns[j] * nb).setZero();
      }
      vals[j] = det_finite(CMatrix::Identity(m * nb, m * nb) - t);
      if (have_prev) {
        const double inc = std::abs(vals[j] - prev[j]);
        incs[j].push_back(inc);
        if (!(inc <= tol * std::max(1.0, std::abs(vals[j])))) all_ok = false;
      }
    }
    if (all_ok) {
      std::vector<DeterminantResult> out(ns.size());
      for (std::size_t j = 0; j < ns.size(); ++j) {
        out[j].value = vals[j];
        out[j].error_estimate = incs[j].back();
        out[j].window_used = WindowSpec{0, m};
        out[j].converged = true;
        out[j].increments = incs[j];
      }
      return out;
    }
    prev = std::move(vals);
    have_prev = true;
    m += step;
    step *= 2;
  }
}

/// Geometric mean G(a) = exp of the zeroth Fourier coefficient of log det a,
/// with the continuous logarithm branch; requires wind(det a) = 0.
inline Complex geometric_mean(const Symbol& a, const NumericPolicy& pol = {}) {
  const int nb = a.block_size();
  long m = detail::grid_start(a.support_width() * nb, pol);
  std::optional<Complex> prev;
  for (;;) {
    std::optional<Complex> g;
    try {
      const auto grid = evaluate(a, m);
      std::vector<Complex> dets(grid.values.size());
      for (std::size_t j = 0; j < grid.values.size(); ++j)
        dets[j] = nb == 1 ? grid.values[j](0, 0) : grid.values[j].determinant();
      const auto u = detail::unwrap_phase(dets, pol);
      if (detail::winding_from_total(u.total) != 0)
        throw NonzeroWinding("geometric mean requires det a to have winding zero");
      double mean_log = 0.0, mean_arg = 0.0;
      for (std::size_t j = 0; j < dets.size(); ++j) {
        mean_log += std::log(std::abs(dets[j]));
        mean_arg += u.theta[j];
      }
      const double inv_m = 1.0 / static_cast<double>(m);
      g = std::exp(Complex{mean_log * inv_m, mean_arg * inv_m});
    } catch (const PhaseStepTooLarge&) {
      if (2 * m > pol.grid_cap) throw;
      m *= 2;
      continue;
    }
    if (prev && std::abs(*g - *prev) <= 1e-12 * std::max(1.0, std::abs(*g))) return *g;
    if (2 * m > pol.grid_cap) return *g;  // trapezoid error decays geometrically
    prev = g;
    m *= 2;
  }
}

/// E(a) = 1 / det(I - H(b) H(~c)). For scalar symbols the value is
/// cross-checked against exp(sum_k k (log a)_k (log a)_{-k}); disagreement
/// beyond 10x the tolerance is an error rather than a silent pick.
inline Complex e_constant(const Factorization& f, double tol,
                          const NumericPolicy& pol = {}) {
  if (!f.has_bc)
    throw ConstraintViolated("e_constant needs the derived pair b, c (derive_bc)");
  const Complex det = hankel_correction_dets(f.b, f.c, {0}, tol, pol)[0].value;
  const Complex e = 1.0 / det;
  if (f.source.block_size() == 1) {
    const Symbol lg = log_scalar_auto(f.source, pol);
    Complex s{0.0, 0.0};
    for (long k = 1; !lg.is_zero() && k <= lg.k_max(); ++k) {
      if (lg.in_support(k) && lg.in_support(-k))
        s += static_cast<double>(k) * lg.stored(k)(0, 0) * lg.stored(-k)(0, 0);
    }
    const Complex series = std::exp(s);
    if (std::abs(series - e) > 10.0 * tol * std::max(1.0, std::abs(e)))
      throw ScalarCrossCheckFailed("series route and Fredholm route disagree");
  }
  return e;
}

}  // namespace whdet
