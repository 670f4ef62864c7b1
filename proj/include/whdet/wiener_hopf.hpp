#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "whdet/operators.hpp"
#include "whdet/symbol.hpp"

namespace whdet {

/// Canonical Wiener-Hopf data of a symbol a: right factors a = u_minus *
/// u_plus, left factors a = v_plus * v_minus, their inverses, and the derived
/// pair b = v_minus * u_plus^{-1}, c = u_minus^{-1} * v_plus with b * c = I.
///
/// Normalization: u_plus(0) = I and the zeroth coefficient of v_minus is I.
/// Derived constants and determinant identities are invariant under the
/// constant-matrix regauging this pins down (see regauge()).
struct Factorization {
  Symbol source{1};
  Symbol u_minus{1}, u_plus{1}, u_minus_inv{1}, u_plus_inv{1};
  Symbol v_plus{1}, v_minus{1}, v_plus_inv{1}, v_minus_inv{1};
  Symbol b{1}, c{1};
  double residual_right = std::numeric_limits<double>::infinity();
  double residual_left = std::numeric_limits<double>::infinity();
  double residual_bc = std::numeric_limits<double>::infinity();
  double analyticity_defect = 0.0;
  bool has_bc = false;
};

namespace detail {

inline constexpr long kPlusInf = std::numeric_limits<long>::max() / 2;
inline constexpr long kMinusInf = std::numeric_limits<long>::min() / 2;

/// Zero all coefficients outside [lo, hi], recording the Wiener mass of what
/// was removed. The removed part measures how far the computed factor sits
/// from exact analyticity.
inline Symbol enforce_support(const Symbol& s, long lo, long hi, double* defect) {
  Symbol inside = s.restricted(lo, hi);
  if (defect) {
    const Symbol outside = s - inside;
    *defect = std::max(*defect, wiener_norm(outside));
  }
  return inside;
}

/// Hager-style 1-norm estimate of the inverse through an existing LU.
inline double inverse_norm1_estimate(const Eigen::PartialPivLU<CMatrix>& lu, long n) {
  Eigen::VectorXcd x = Eigen::VectorXcd::Constant(n, Complex{1.0 / static_cast<double>(n), 0.0});
  double est = 0.0;
  long last_j = -1;
  for (int iter = 0; iter < 5; ++iter) {
    Eigen::VectorXcd y = lu.solve(x);
    const double norm1 = y.cwiseAbs().sum();
    if (norm1 <= est && iter > 0) break;
    est = norm1;
    Eigen::VectorXcd xi(n);
    for (long i = 0; i < n; ++i) {
      const double a = std::abs(y(i));
      xi(i) = a == 0.0 ? Complex{1.0, 0.0} : y(i) / a;
    }
    Eigen::VectorXcd z = lu.adjoint().solve(xi);
    long j = 0;
    z.cwiseAbs().maxCoeff(&j);
    if (j == last_j) break;
    last_j = j;
    x.setZero();
    x(j) = 1.0;
  }
  return est;
}

inline double norm1(const CMatrix& m) {
  double best = 0.0;
  for (long j = 0; j < m.cols(); ++j) best = std::max(best, m.col(j).cwiseAbs().sum());
  return best;
}

}  // namespace detail

/// Right factorization of a zero-winding scalar symbol by splitting log a
/// into its analytic halves: u_plus = exp((log a)|_{k>=1}) so u_plus(0) = 1,
/// and the constant e^{(log a)_0} is absorbed into u_minus.
inline std::pair<Symbol, Symbol> factor_right_scalar(const Symbol& a,
                                                     const NumericPolicy& pol = {}) {
  const Symbol lg = log_scalar_auto(a, pol);
  const Symbol lg_plus = lg.restricted(1, detail::kPlusInf);
  const Symbol lg_minus = lg.restricted(detail::kMinusInf, 0);
  return {exp_symbol(lg_minus, pol), exp_symbol(lg_plus, pol)};
}

/// Right factorization of a block symbol through the truncated Toeplitz
/// system T_m(a) X = E_0. The first block column of the inverse Toeplitz
/// operator is T(u_plus^{-1}) times a constant block, so X normalized by its
/// zeroth block recovers u_plus^{-1}; u_minus follows as a * u_plus^{-1}.
/// The truncation order doubles until the trailing blocks of X decay.
inline std::pair<Symbol, Symbol> factor_right_block(const Symbol& a, long m,
                                                    const NumericPolicy& pol = {},
                                                    Symbol* u_plus_inv_out = nullptr,
                                                    double* defect_out = nullptr) {
  const int nb = a.block_size();
  const double tail_tol = std::max(a.drop_threshold(), 1e-14);
  m = std::max(m, 2L);
  for (;;) {
    const CMatrix t = toeplitz_finite(a, m);
    Eigen::PartialPivLU<CMatrix> lu(t);
    const double cond = detail::norm1(t) * detail::inverse_norm1_estimate(lu, m * nb);
    if (!(cond < pol.cond_cap))
      throw IllConditioned("truncated Toeplitz system is too ill conditioned");
    CMatrix rhs = CMatrix::Zero(m * nb, nb);
    rhs.topRows(nb).setIdentity();
    const CMatrix x = lu.solve(rhs);

    double tail = 0.0;
    for (long j = std::max(0L, m - 2); j < m; ++j)
      tail = std::max(tail, max_entry_magnitude(x.middleRows(j * nb, nb)));
    if (tail >= tail_tol) {
      if (2 * m > pol.dim_cap)
        throw NotResolved("Toeplitz solve does not decay within the size cap");
      m *= 2;
      continue;
    }

    const CMatrix x0 = x.topRows(nb);
    const CMatrix x0_inv = Eigen::PartialPivLU<CMatrix>(x0).solve(CMatrix::Identity(nb, nb));
    if (!x0_inv.allFinite())
      throw IllConditioned("leading block of the Toeplitz solve is singular");
    std::vector<CMatrix> coeffs(static_cast<std::size_t>(m));
    for (long j = 0; j < m; ++j)
      coeffs[static_cast<std::size_t>(j)] = x.middleRows(j * nb, nb) * x0_inv;
    const Symbol u_plus_inv(nb, 0, std::move(coeffs), a.drop_threshold());

    double defect = 0.0;
    Symbol u_plus = detail::enforce_support(invert_auto(u_plus_inv, pol), 0,
                                            detail::kPlusInf, &defect);
    Symbol u_minus = detail::enforce_support(multiply(a, u_plus_inv),
                                             detail::kMinusInf, 0, &defect);
    if (u_plus_inv_out) *u_plus_inv_out = u_plus_inv;
    if (defect_out) *defect_out = std::max(*defect_out, defect);
    return {std::move(u_minus), std::move(u_plus)};
  }
}

/// Default truncation order for the block factorization solve.
inline long default_truncation_order(const Symbol& a) {
  return 4 * (a.support_width() + 8);
}

/// Left factorization by reflection: a right factorization of a(1/t)
/// reflects back to a = v_plus * v_minus with (v_minus)_0 = I.
inline std::pair<Symbol, Symbol> factor_left(const Symbol& a, long m,
                                             const NumericPolicy& pol = {},
                                             Symbol* v_minus_inv_out = nullptr,
                                             double* defect_out = nullptr) {
  Symbol rupinv{a.block_size()};
  auto [rum, rup] = factor_right_block(a.reflected(), m, pol, &rupinv, defect_out);
  if (v_minus_inv_out) *v_minus_inv_out = rupinv.reflected();
  return {rum.reflected(), rup.reflected()};  // (v_plus, v_minus)
}

struct FactorizationOptions {
  NumericPolicy policy{};
  bool force_block_method = false;  // scalar symbols use the log-split by default
};

/// Full factorization: right and left factors with inverses, residuals, and
/// the analyticity defect of the computed factors.
inline Factorization factorize(const Symbol& a, const FactorizationOptions& opt = {}) {
  Factorization f;
  f.source = a;
  const int nb = a.block_size();
  const NumericPolicy& pol = opt.policy;

  const auto enforce_plus = [&](const Symbol& s) {
    return detail::enforce_support(s, 0, detail::kPlusInf, &f.analyticity_defect);
  };
  const auto enforce_minus = [&](const Symbol& s) {
    return detail::enforce_support(s, detail::kMinusInf, 0, &f.analyticity_defect);
  };

  if (nb == 1 && !opt.force_block_method) {
    const Symbol lg = log_scalar_auto(a, pol);
    const Symbol lg_plus = lg.restricted(1, detail::kPlusInf);
    const Symbol lg_minus = lg.restricted(detail::kMinusInf, 0);
    f.u_plus = enforce_plus(exp_symbol(lg_plus, pol));
    f.u_minus = enforce_minus(exp_symbol(lg_minus, pol));
    f.u_plus_inv = enforce_plus(exp_symbol(lg_plus.scaled(-1.0), pol));
    f.u_minus_inv = enforce_minus(exp_symbol(lg_minus.scaled(-1.0), pol));
    // scalar factors commute, the left split only moves the constant
    const Complex c0 = f.u_minus.coeff(0)(0, 0);
    f.v_minus = f.u_minus.scaled(1.0 / c0);
    f.v_minus_inv = f.u_minus_inv.scaled(c0);
    f.v_plus = f.u_plus.scaled(c0);
    f.v_plus_inv = f.u_plus_inv.scaled(1.0 / c0);
  } else {
    Symbol upinv{nb};
    auto [um, up] = factor_right_block(a, default_truncation_order(a), pol, &upinv,
                                       &f.analyticity_defect);
    f.u_minus = um;
    f.u_plus = up;
    f.u_plus_inv = enforce_plus(upinv);
    f.u_minus_inv = enforce_minus(invert_auto(f.u_minus, pol));
    Symbol vminv{nb};
    auto [vp, vm] = factor_left(a, default_truncation_order(a), pol, &vminv,
                                &f.analyticity_defect);
    f.v_plus = enforce_plus(vp);
    f.v_minus = enforce_minus(vm);
    f.v_minus_inv = enforce_minus(vminv);
    f.v_plus_inv = enforce_plus(invert_auto(f.v_plus, pol));
  }

  f.residual_right = wiener_norm(multiply(f.u_minus, f.u_plus) - a);
  f.residual_left = wiener_norm(multiply(f.v_plus, f.v_minus) - a);
  return f;
}

/// Fill the derived pair b = v_minus * u_plus^{-1}, c = u_minus^{-1} * v_plus.
inline Factorization derive_bc(Factorization f) {
  f.b = multiply(f.v_minus, f.u_plus_inv);
  f.c = multiply(f.u_minus_inv, f.v_plus);
  f.residual_bc = wiener_norm(multiply(f.b, f.c) - Symbol::identity(f.source.block_size()));
  f.has_bc = true;
  return f;
}

inline Factorization factorize_with_bc(const Symbol& a, const FactorizationOptions& opt = {}) {
  return derive_bc(factorize(a, opt));
}

/// Regauge the factorization by constant invertible blocks: right factors
/// become (u_minus C^{-1}, C u_plus) and left factors (v_plus D, D^{-1}
/// v_minus). Every identity value is invariant under this change.
inline Factorization regauge(const Factorization& f, const CMatrix& c_right,
                             const CMatrix& d_left) {
  Factorization g = f;
  const double drop = f.source.drop_threshold();
  const Symbol cR = Symbol::constant(c_right, drop);
  const Symbol cRinv = Symbol::constant(c_right.inverse(), drop);
  const Symbol dL = Symbol::constant(d_left, drop);
  const Symbol dLinv = Symbol::constant(d_left.inverse(), drop);
  g.u_minus = multiply(f.u_minus, cRinv);
  g.u_minus_inv = multiply(cR, f.u_minus_inv);
  g.u_plus = multiply(cR, f.u_plus);
  g.u_plus_inv = multiply(f.u_plus_inv, cRinv);
  g.v_plus = multiply(f.v_plus, dL);
  g.v_plus_inv = multiply(dLinv, f.v_plus_inv);
  g.v_minus = multiply(dLinv, f.v_minus);
  g.v_minus_inv = multiply(f.v_minus_inv, dL);
  return derive_bc(std::move(g));
}

}  // namespace whdet
