#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "whdet/determinants.hpp"
#include "whdet/operators.hpp"
#include "whdet/rng.hpp"
#include "whdet/symbol.hpp"
#include "whdet/wiener_hopf.hpp"

namespace whdet {

/// The determinant identities this laboratory verifies, named by role:
///   BO            det T_n(a) = G^n E det(I - Q_n H(b)H(~c) Q_n)
///   BDR           det T_n(a) = G^n E 2^{-nN} det(I + P - L(c) Q_n L(b))
///   BDR_FACTOR    det(I + P - L(c) Q_n L(b)) = 2^{nN} det(I - Q_n H(b)H(~c) Q_n)
///   S_PLUS        f_n(s) = (1+s)^{nN} det(I - s^2 Q_n a^{-1} Q a Q_n)
///   S_MINUS       f_n(s) = (1-s)^{-nN} det(I - s^2 (I-Q_n) a^{-1} P a (I-Q_n))
///   S_PRODUCT     f_n(-s) f_n(s) equals the product of the two dets above
///   WIND_*        S_PLUS / S_MINUS corrected by the winding of (det) a
///   MULTI_INTERVAL  the multi-interval generalization of S_PLUS
///   COMPLEMENT    T(b)T(c) + H(b)H(~c) = I   (finite-section corner residual)
///   MINOR_RATIO   det P_n (I-K)^{-1} P_n = det(I - Q_n K Q_n) / det(I - K)
///   INVERSE_CHAIN P_n (I-K)^{-1} P_n = P_n T^{-1}(c) T^{-1}(b) P_n
///                 = T_n(v_+^{-1}) T_n(a) T_n(v_-^{-1}) for K = H(b)H(~c)
enum class IdentityId {
  BO,
  BDR,
  BDR_FACTOR,
  S_PLUS,
  S_MINUS,
  S_PRODUCT,
  WIND_PLUS,
  WIND_MINUS,
  WIND_PLUS_BLOCK,
  WIND_MINUS_BLOCK,
  MULTI_INTERVAL,
  MULTI_INTERVAL_WINDING,
  COMPLEMENT,
  MINOR_RATIO,
  INVERSE_CHAIN,
};

inline std::string_view to_string(IdentityId id) {
  switch (id) {
    case IdentityId::BO: return "BO";
    case IdentityId::BDR: return "BDR";
    case IdentityId::BDR_FACTOR: return "BDR_FACTOR";
    case IdentityId::S_PLUS: return "S_PLUS";
    case IdentityId::S_MINUS: return "S_MINUS";
    case IdentityId::S_PRODUCT: return "S_PRODUCT";
    case IdentityId::WIND_PLUS: return "WIND_PLUS";
    case IdentityId::WIND_MINUS: return "WIND_MINUS";
    case IdentityId::WIND_PLUS_BLOCK: return "WIND_PLUS_BLOCK";
    case IdentityId::WIND_MINUS_BLOCK: return "WIND_MINUS_BLOCK";
    case IdentityId::MULTI_INTERVAL: return "MULTI_INTERVAL";
    case IdentityId::MULTI_INTERVAL_WINDING: return "MULTI_INTERVAL_WINDING";
    case IdentityId::COMPLEMENT: return "COMPLEMENT";
    case IdentityId::MINOR_RATIO: return "MINOR_RATIO";
    case IdentityId::INVERSE_CHAIN: return "INVERSE_CHAIN";
  }
  return "?";
}

struct IdentityParams {
  long n = 0;
  Complex s{0.0, 0.0};
  std::vector<long> n_list;     // multi-interval cut points n_1 <= ... <= n_k
  std::vector<Complex> s_list;  // multi-interval weights s_1 .. s_k
  double tol = 1e-7;
};

struct IdentityReport {
  IdentityId id = IdentityId::BO;
  std::string symbol_name;
  IdentityParams params;
  Complex lhs{0.0, 0.0};
  Complex rhs{0.0, 0.0};
  double abs_err = std::numeric_limits<double>::infinity();
  double rel_err = std::numeric_limits<double>::infinity();
  bool pass = false;
  std::string error;  // nonempty when a numeric-domain error was captured
  // diagnostics
  WindowSpec window{};
  double residual_right = 0.0, residual_left = 0.0, residual_bc = 0.0;
};

/// Integer power with exact handling of negative exponents.
inline Complex ipow(Complex z, long e) {
  if (e < 0) return 1.0 / ipow(z, -e);
  Complex r{1.0, 0.0};
  while (e) {
    if (e & 1) r *= z;
    z *= z;
    e >>= 1;
  }
  return r;
}

inline IdentityReport make_report(IdentityId id, std::string symbol,
                                  IdentityParams params, Complex lhs, Complex rhs) {
  IdentityReport r;
  r.id = id;
  r.symbol_name = std::move(symbol);
  r.params = std::move(params);
  r.lhs = lhs;
  r.rhs = rhs;
  r.abs_err = std::abs(lhs - rhs);
  r.rel_err = std::abs(lhs) > 0.0 ? r.abs_err / std::abs(lhs)
                                  : (r.abs_err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  // near-zero values are judged absolutely, everything else relatively
  r.pass = std::abs(lhs) < 1.0 ? r.abs_err < r.params.tol : r.rel_err < r.params.tol;
  return r;
}

inline IdentityReport failed_report(IdentityId id, std::string symbol,
                                    IdentityParams params, const Error& e) {
  IdentityReport r;
  r.id = id;
  r.symbol_name = std::move(symbol);
  r.params = std::move(params);
  r.error = std::string(e.code()) + ": " + e.what();
  return r;
}

/// Per-symbol cache of derived data (inverse, factorization, constants).
/// Prepare what a batch needs up front; afterwards the context is read-only
/// and safe to share across worker threads.
class SymbolContext {
 public:
  SymbolContext(std::string name, Symbol a, NumericPolicy pol = {})
      : name_(std::move(name)), a_(std::move(a)), pol_(pol) {}

  const std::string& name() const { return name_; }
  const Symbol& symbol() const { return a_; }
  const NumericPolicy& policy() const { return pol_; }

  const Symbol& inverse() {
    if (!inv_) inv_ = invert_auto(a_, pol_);
    return *inv_;
  }

  const Factorization& factorization() {
    if (!fact_) {
      FactorizationOptions opt;
      opt.policy = pol_;
      fact_ = factorize_with_bc(a_, opt);
    }
    return *fact_;
  }

  void set_factorization(Factorization f) { fact_ = std::move(f); }

  Complex g() {
    if (!g_) g_ = geometric_mean(a_, pol_);
    return *g_;
  }

  Complex e(double tol) {
    if (!e_) e_ = e_constant(factorization(), tol, pol_);
    return *e_;
  }

  /// Winding number of det a about the origin.
  long det_winding() {
    if (!wind_) {
      if (a_.block_size() == 1) {
        wind_ = winding_number(a_, pol_);
      } else {
        long m = detail::grid_start(a_.support_width() * a_.block_size(), pol_);
        for (;;) {
          try {
            const auto grid = evaluate(a_, m);
            std::vector<Complex> dets(grid.values.size());
            for (std::size_t j = 0; j < grid.values.size(); ++j)
              dets[j] = grid.values[j].determinant();
            wind_ = detail::winding_from_total(detail::unwrap_phase(dets, pol_).total);
            break;
          } catch (const PhaseStepTooLarge&) {
            if (2 * m > pol_.grid_cap) throw;
            m *= 2;
          }
        }
      }
    }
    return *wind_;
  }

 private:
  std::string name_;
  Symbol a_;
  NumericPolicy pol_;
  std::optional<Symbol> inv_;
  std::optional<Factorization> fact_;
  std::optional<Complex> g_;
  std::optional<Complex> e_;
  std::optional<long> wind_;
};

/// f_n(s) = det(I + s P - s L(a) Q_n L(a^{-1})).
inline DeterminantResult f_n(const Symbol& a, long n, Complex s, double tol = 1e-10,
                             const NumericPolicy& pol = {}) {
  const Symbol ainv = invert_auto(a, pol);
  const int nb = a.block_size();
  const auto part_p = OperatorExpr::proj_nonnegative(nb);
  const auto part_a = OperatorExpr::product({OperatorExpr::multiply_by(a),
                                             OperatorExpr::proj_tail(n),
                                             OperatorExpr::multiply_by(ainv)});
  return fredholm_det_family({part_p, part_a}, {{s, -s}}, tol, pol)[0];
}

namespace detail {

/// Deduplicated weight rows for a shared-parts determinant family.
struct MemberTable {
  std::vector<std::vector<Complex>> rows;
  std::size_t add(std::vector<Complex> row) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i] == row) return i;
    rows.push_back(std::move(row));
    return rows.size() - 1;
  }
};

struct ResolventParts {
  std::vector<OperatorExpr> parts;  // [P, a Q_n a^{-1}, Q_n a^{-1} Q a Q_n, (I-Q_n) a^{-1} P a (I-Q_n)]
};

inline ResolventParts resolvent_parts(const Symbol& a, const Symbol& ainv, long n) {
  const int nb = a.block_size();
  ResolventParts r;
  r.parts.push_back(OperatorExpr::proj_nonnegative(nb));
  r.parts.push_back(OperatorExpr::product({OperatorExpr::multiply_by(a),
                                           OperatorExpr::proj_tail(n),
                                           OperatorExpr::multiply_by(ainv)}));
  r.parts.push_back(OperatorExpr::product({OperatorExpr::proj_tail(n),
                                           OperatorExpr::multiply_by(ainv),
                                           OperatorExpr::proj_negative(),
                                           OperatorExpr::multiply_by(a),
                                           OperatorExpr::proj_tail(n)}));
  r.parts.push_back(OperatorExpr::product({OperatorExpr::proj_below(n),
                                           OperatorExpr::multiply_by(ainv),
                                           OperatorExpr::proj_nonnegative(),
                                           OperatorExpr::multiply_by(a),
                                           OperatorExpr::proj_below(n)}));
  return r;
}

}  // namespace detail

/// One-parameter resolvent identities (plus form, minus form, and their
/// product form) for a whole grid of s values at fixed n. The four operator
/// sections are realized once and shared by every determinant in the grid.
inline std::vector<std::array<IdentityReport, 3>> check_s_identities_grid(
    SymbolContext& ctx, long n, const std::vector<Complex>& s_grid, double tol) {
  const auto fail_all = [&](const Error& e) {
    std::vector<std::array<IdentityReport, 3>> out;
    for (const Complex& s : s_grid) {
      IdentityParams p;
      p.n = n;
      p.s = s;
      p.tol = tol;
      out.push_back({failed_report(IdentityId::S_PLUS, ctx.name(), p, e),
                     failed_report(IdentityId::S_MINUS, ctx.name(), p, e),
                     failed_report(IdentityId::S_PRODUCT, ctx.name(), p, e)});
    }
    return out;
  };
  try {
    for (const Complex& s : s_grid) {
      if (s == Complex{-1.0, 0.0} || s == Complex{1.0, 0.0})
        throw ConstraintViolated("s = -1 and s = 1 are excluded");
    }
    const Symbol& a = ctx.symbol();
    const long nn = static_cast<long>(a.block_size()) * n;
    auto rp = detail::resolvent_parts(a, ctx.inverse(), n);

    detail::MemberTable table;
    const Complex z0{0.0, 0.0};
    std::vector<std::array<std::size_t, 4>> idx;  // f(s), f(-s), det_plus(s^2), det_minus(s^2)
    for (const Complex& s : s_grid) {
      const Complex s2 = s * s;
      idx.push_back({table.add({s, -s, z0, z0}), table.add({-s, s, z0, z0}),
                     table.add({z0, z0, -s2, z0}), table.add({z0, z0, z0, -s2})});
    }
    const auto dets = fredholm_det_family(rp.parts, table.rows, tol * 1e-2, ctx.policy());

    std::vector<std::array<IdentityReport, 3>> out;
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
      const Complex s = s_grid[i];
      IdentityParams p;
      p.n = n;
      p.s = s;
      p.tol = tol;
      const Complex f_pos = dets[idx[i][0]].value;
      const Complex f_neg = dets[idx[i][1]].value;
      const Complex det_q = dets[idx[i][2]].value;
      const Complex det_p = dets[idx[i][3]].value;
      auto plus = make_report(IdentityId::S_PLUS, ctx.name(), p, f_pos,
                              ipow(Complex{1.0, 0.0} + s, nn) * det_q);
      auto minus = make_report(IdentityId::S_MINUS, ctx.name(), p, f_pos,
                               ipow(Complex{1.0, 0.0} - s, -nn) * det_p);
      auto prod = make_report(IdentityId::S_PRODUCT, ctx.name(), p, f_neg * f_pos,
                              det_p * det_q);
      plus.window = minus.window = prod.window = dets[idx[i][0]].window_used;
      out.push_back({std::move(plus), std::move(minus), std::move(prod)});
    }
    return out;
  } catch (const Error& e) {
    return fail_all(e);
  }
}

inline std::array<IdentityReport, 3> check_s_identities(SymbolContext& ctx, long n,
                                                        Complex s, double tol) {
  return check_s_identities_grid(ctx, n, {s}, tol)[0];
}

/// Winding-corrected resolvent identities; the prefactor exponent picks up
/// the winding number w of det a. Scalar symbols report the scalar ids,
/// block symbols the block ids.
inline std::vector<std::array<IdentityReport, 2>> check_winding_grid(
    SymbolContext& ctx, long n, const std::vector<Complex>& s_grid, double tol) {
  const bool scalar = ctx.symbol().block_size() == 1;
  const IdentityId id_plus = scalar ? IdentityId::WIND_PLUS : IdentityId::WIND_PLUS_BLOCK;
  const IdentityId id_minus = scalar ? IdentityId::WIND_MINUS : IdentityId::WIND_MINUS_BLOCK;
  const auto fail_all = [&](const Error& e) {
    std::vector<std::array<IdentityReport, 2>> out;
    for (const Complex& s : s_grid) {
      IdentityParams p;
      p.n = n;
      p.s = s;
      p.tol = tol;
      out.push_back({failed_report(id_plus, ctx.name(), p, e),
                     failed_report(id_minus, ctx.name(), p, e)});
    }
    return out;
  };
  try {
    const Symbol& a = ctx.symbol();
    const long w = ctx.det_winding();
    const long nn = static_cast<long>(a.block_size()) * n;
    auto rp = detail::resolvent_parts(a, ctx.inverse(), n);

    detail::MemberTable table;
    const Complex z0{0.0, 0.0};
    std::vector<std::array<std::size_t, 3>> idx;  // f(s), det_plus, det_minus
    for (const Complex& s : s_grid) {
      const Complex s2 = s * s;
      idx.push_back({table.add({s, -s, z0, z0}), table.add({z0, z0, -s2, z0}),
                     table.add({z0, z0, z0, -s2})});
    }
    const auto dets = fredholm_det_family(rp.parts, table.rows, tol * 1e-2, ctx.policy());

    std::vector<std::array<IdentityReport, 2>> out;
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
      const Complex s = s_grid[i];
      IdentityParams p;
      p.n = n;
      p.s = s;
      p.tol = tol;
      const Complex f_val = dets[idx[i][0]].value;
      auto plus = make_report(id_plus, ctx.name(), p, f_val,
                              ipow(Complex{1.0, 0.0} + s, nn + w) * dets[idx[i][1]].value);
      auto minus = make_report(id_minus, ctx.name(), p, f_val,
                               ipow(Complex{1.0, 0.0} - s, -nn - w) * dets[idx[i][2]].value);
      plus.window = minus.window = dets[idx[i][0]].window_used;
      out.push_back({std::move(plus), std::move(minus)});
    }
    return out;
  } catch (const Error& e) {
    return fail_all(e);
  }
}

inline std::pair<IdentityReport, IdentityReport> check_winding(SymbolContext& ctx, long n,
                                                               Complex s, double tol) {
  auto v = check_winding_grid(ctx, n, {s}, tol)[0];
  return {v[0], v[1]};
}

/// Borodin-Okounkov identity for a sweep of section sizes; the Hankel
/// product sections are shared across the sweep.
inline std::vector<IdentityReport> check_bo_sweep(SymbolContext& ctx,
                                                  const std::vector<long>& ns,
                                                  double tol) {
  const auto params_for = [&](long n) {
    IdentityParams p;
    p.n = n;
    p.tol = tol;
    return p;
  };
  try {
    for (long n : ns)
      if (n < 1) throw ConstraintViolated("the Toeplitz determinant identity needs n >= 1");
    const Symbol& a = ctx.symbol();
    const Factorization& f = ctx.factorization();
    const Complex g = ctx.g();
    const Complex e = ctx.e(tol);
    const auto dets = hankel_correction_dets(f.b, f.c, ns, tol * 1e-2, ctx.policy());
    std::vector<IdentityReport> out;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const Complex lhs = det_finite(toeplitz_finite(a, ns[i]));
      const Complex rhs = ipow(g, ns[i]) * e * dets[i].value;
      auto r = make_report(IdentityId::BO, ctx.name(), params_for(ns[i]), lhs, rhs);
      r.window = dets[i].window_used;
      r.residual_right = f.residual_right;
      r.residual_left = f.residual_left;
      r.residual_bc = f.residual_bc;
      out.push_back(std::move(r));
    }
    return out;
  } catch (const Error& e) {
    std::vector<IdentityReport> out;
    for (long n : ns) out.push_back(failed_report(IdentityId::BO, ctx.name(), params_for(n), e));
    return out;
  }
}

inline IdentityReport check_bo(SymbolContext& ctx, long n, double tol) {
  return check_bo_sweep(ctx, {n}, tol)[0];
}

/// The full determinant formula with the bi-infinite section (first report)
/// and its companion 2^{nN} factor identity (second report).
inline std::pair<IdentityReport, IdentityReport> check_bdr(SymbolContext& ctx, long n,
                                                           double tol) {
  IdentityParams p;
  p.n = n;
  p.tol = tol;
  try {
    if (n < 1) throw ConstraintViolated("the Toeplitz determinant identity needs n >= 1");
    const Symbol& a = ctx.symbol();
    const int nb = a.block_size();
    const Factorization& f = ctx.factorization();
    const auto part_p = OperatorExpr::proj_nonnegative(nb);
    const auto part_cb = OperatorExpr::product({OperatorExpr::multiply_by(f.c),
                                                OperatorExpr::proj_tail(n),
                                                OperatorExpr::multiply_by(f.b)});
    const Complex d_full =
        fredholm_det_family({part_p, part_cb},
                            {{Complex{1.0, 0.0}, Complex{-1.0, 0.0}}}, tol * 1e-2,
                            ctx.policy())[0].value;
    const Complex d_corr = hankel_correction_dets(f.b, f.c, {n}, tol * 1e-2, ctx.policy())[0].value;
    const long nn = static_cast<long>(nb) * n;
    const Complex lhs_t = det_finite(toeplitz_finite(a, n));
    auto full = make_report(IdentityId::BDR, ctx.name(), p, lhs_t,
                            ipow(ctx.g(), n) * ctx.e(tol) * ipow(Complex{2.0, 0.0}, -nn) * d_full);
    auto factor = make_report(IdentityId::BDR_FACTOR, ctx.name(), p, d_full,
                              ipow(Complex{2.0, 0.0}, nn) * d_corr);
    full.residual_right = factor.residual_right = f.residual_right;
    full.residual_left = factor.residual_left = f.residual_left;
    full.residual_bc = factor.residual_bc = f.residual_bc;
    return {std::move(full), std::move(factor)};
  } catch (const Error& e) {
    return {failed_report(IdentityId::BDR, ctx.name(), p, e),
            failed_report(IdentityId::BDR_FACTOR, ctx.name(), p, e)};
  }
}

/// Multi-interval generalization: cut points 0 <= n_1 <= ... <= n_k with
/// weights s_1..s_k (s_0 = 0, the final interval running to the window edge).
/// The winding variant multiplies the right-hand side by (1+s_k)^w.
inline IdentityReport check_multi_interval(SymbolContext& ctx,
                                           const std::vector<long>& n_list,
                                           const std::vector<Complex>& s_list,
                                           double tol, bool winding_variant = false) {
  const IdentityId id = winding_variant ? IdentityId::MULTI_INTERVAL_WINDING
                                        : IdentityId::MULTI_INTERVAL;
  IdentityParams p;
  p.n_list = n_list;
  p.s_list = s_list;
  p.tol = tol;
  try {
    const std::size_t k = s_list.size();
    if (k == 0 || n_list.size() != k)
      throw ConstraintViolated("need equally many cut points and weights");
    long prev_n = 0;
    for (long n : n_list) {
      if (n < prev_n) throw ConstraintViolated("cut points must be nondecreasing from 0");
      prev_n = n;
    }
    const Complex sk = s_list.back();
    for (std::size_t j = 0; j < k; ++j) {
      if (sk - s_list[j] == Complex{-1.0, 0.0})
        throw ConstraintViolated("weights must satisfy s_k - s_j != -1");
    }
    if (sk == Complex{-1.0, 0.0}) throw ConstraintViolated("s_k must not be -1");

    const Symbol& a = ctx.symbol();
    const Symbol& ainv = ctx.inverse();
    const int nb = a.block_size();

    std::vector<OperatorExpr> parts;
    parts.push_back(OperatorExpr::proj_nonnegative(nb));
    for (std::size_t j = 0; j < k; ++j) {
      parts.push_back(OperatorExpr::product({OperatorExpr::multiply_by(a),
                                             OperatorExpr::proj_tail(n_list[j]),
                                             OperatorExpr::multiply_by(ainv)}));
    }
    for (std::size_t j = 0; j < k; ++j) {
      const auto interval = j + 1 < k
                                ? OperatorExpr::proj_interval(n_list[j], n_list[j + 1])
                                : OperatorExpr::proj_tail(n_list[j]);
      parts.push_back(OperatorExpr::product({interval, OperatorExpr::multiply_by(ainv),
                                             OperatorExpr::proj_negative(),
                                             OperatorExpr::multiply_by(a)}));
    }

    const Complex z0{0.0, 0.0};
    std::vector<Complex> lhs_row(parts.size(), z0);
    std::vector<Complex> rhs_row(parts.size(), z0);
    lhs_row[0] = sk;
    for (std::size_t j = 0; j < k; ++j) {
      const Complex s_prev = j == 0 ? z0 : s_list[j - 1];
      lhs_row[1 + j] = -(s_list[j] - s_prev);
      rhs_row[1 + k + j] = -sk * s_list[j] / (Complex{1.0, 0.0} + sk - s_list[j]);
    }
    const auto dets =
        fredholm_det_family(parts, {lhs_row, rhs_row}, tol * 1e-2, ctx.policy());

    Complex prefactor{1.0, 0.0};
    for (std::size_t j = 0; j < k; ++j) {
      const Complex sj = j == 0 ? z0 : s_list[j - 1];
      const long n_lo = j == 0 ? 0 : n_list[j - 1];
      const long n_hi = n_list[j];
      prefactor *= ipow(Complex{1.0, 0.0} + sk - sj, (n_hi - n_lo) * nb);
    }
    if (winding_variant) prefactor *= ipow(Complex{1.0, 0.0} + sk, ctx.det_winding());

    auto r = make_report(id, ctx.name(), p, dets[0].value, prefactor * dets[1].value);
    r.window = dets[0].window_used;
    return r;
  } catch (const Error& e) {
    return failed_report(id, ctx.name(), p, e);
  }
}

/// Finite-section residual of T(b)T(c) + H(b)H(~c) = I on the leading
/// corner: sections of size m, residual measured on the m/2 corner where
/// section truncation is negligible.
inline IdentityReport check_complement(SymbolContext& ctx, long m, double tol) {
  IdentityParams p;
  p.n = m;
  p.tol = tol;
  try {
    const Factorization& f = ctx.factorization();
    const int nb = ctx.symbol().block_size();
    const CMatrix tb = toeplitz_finite(f.b, m);
    const CMatrix tc = toeplitz_finite(f.c, m);
    const CMatrix hb = hankel_finite(f.b, m, m);
    const CMatrix hc = hankel_finite(f.c, m, m, /*reflected=*/true);
    const long corner = (m / 2) * nb;
    const CMatrix residual = (tb * tc + hb * hc - CMatrix::Identity(m * nb, m * nb))
                                 .topLeftCorner(corner, corner);
    auto r = make_report(IdentityId::COMPLEMENT, ctx.name(), p,
                         Complex{max_entry_magnitude(residual), 0.0}, Complex{0.0, 0.0});
    r.window = WindowSpec{0, m};
    r.residual_bc = f.residual_bc;
    return r;
  } catch (const Error& e) {
    return failed_report(IdentityId::COMPLEMENT, ctx.name(), p, e);
  }
}

/// Three routes to the same n x n section: the inverse of I - H(b)H(~c),
/// the product of inverse Toeplitz sections of c and b, and the exact
/// triple T_n(v_+^{-1}) T_n(a) T_n(v_-^{-1}). Reports the worst entrywise
/// disagreement between them.
inline IdentityReport check_inverse_chain(SymbolContext& ctx, long n, double tol) {
  IdentityParams p;
  p.n = n;
  p.tol = tol;
  try {
    if (n < 1) throw ConstraintViolated("the section comparison needs n >= 1");
    const Symbol& a = ctx.symbol();
    const int nb = a.block_size();
    const Factorization& f = ctx.factorization();
    const long d = n * nb;

    const CMatrix triple = toeplitz_finite(f.v_plus_inv, n) * toeplitz_finite(a, n) *
                           toeplitz_finite(f.v_minus_inv, n);

    const long u = std::max({f.b.effective_halfwidth(1e-4), f.c.effective_halfwidth(1e-4), 1L});
    long m = n + 2 * u + 16;
    long step = u + 8;
    CMatrix s_resolvent, s_toeplitz;
    std::optional<std::pair<CMatrix, CMatrix>> prev;
    for (;;) {
      if (m > ctx.policy().dim_cap)
        throw NotConverged("sections reached the size cap without stabilizing");
      const CMatrix hb = hankel_finite(f.b, m, m);
      const CMatrix hc = hankel_finite(f.c, m, m, /*reflected=*/true);
      CMatrix rhs = CMatrix::Zero(m * nb, d);
      rhs.topRows(d).setIdentity();
      const CMatrix ik = CMatrix::Identity(m * nb, m * nb) - hb * hc;
      s_resolvent = Eigen::PartialPivLU<CMatrix>(ik).solve(rhs).topRows(d);
      const CMatrix z = Eigen::PartialPivLU<CMatrix>(toeplitz_finite(f.b, m)).solve(rhs);
      s_toeplitz = Eigen::PartialPivLU<CMatrix>(toeplitz_finite(f.c, m)).solve(z).topRows(d);
      if (prev) {
        const double change = std::max(max_entry_magnitude(s_resolvent - prev->first),
                                       max_entry_magnitude(s_toeplitz - prev->second));
        if (change <= tol * 1e-2) break;
      }
      prev = std::make_pair(s_resolvent, s_toeplitz);
      m += step;
      step *= 2;
    }

    const double defect = std::max({max_entry_magnitude(s_resolvent - triple),
                                    max_entry_magnitude(s_toeplitz - triple),
                                    max_entry_magnitude(s_resolvent - s_toeplitz)});
    auto r = make_report(IdentityId::INVERSE_CHAIN, ctx.name(), p,
                         Complex{defect, 0.0}, Complex{0.0, 0.0});
    r.window = WindowSpec{0, n};
    r.residual_right = f.residual_right;
    r.residual_left = f.residual_left;
    r.residual_bc = f.residual_bc;
    return r;
  } catch (const Error& e) {
    return failed_report(IdentityId::INVERSE_CHAIN, ctx.name(), p, e);
  }
}

/// Minor-ratio identity for seeded random contractions K (||K|| < 0.5):
/// det P_n (I-K)^{-1} P_n * det(I-K) = det(I - Q_n K Q_n) for every
/// 1 <= n <= dim. Reports the worst defect over all draws and sections.
inline IdentityReport check_minor_ratio(std::uint64_t seed, long dim, int count,
                                        double tol) {
  IdentityParams p;
  p.n = dim;
  p.tol = tol;
  IdentityReport worst;
  double worst_defect = -1.0;
  DeterministicRng rng(seed);
  for (int trial = 0; trial < count; ++trial) {
    CMatrix k(dim, dim);
    for (long i = 0; i < dim; ++i)
      for (long j = 0; j < dim; ++j) k(i, j) = rng.complex_in_square();
    k *= 0.45 / spectral_norm(k);
    const CMatrix ik = CMatrix::Identity(dim, dim) - k;
    const Complex det_ik = det_finite(ik);
    const CMatrix inv = Eigen::PartialPivLU<CMatrix>(ik).solve(CMatrix::Identity(dim, dim));
    for (long n = 1; n <= dim; ++n) {
      const Complex lhs = det_finite(inv.topLeftCorner(n, n)) * det_ik;
      CMatrix masked = k;
      masked.topRows(n).setZero();
      masked.leftCols(n).setZero();
      const Complex rhs = det_finite(CMatrix::Identity(dim, dim) - masked);
      const double defect = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
      if (defect > worst_defect) {
        worst_defect = defect;
        worst = make_report(IdentityId::MINOR_RATIO, "seeded", p, lhs, rhs);
        worst.params.n = n;
      }
    }
  }
  worst.params.tol = tol;
  worst.pass = worst_defect < tol;
  return worst;
}

}  // namespace whdet
