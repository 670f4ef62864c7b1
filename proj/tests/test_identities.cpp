#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "whdet/corpus.hpp"
#include "whdet/identities.hpp"

using namespace whdet;

namespace {

// three-term recurrence oracle for the tridiagonal determinant
// D_n = (1+ab) D_{n-1} - ab D_{n-2}, closed form (1 - (ab)^{n+1}) / (1 - ab)
Complex tridiag_det(Complex ab, long n) {
  return (Complex{1.0, 0.0} - ipow(ab, n + 1)) / (Complex{1.0, 0.0} - ab);
}

Symbol exp_pair(double gamma, double delta) {
  std::vector<CMatrix> c{CMatrix::Constant(1, 1, delta), CMatrix::Zero(1, 1),
                         CMatrix::Constant(1, 1, gamma)};
  return exp_symbol(Symbol(1, -1, std::move(c)));
}

double worst_err(const IdentityReport& r) { return std::min(r.abs_err, r.rel_err); }

}  // namespace

TEST_CASE("Toeplitz determinant identity (Hankel correction form)") {
  SECTION("identity symbol") {
    SymbolContext ctx("id", Symbol::identity(1));
    const auto r = check_bo(ctx, 4, 1e-10);
    REQUIRE(r.pass);
    REQUIRE(std::abs(r.lhs - Complex{1.0, 0.0}) < 1e-14);
    REQUIRE(std::abs(r.rhs - Complex{1.0, 0.0}) < 1e-12);
  }
  SECTION("rational pair against the recurrence oracle") {
    SymbolContext ctx("rp", rational_pair_symbol(0.5, 0.3));
    const auto r = check_bo(ctx, 10, 1e-9);
    REQUIRE(r.pass);
    const Complex oracle = tridiag_det(Complex{0.15, 0.0}, 10);
    REQUIRE(std::abs(r.lhs - oracle) < 1e-12);
    REQUIRE(std::abs(r.rhs - oracle) < 1e-9 * std::abs(oracle));
  }
  SECTION("block symbol, dense determinant as the oracle") {
    SymbolContext ctx("cd", conjugated_diagonal_symbol(
                                202, {rational_pair_symbol(0.35, 0.2),
                                      rational_pair_symbol(-0.3, 0.15)}));
    const auto r = check_bo(ctx, 6, 1e-7);
    REQUIRE(r.pass);
    REQUIRE(r.rel_err < 1e-7);
  }
  SECTION("winding symbols produce a captured error, not a crash") {
    SymbolContext ctx("chi", Symbol::monomial(1));
    const auto r = check_bo(ctx, 3, 1e-7);
    REQUIRE_FALSE(r.pass);
    REQUIRE(r.error.find("NonzeroWinding") != std::string::npos);
  }
}

TEST_CASE("bi-infinite section form and its power-of-two factor") {
  SECTION("trivial derived pair reduces to a pure projection count") {
    SymbolContext ctx("id", Symbol::identity(1));
    const auto [full, factor] = check_bdr(ctx, 3, 1e-10);
    REQUIRE(full.pass);
    REQUIRE(factor.pass);
    REQUIRE(std::abs(factor.lhs - Complex{8.0, 0.0}) < 1e-12);
    REQUIRE(std::abs(factor.rhs - Complex{8.0, 0.0}) < 1e-12);
  }
  SECTION("rational pair") {
    SymbolContext ctx("rp", rational_pair_symbol(0.5, 0.3));
    const auto [full, factor] = check_bdr(ctx, 5, 1e-8);
    REQUIRE(full.pass);
    REQUIRE(factor.pass);
    REQUIRE(std::abs(full.lhs - tridiag_det(Complex{0.15, 0.0}, 5)) < 1e-12);
  }
  SECTION("block symbol needs the 2^{nN} weight") {
    SymbolContext ctx("cd", conjugated_diagonal_symbol(
                                202, {rational_pair_symbol(0.35, 0.2),
                                      rational_pair_symbol(-0.3, 0.15)}));
    const auto [full, factor] = check_bdr(ctx, 4, 1e-7);
    REQUIRE(full.pass);
    REQUIRE(factor.pass);
    // the factor determinant really is ~2^{nN} = 2^8 times the correction
    REQUIRE(std::abs(factor.lhs) > 100.0);
  }
}

TEST_CASE("resolvent determinant f_n") {
  SECTION("s = 0 gives 1") {
    const auto r = f_n(rational_pair_symbol(0.5, 0.3), 2, Complex{0.0, 0.0});
    REQUIRE(std::abs(r.value - Complex{1.0, 0.0}) < 1e-13);
  }
  SECTION("identity symbol counts active indices") {
    for (long n : {0L, 2L, 5L}) {
      const auto r = f_n(Symbol::identity(2), n, Complex{0.3, 0.0});
      REQUIRE(std::abs(r.value - ipow(Complex{1.3, 0.0}, 2 * n)) < 1e-11);
    }
  }
  SECTION("shift symbol moves the projection") {
    const auto r = f_n(Symbol::monomial(1), 3, Complex{0.7, 0.0});
    REQUIRE(std::abs(r.value - ipow(Complex{1.7, 0.0}, 4)) < 1e-11);
  }
}

TEST_CASE("one-parameter identities across the s grid") {
  const std::vector<Complex> grid{{0.7, 0.0}, {-0.3, 0.0}, {0.0, 0.5}, {0.2, 0.4}};
  SECTION("rational pair at positive and negative n") {
    SymbolContext ctx("rp", rational_pair_symbol(0.5, 0.3));
    for (long n : {2L, -2L}) {
      const auto rows = check_s_identities_grid(ctx, n, grid, 1e-8);
      for (const auto& tri : rows)
        for (const auto& r : tri) {
          INFO("id=" << to_string(r.id) << " n=" << n);
          REQUIRE(r.pass);
        }
    }
  }
  SECTION("plus and minus right-hand sides agree with each other") {
    SymbolContext ctx("rd", random_decay_symbol(31, 1, 0.5, 5));
    for (long n : {-3L, 0L, 3L}) {
      const auto rows = check_s_identities_grid(ctx, n, grid, 1e-8);
      for (const auto& tri : rows) {
        REQUIRE(std::abs(tri[0].rhs - tri[1].rhs) <
                1e-8 * std::max(1.0, std::abs(tri[0].rhs)));
      }
    }
  }
  SECTION("product form is consistent with the two one-sided forms") {
    SymbolContext ctx("rp", rational_pair_symbol(-0.4, 0.25));
    const auto tri = check_s_identities(ctx, 1, Complex{0.5, 0.0}, 1e-9);
    // (1+s)^{-n} lhs_plus_rhs * (1-s)^{n} lhs_minus_rhs == product rhs
    const Complex via_sides = tri[0].rhs * ipow(Complex{1.5, 0.0}, -1) * tri[1].rhs *
                              ipow(Complex{0.5, 0.0}, 1);
    REQUIRE(std::abs(via_sides - tri[2].rhs) < 1e-9);
  }
  SECTION("s = 0 is trivially one") {
    SymbolContext ctx("rp", rational_pair_symbol(0.5, 0.3));
    const auto tri = check_s_identities(ctx, 3, Complex{0.0, 0.0}, 1e-12);
    for (const auto& r : tri) {
      REQUIRE(std::abs(r.lhs - Complex{1.0, 0.0}) < 1e-12);
      REQUIRE(std::abs(r.rhs - Complex{1.0, 0.0}) < 1e-12);
    }
  }
}

TEST_CASE("winding-corrected identities") {
  SECTION("pure shift has the closed form (1+s)^{n+w}") {
    SymbolContext ctx("chi1", Symbol::monomial(1));
    const auto [plus, minus] = check_winding(ctx, 3, Complex{0.7, 0.0}, 1e-9);
    REQUIRE(plus.pass);
    REQUIRE(minus.pass);
    REQUIRE(std::abs(plus.lhs - ipow(Complex{1.7, 0.0}, 4)) < 1e-11);
    REQUIRE(plus.id == IdentityId::WIND_PLUS);
  }
  SECTION("negative winding scalar") {
    SymbolContext ctx("wm1", multiply(Symbol::monomial(-1), rational_pair_symbol(0.5, 0.3)));
    for (long n : {-2L, 0L, 4L}) {
      const auto [plus, minus] = check_winding(ctx, n, Complex{0.4, 0.0}, 1e-8);
      INFO("n=" << n);
      REQUIRE(plus.pass);
      REQUIRE(minus.pass);
    }
  }
  SECTION("block symbol with winding determinant") {
    SymbolContext ctx("wblk", conjugated_diagonal_symbol(
                                  205, {Symbol::monomial(1), rational_pair_symbol(0.2, 0.4)}));
    REQUIRE(ctx.det_winding() == 1);
    const auto [plus, minus] = check_winding(ctx, 2, Complex{0.3, 0.0}, 1e-7);
    REQUIRE(plus.pass);
    REQUIRE(minus.pass);
    REQUIRE(plus.id == IdentityId::WIND_PLUS_BLOCK);
    // the uncorrected prefactor would be off by a factor 1.3
    const Complex wrong = plus.rhs / Complex{1.3, 0.0};
    REQUIRE(std::abs(plus.lhs - wrong) > 0.1 * std::abs(plus.lhs));
  }
}

TEST_CASE("multi-interval identity") {
  SECTION("a single interval reduces to the plus form") {
    SymbolContext ctx("rp", rational_pair_symbol(0.5, 0.3));
    const auto mi = check_multi_interval(ctx, {3}, {Complex{0.5, 0.0}}, 1e-12);
    const auto tri = check_s_identities(ctx, 3, Complex{0.5, 0.0}, 1e-12);
    REQUIRE(mi.pass);
    REQUIRE(std::abs(mi.lhs - tri[0].lhs) < 1e-12);
    REQUIRE(std::abs(mi.rhs - tri[0].rhs) < 1e-12);
  }
  SECTION("all weights zero gives 1 = 1") {
    SymbolContext ctx("rp", rational_pair_symbol(0.5, 0.3));
    const auto mi = check_multi_interval(ctx, {2, 5}, {Complex{}, Complex{}}, 1e-12);
    REQUIRE(mi.pass);
    REQUIRE(std::abs(mi.lhs - Complex{1.0, 0.0}) < 1e-12);
    REQUIRE(std::abs(mi.rhs - Complex{1.0, 0.0}) < 1e-12);
  }
  SECTION("two and three intervals on corpus symbols") {
    SymbolContext rp("rp", rational_pair_symbol(0.5, 0.3));
    SymbolContext rd("rd", random_decay_symbol(31, 1, 0.5, 5));
    const auto m1 = check_multi_interval(rp, {2, 5}, {Complex{0.3, 0.0}, Complex{0.6, 0.0}}, 1e-7);
    const auto m2 = check_multi_interval(rd, {1, 3, 6},
                                         {Complex{0.2, 0.0}, Complex{-0.25, 0.0}, Complex{0.4, 0.0}},
                                         1e-7);
    REQUIRE(m1.pass);
    REQUIRE(m2.pass);
  }
  SECTION("constraint violations are reported") {
    SymbolContext ctx("rp", rational_pair_symbol(0.5, 0.3));
    const auto bad = check_multi_interval(ctx, {2, 5}, {Complex{1.5, 0.0}, Complex{0.5, 0.0}}, 1e-7);
    REQUIRE_FALSE(bad.pass);
    REQUIRE(bad.error.find("ConstraintViolated") != std::string::npos);
  }
  SECTION("winding variant with the extra factor") {
    SymbolContext ctx("wp1", multiply(Symbol::monomial(1), rational_pair_symbol(0.4, 0.2)));
    const auto mi = check_multi_interval(ctx, {2, 4}, {Complex{0.3, 0.0}, Complex{0.5, 0.0}},
                                         1e-6, /*winding_variant=*/true);
    REQUIRE(mi.pass);
    // without the (1+s_k)^w factor the two sides must not agree
    const auto plain = check_multi_interval(ctx, {2, 4}, {Complex{0.3, 0.0}, Complex{0.5, 0.0}},
                                            1e-6, false);
    REQUIRE_FALSE(plain.pass);
  }
}

TEST_CASE("complement and inverse-chain checks") {
  SECTION("identity symbol is exact") {
    SymbolContext ctx("id", Symbol::identity(1));
    REQUIRE(check_complement(ctx, 16, 1e-12).pass);
    REQUIRE(check_inverse_chain(ctx, 4, 1e-12).pass);
  }
  SECTION("corpus residuals") {
    SymbolContext rp("rp", rational_pair_symbol(0.5, 0.3));
    REQUIRE(check_complement(rp, 64, 1e-7).pass);
    const auto chain = check_inverse_chain(rp, 4, 1e-8);
    REQUIRE(chain.pass);
    REQUIRE(chain.lhs.real() < 1e-8);
  }
  SECTION("determinant corollary of the chain") {
    const Symbol a = rational_pair_symbol(0.5, 0.3);
    SymbolContext ctx("rp", a);
    const Factorization& f = ctx.factorization();
    for (long n : {3L, 6L}) {
      const Complex lhs = det_finite(toeplitz_finite(f.v_plus_inv, n) *
                                     toeplitz_finite(a, n) *
                                     toeplitz_finite(f.v_minus_inv, n));
      const Complex rhs = ipow(ctx.g(), -n) * det_finite(toeplitz_finite(a, n));
      REQUIRE(std::abs(lhs - rhs) < 1e-9 * std::abs(rhs));
    }
  }
}

TEST_CASE("f_n is polynomial in s on a fixed window") {
  // degree-4 interpolation through 5 Chebyshev nodes predicts held-out
  // values once the active section's higher singular values are negligible
  const Symbol a = exp_pair(0.15, 0.1);
  const long n = 1;
  std::vector<Complex> nodes, values;
  for (int i = 0; i < 5; ++i) {
    const double x = 0.8 * std::cos((2.0 * i + 1.0) * std::numbers::pi / 10.0);
    nodes.push_back({x, 0.0});
    values.push_back(f_n(a, n, {x, 0.0}).value);
  }
  Eigen::MatrixXcd vand(5, 5);
  Eigen::VectorXcd rhs(5);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) vand(i, j) = ipow(nodes[i], j);
    rhs(i) = values[i];
  }
  const Eigen::VectorXcd coef = vand.fullPivLu().solve(rhs);
  for (double x : {-0.55, 0.55}) {
    Complex interp{0.0, 0.0};
    for (int j = 0; j < 5; ++j) interp += coef(j) * ipow(Complex{x, 0.0}, j);
    const Complex exact = f_n(a, n, {x, 0.0}).value;
    REQUIRE(std::abs(interp - exact) < 1e-6);
  }
}

TEST_CASE("identity values are invariant under constant regauging") {
  const Symbol a = conjugated_diagonal_symbol(202, {rational_pair_symbol(0.35, 0.2),
                                                    rational_pair_symbol(-0.3, 0.15)});
  SymbolContext base("cd", a);
  const auto bo0 = check_bo(base, 5, 1e-9);
  const auto bdr0 = check_bdr(base, 3, 1e-9);
  const auto chain0 = check_inverse_chain(base, 3, 1e-9);

  DeterministicRng rng(77);
  CMatrix c = CMatrix::Identity(2, 2), d = CMatrix::Identity(2, 2);
  for (int r = 0; r < 2; ++r)
    for (int col = 0; col < 2; ++col) {
      c(r, col) += 0.4 * rng.complex_in_square();
      d(r, col) += 0.4 * rng.complex_in_square();
    }
  SymbolContext gauged("cd", a);
  gauged.set_factorization(regauge(base.factorization(), c, d));
  const auto bo1 = check_bo(gauged, 5, 1e-9);
  const auto bdr1 = check_bdr(gauged, 3, 1e-9);
  const auto chain1 = check_inverse_chain(gauged, 3, 1e-9);

  REQUIRE(std::abs(bo0.rhs - bo1.rhs) < 1e-9 * std::abs(bo0.rhs));
  REQUIRE(std::abs(bdr0.first.rhs - bdr1.first.rhs) < 1e-9 * std::abs(bdr0.first.rhs));
  REQUIRE(std::abs(bdr0.second.lhs - bdr1.second.lhs) < 1e-9 * std::abs(bdr0.second.lhs));
  REQUIRE(bo1.pass);
  REQUIRE(bdr1.first.pass);
  REQUIRE(chain0.pass);
  REQUIRE(chain1.pass);
}

TEST_CASE("seeded minor-ratio sweep") {
  const auto r = check_minor_ratio(4242, 10, 20, 1e-10);
  REQUIRE(r.pass);
  REQUIRE(worst_err(r) < 1e-10);
}
