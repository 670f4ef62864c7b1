#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "whdet/corpus.hpp"
#include "whdet/wiener_hopf.hpp"

using namespace whdet;

namespace {

Symbol scalar_symbol(long k_min, std::vector<Complex> vals) {
  std::vector<CMatrix> c;
  for (const auto& v : vals) c.push_back(CMatrix::Constant(1, 1, v));
  return Symbol(1, k_min, std::move(c));
}

double scalar_coeff_err(const Symbol& s, long k, Complex expect) {
  return std::abs(s.coeff(k)(0, 0) - expect);
}

// conjugated-diagonal test fixture with known scalar factors
struct ConjugatedFixture {
  Symbol a{2};
  CMatrix v, vinv;
  Symbol e1{1}, e2{1};
  ConjugatedFixture() {
    e1 = rational_pair_symbol(0.35, 0.2);
    e2 = rational_pair_symbol(-0.3, 0.15);
    v = conjugation_matrix(202, 2);
    vinv = v.inverse();
    a = conjugated_diagonal_symbol(202, {e1, e2});
  }
  // conjugate a diagonal of scalar symbols by V
  Symbol conjugate(const Symbol& d1, const Symbol& d2) const {
    long lo = std::min(d1.k_min(), d2.k_min());
    long hi = std::max(d1.k_max(), d2.k_max());
    std::vector<CMatrix> c;
    for (long k = lo; k <= hi; ++k) {
      CMatrix d = CMatrix::Zero(2, 2);
      d(0, 0) = d1.coeff(k)(0, 0);
      d(1, 1) = d2.coeff(k)(0, 0);
      c.push_back(v * d * vinv);
    }
    return Symbol(2, lo, std::move(c));
  }
};

}  // namespace

TEST_CASE("scalar right factorization") {
  SECTION("constants factor trivially") {
    auto [um, up] = factor_right_scalar(Symbol::identity(1));
    REQUIRE(wiener_norm(um - Symbol::identity(1)) < 1e-14);
    REQUIRE(wiener_norm(up - Symbol::identity(1)) < 1e-14);
  }
  SECTION("rational pair recovers its two factors") {
    auto [um, up] = factor_right_scalar(rational_pair_symbol(0.5, 0.3));
    REQUIRE(scalar_coeff_err(up, 0, {1.0, 0.0}) < 1e-10);
    REQUIRE(scalar_coeff_err(up, 1, {-0.5, 0.0}) < 1e-10);
    REQUIRE(wiener_norm(up.restricted(2, 100)) < 1e-10);
    REQUIRE(scalar_coeff_err(um, 0, {1.0, 0.0}) < 1e-10);
    REQUIRE(scalar_coeff_err(um, -1, {-0.3, 0.0}) < 1e-10);
  }
  SECTION("exponentials split by support") {
    const Symbol lg = scalar_symbol(-1, {0.1, 0.0, 0.2});
    const Symbol a = exp_symbol(lg);
    auto [um, up] = factor_right_scalar(a);
    const Symbol up_expect = exp_symbol(scalar_symbol(1, {0.2}));
    const Symbol um_expect = exp_symbol(scalar_symbol(-1, {0.1}));
    REQUIRE(wiener_norm(up - up_expect) < 1e-10);
    REQUIRE(wiener_norm(um - um_expect) < 1e-10);
  }
}

TEST_CASE("block right factorization") {
  SECTION("identity block") {
    auto [um, up] = factor_right_block(Symbol::identity(2), 8);
    REQUIRE(wiener_norm(um - Symbol::identity(2)) < 1e-12);
    REQUIRE(wiener_norm(up - Symbol::identity(2)) < 1e-12);
  }
  SECTION("block method agrees with the scalar method") {
    const Symbol a = rational_pair_symbol(0.5, 0.3);
    auto [um_s, up_s] = factor_right_scalar(a);
    auto [um_b, up_b] = factor_right_block(a, default_truncation_order(a));
    REQUIRE(wiener_norm(up_b - up_s) < 1e-8);
    REQUIRE(wiener_norm(um_b - um_s) < 1e-8);
  }
  SECTION("conjugated diagonal factors through the conjugation") {
    ConjugatedFixture fx;
    auto [um, up] = factor_right_block(fx.a, default_truncation_order(fx.a));
    // oracle: u_plus = V diag(1 - 0.35 t, 1 + 0.3 t) V^{-1}
    const Symbol up_expect = fx.conjugate(scalar_symbol(0, {1.0, -0.35}),
                                          scalar_symbol(0, {1.0, 0.3}));
    const Symbol um_expect = fx.conjugate(scalar_symbol(-1, {-0.2, 1.0}),
                                          scalar_symbol(-1, {-0.15, 1.0}));
    REQUIRE(wiener_norm(up - up_expect) < 1e-8);
    REQUIRE(wiener_norm(um - um_expect) < 1e-8);
    REQUIRE(wiener_norm(multiply(um, up) - fx.a) < 1e-8);
  }
  SECTION("ill conditioned sections are refused") {
    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 1e-13;
    REQUIRE_THROWS_AS(factor_right_block(Symbol::constant(d), 4), IllConditioned);
  }
}

TEST_CASE("left factorization by reflection") {
  SECTION("identity") {
    auto [vp, vm] = factor_left(Symbol::identity(2), 8);
    REQUIRE(wiener_norm(vp - Symbol::identity(2)) < 1e-12);
    REQUIRE(wiener_norm(vm - Symbol::identity(2)) < 1e-12);
  }
  SECTION("scalar symbols: commutative re-split of the constant") {
    const Symbol a = rational_pair_symbol(0.5, 0.3);
    const Factorization f = factorize(a);
    REQUIRE(std::abs(f.v_minus.coeff(0)(0, 0) - Complex{1.0, 0.0}) < 1e-12);
    REQUIRE(wiener_norm(multiply(f.v_plus, f.v_minus) - a) < 1e-10);
  }
  SECTION("block corpus residual") {
    ConjugatedFixture fx;
    auto [vp, vm] = factor_left(fx.a, default_truncation_order(fx.a));
    REQUIRE(std::abs(vm.coeff(0)(0, 0) - Complex{1.0, 0.0}) < 1e-10);
    REQUIRE(max_entry_magnitude(vm.coeff(0) - CMatrix::Identity(2, 2)) < 1e-10);
    REQUIRE(wiener_norm(multiply(vp, vm) - fx.a) < 1e-8);
  }
}

TEST_CASE("derived pair b, c") {
  SECTION("identity gives identity") {
    const Factorization f = factorize_with_bc(Symbol::identity(2));
    REQUIRE(wiener_norm(f.b - Symbol::identity(2)) < 1e-12);
    REQUIRE(wiener_norm(f.c - Symbol::identity(2)) < 1e-12);
  }
  SECTION("series of b and c for the rational pair") {
    const Factorization f = factorize_with_bc(rational_pair_symbol(0.5, 0.3));
    // b = (1 - 0.3/t)/(1 - 0.5 t): b_m = 0.85 * 0.5^m for m >= 0, b_{-1} = -0.3
    REQUIRE(scalar_coeff_err(f.b, -1, {-0.3, 0.0}) < 1e-10);
    for (long mth = 0; mth <= 12; ++mth)
      REQUIRE(scalar_coeff_err(f.b, mth, 0.85 * std::pow(0.5, static_cast<double>(mth))) < 1e-10);
    // c = (1 - 0.5 t)/(1 - 0.3/t): c_1 = -0.5, c_m = 0.85 * 0.3^{|m|} for m <= 0
    REQUIRE(scalar_coeff_err(f.c, 1, {-0.5, 0.0}) < 1e-10);
    for (long mth = 0; mth >= -12; --mth)
      REQUIRE(scalar_coeff_err(f.c, mth, 0.85 * std::pow(0.3, static_cast<double>(-mth))) < 1e-10);
  }
  SECTION("b c = I on the corpus") {
    ConjugatedFixture fx;
    for (const Symbol& a : {rational_pair_symbol(0.5, 0.3), fx.a,
                            random_decay_symbol(11, 2, 0.4, 4)}) {
      const Factorization f = factorize_with_bc(a, {{}, a.block_size() > 1});
      REQUIRE(f.residual_bc < 1e-8);
    }
  }
}

TEST_CASE("factorization invariants on the corpus") {
  ConjugatedFixture fx;
  const std::vector<Symbol> corpus{rational_pair_symbol(0.5, 0.3),
                                   rational_pair_symbol(Complex{0.3, 0.2}, -0.35), fx.a,
                                   random_decay_symbol(11, 2, 0.4, 4)};
  for (const auto& a : corpus) {
    const Factorization f = factorize_with_bc(a);
    // analyticity: off-side coefficients were negligible before truncation
    REQUIRE(f.analyticity_defect < 1e-9);
    REQUIRE(f.residual_right < 1e-8);
    REQUIRE(f.residual_left < 1e-8);
    REQUIRE(f.residual_bc < 1e-8);
    // normalization
    REQUIRE(max_entry_magnitude(f.u_plus.coeff(0) - CMatrix::Identity(a.block_size(), a.block_size())) < 1e-9);
    REQUIRE(max_entry_magnitude(f.v_minus.coeff(0) - CMatrix::Identity(a.block_size(), a.block_size())) < 1e-9);
    // support sides
    REQUIRE(f.u_plus.k_min() >= 0);
    REQUIRE(f.u_plus_inv.k_min() >= 0);
    REQUIRE(f.v_plus.k_min() >= 0);
    REQUIRE(f.u_minus.k_max() <= 0);
    REQUIRE(f.u_minus_inv.k_max() <= 0);
    REQUIRE(f.v_minus.k_max() <= 0);
  }
}

TEST_CASE("inverse Toeplitz sections factor through the plus/minus inverses") {
  const Symbol a = rational_pair_symbol(0.5, 0.3);
  const Factorization f = factorize(a);
  double prev_defect = 1e9;
  for (long m : {16L, 32L}) {
    const CMatrix t = toeplitz_finite(a, m);
    const CMatrix inv = Eigen::PartialPivLU<CMatrix>(t).solve(
        CMatrix::Identity(m, m));
    const CMatrix split = toeplitz_finite(f.u_plus_inv, m) * toeplitz_finite(f.u_minus_inv, m);
    // interior blocks: section edges feel the truncation, the middle does not
    const long lo = m / 4, len = m / 2;
    const double defect = max_entry_magnitude((inv - split).block(lo, lo, len, len));
    REQUIRE(defect < prev_defect + 1e-15);
    prev_defect = defect;
  }
  REQUIRE(prev_defect < 1e-8);
}

TEST_CASE("regauging by constants preserves the factorization contracts") {
  ConjugatedFixture fx;
  const Factorization f = factorize_with_bc(fx.a);
  DeterministicRng rng(99);
  CMatrix c = CMatrix::Identity(2, 2), d = CMatrix::Identity(2, 2);
  for (int r = 0; r < 2; ++r)
    for (int col = 0; col < 2; ++col) {
      c(r, col) += 0.4 * rng.complex_in_square();
      d(r, col) += 0.4 * rng.complex_in_square();
    }
  const Factorization g = regauge(f, c, d);
  REQUIRE(wiener_norm(multiply(g.u_minus, g.u_plus) - fx.a) < 1e-8);
  REQUIRE(wiener_norm(multiply(g.v_plus, g.v_minus) - fx.a) < 1e-8);
  REQUIRE(g.residual_bc < 1e-8);
}
