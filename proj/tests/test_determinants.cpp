#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "whdet/corpus.hpp"
#include "whdet/determinants.hpp"

using namespace whdet;

namespace {

// cofactor-expansion oracle; exponential cost, fine for small sections
Complex det_cofactor(const CMatrix& m) {
  const long n = m.rows();
  if (n == 1) return m(0, 0);
  Complex acc{0.0, 0.0};
  double sign = 1.0;
  for (long j = 0; j < n; ++j) {
    CMatrix minor(n - 1, n - 1);
    for (long r = 1; r < n; ++r) {
      long cc = 0;
      for (long c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    acc += sign * m(0, j) * det_cofactor(minor);
    sign = -sign;
  }
  return acc;
}

CMatrix seeded_matrix(std::uint64_t seed, long n, double scale = 1.0) {
  DeterministicRng rng(seed);
  CMatrix m(n, n);
  for (long r = 0; r < n; ++r)
    for (long c = 0; c < n; ++c) m(r, c) = scale * rng.complex_in_square();
  return m;
}

}  // namespace

TEST_CASE("dense determinants") {
  SECTION("identity") {
    REQUIRE(std::abs(det_finite(CMatrix::Identity(7, 7)) - Complex{1.0, 0.0}) < 1e-15);
  }
  SECTION("diagonal") {
    CMatrix d = CMatrix::Zero(3, 3);
    d(0, 0) = 2.0;
    d(1, 1) = 3.0;
    d(2, 2) = 4.0;
    REQUIRE(std::abs(det_finite(d) - Complex{24.0, 0.0}) < 1e-12);
  }
  SECTION("seeded sections match the cofactor expansion") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      const CMatrix m = seeded_matrix(seed, 8);
      const Complex expect = det_cofactor(m);
      REQUIRE(std::abs(det_finite(m) - expect) < 1e-10 * std::abs(expect));
    }
  }
  SECTION("singular input gives zero") {
    CMatrix m = CMatrix::Zero(4, 4);
    m(0, 1) = 1.0;
    REQUIRE(det_finite(m) == Complex{0.0, 0.0});
  }
  SECTION("multiplicativity on seeded pairs") {
    for (std::uint64_t seed = 10; seed < 16; ++seed) {
      const CMatrix a = seeded_matrix(seed, 10);
      const CMatrix b = seeded_matrix(seed + 100, 10);
      const Complex lhs = det_finite(a * b);
      const Complex rhs = det_finite(a) * det_finite(b);
      REQUIRE(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
    }
  }
}

TEST_CASE("minor ratios of the resolvent (finite case)") {
  // det P_n (I-K)^{-1} P_n = det(I - Q_n K Q_n) / det(I - K)
  for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
    CMatrix k = seeded_matrix(seed, 9);
    k *= 0.45 / spectral_norm(k);
    const CMatrix ik = CMatrix::Identity(9, 9) - k;
    const Complex det_ik = det_finite(ik);
    const CMatrix inv = Eigen::PartialPivLU<CMatrix>(ik).solve(CMatrix::Identity(9, 9));
    for (long n = 1; n <= 9; ++n) {
      const Complex lhs = det_finite(inv.topLeftCorner(n, n)) * det_ik;
      CMatrix masked = k;
      masked.topRows(n).setZero();
      masked.leftCols(n).setZero();
      const Complex rhs = det_finite(CMatrix::Identity(9, 9) - masked);
      REQUIRE(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("stabilized section determinants") {
  SECTION("identity expression") {
    const auto r = fredholm_det(OperatorExpr::identity(), 1e-10);
    REQUIRE(r.converged);
    REQUIRE(std::abs(r.value - Complex{1.0, 0.0}) < 1e-14);
  }
  SECTION("Hankel product of the rational pair has the closed form") {
    const Factorization f = factorize_with_bc(rational_pair_symbol(0.5, 0.3));
    const auto d = hankel_correction_dets(f.b, f.c, {0}, 1e-10);
    REQUIRE(d[0].converged);
    REQUIRE(std::abs(d[0].value - Complex{0.85, 0.0}) < 1e-11);
  }
  SECTION("shift-conjugated tails vanish identically") {
    // Q_n chi_{-1} Q chi_1 Q_n = 0 for n >= 0
    const auto expr = OperatorExpr::sum(
        {OperatorExpr::identity(),
         OperatorExpr::scaled(
             Complex{-0.49, 0.0},
             OperatorExpr::product({OperatorExpr::proj_tail(2),
                                    OperatorExpr::multiply_by(Symbol::monomial(-1)),
                                    OperatorExpr::proj_negative(),
                                    OperatorExpr::multiply_by(Symbol::monomial(1)),
                                    OperatorExpr::proj_tail(2)}))});
    const auto r = fredholm_det(expr, 1e-12);
    REQUIRE(std::abs(r.value - Complex{1.0, 0.0}) < 1e-13);
  }
  SECTION("increments shrink geometrically once windows grow") {
    const Factorization f = factorize_with_bc(rational_pair_symbol(0.5, 0.3));
    const auto part = OperatorExpr::product(
        {OperatorExpr::proj_nonnegative(), OperatorExpr::multiply_by(f.b),
         OperatorExpr::proj_negative(), OperatorExpr::multiply_by(f.c),
         OperatorExpr::proj_nonnegative()});
    // deliberately tiny first window so several rounds run
    const auto r = fredholm_det_family({part}, {{Complex{-1.0, 0.0}}}, 1e-11, {}, 3, 3)[0];
    REQUIRE(r.converged);
    REQUIRE(r.increments.size() >= 3);
    for (std::size_t i = 1; i < r.increments.size(); ++i)
      REQUIRE(r.increments[i] < 0.5 * r.increments[i - 1] + 1e-14);
    REQUIRE(std::abs(r.value - Complex{0.85, 0.0}) < 1e-10);
  }
  SECTION("window cap raises an error") {
    NumericPolicy pol;
    pol.dim_cap = 24;
    const Factorization f = factorize_with_bc(rational_pair_symbol(0.5, 0.3));
    const auto part = OperatorExpr::product(
        {OperatorExpr::proj_nonnegative(), OperatorExpr::multiply_by(f.b),
         OperatorExpr::proj_negative(), OperatorExpr::multiply_by(f.c),
         OperatorExpr::proj_nonnegative()});
    REQUIRE_THROWS_AS(fredholm_det_family({part}, {{Complex{-1.0, 0.0}}}, 1e-13, pol, 2, 2),
                      NotConverged);
  }
}

TEST_CASE("geometric mean") {
  SECTION("identity") {
    REQUIRE(std::abs(geometric_mean(Symbol::identity(2)) - Complex{1.0, 0.0}) < 1e-13);
  }
  SECTION("rational pair has mean one") {
    REQUIRE(std::abs(geometric_mean(rational_pair_symbol(0.5, 0.3)) - Complex{1.0, 0.0}) < 1e-13);
  }
  SECTION("constant diagonal") {
    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 3.0;
    REQUIRE(std::abs(geometric_mean(Symbol::constant(d)) - Complex{6.0, 0.0}) < 1e-12);
  }
  SECTION("winding determinant is refused") {
    REQUIRE_THROWS_AS(geometric_mean(Symbol::monomial(1)), NonzeroWinding);
  }
  SECTION("agrees with the zeroth coefficients of the left factors") {
    const Symbol a = conjugated_diagonal_symbol(
        202, {rational_pair_symbol(0.35, 0.2).scaled(Complex{1.2, 0.1}),
              rational_pair_symbol(-0.3, 0.15)});
    const Factorization f = factorize(a);
    // det v_plus and det v_minus as scalar symbols; their zeroth coefficients
    const auto det_symbol = [](const Symbol& s) {
      const long m = detail::grid_start(s.support_width() * s.block_size(), {});
      auto g = evaluate(s, m);
      std::vector<CMatrix> d(g.values.size());
      for (std::size_t j = 0; j < g.values.size(); ++j)
        d[j] = CMatrix::Constant(1, 1, g.values[j].determinant());
      return fourier_from_samples(GridSamples(1, d), 1e-14);
    };
    const Complex from_factors =
        det_symbol(f.v_plus).coeff(0)(0, 0) * det_symbol(f.v_minus).coeff(0)(0, 0);
    REQUIRE(std::abs(geometric_mean(a) - from_factors) < 1e-10);
  }
}

TEST_CASE("Szego-type constant") {
  SECTION("identity") {
    const Factorization f = factorize_with_bc(Symbol::identity(2));
    REQUIRE(std::abs(e_constant(f, 1e-10) - Complex{1.0, 0.0}) < 1e-12);
  }
  SECTION("closed form for the rational pair") {
    const Factorization f = factorize_with_bc(rational_pair_symbol(0.5, 0.3));
    REQUIRE(std::abs(e_constant(f, 1e-10) - Complex{1.0 / 0.85, 0.0}) < 1e-10);
  }
  SECTION("sweep of products") {
    for (const auto& [alpha, beta] : std::vector<std::pair<double, double>>{
             {0.1, 0.5}, {0.5, 0.3}, {0.9, 0.5}}) {
      const Factorization f = factorize_with_bc(rational_pair_symbol(alpha, beta));
      const Complex expect{1.0 / (1.0 - alpha * beta), 0.0};
      REQUIRE(std::abs(e_constant(f, 1e-10) - expect) < 1e-9 * std::abs(expect));
    }
  }
  SECTION("a corrupted derived pair trips the scalar cross-check") {
    Factorization f = factorize_with_bc(rational_pair_symbol(0.5, 0.3));
    f.b = f.b.scaled(1.05);
    REQUIRE_THROWS_AS(e_constant(f, 1e-10), ScalarCrossCheckFailed);
  }
  SECTION("constant blocks multiply across a conjugated diagonal") {
    const Symbol a = conjugated_diagonal_symbol(
        203, {rational_pair_symbol(0.25, -0.3), rational_pair_symbol(0.2, 0.3)});
    const Factorization f = factorize_with_bc(a);
    const Complex expect{1.0 / ((1.0 + 0.25 * 0.3) * (1.0 - 0.2 * 0.3)), 0.0};
    REQUIRE(std::abs(e_constant(f, 1e-10) - expect) < 1e-9);
  }
}
