#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "whdet/symbol.hpp"

namespace whdet {

/// Scalar index window lo <= k < hi on the integers. The realized matrix has
/// dimension (hi - lo) * N for block size N.
struct WindowSpec {
  long lo = 0;
  long hi = 0;
  long count() const { return hi - lo; }
};

/// Symbolic composition of multiplication operators, coordinate projections,
/// the flip, sums, products, and scalar multiples. Realizable as a dense
/// matrix on any index window.
class OperatorExpr {
 public:
  enum class Kind { Identity, Multiply, Proj, Flip, Scale, Sum, Product };
  // Projections: NonNegative = k >= 0, Negative = k < 0, Tail(n) = k >= n,
  // Below(n) = k < n, Leading(n) = 0 <= k < n, Interval(lo,hi) = lo <= k < hi.
  enum class ProjKind { NonNegative, Negative, Tail, Below, Leading, Interval };

  OperatorExpr() : n_(std::make_shared<Node>()) {}

  static OperatorExpr identity(int block = 0) {
    Node n;
    n.kind = Kind::Identity;
    n.block = block;
    return OperatorExpr(std::move(n));
  }
  static OperatorExpr multiply_by(Symbol a) {
    Node n;
    n.kind = Kind::Multiply;
    n.block = a.block_size();
    n.symbol = std::move(a);
    return OperatorExpr(std::move(n));
  }
  static OperatorExpr proj_nonnegative(int block = 0) { return proj(ProjKind::NonNegative, 0, 0, block); }
  static OperatorExpr proj_negative(int block = 0) { return proj(ProjKind::Negative, 0, 0, block); }
  static OperatorExpr proj_tail(long n, int block = 0) { return proj(ProjKind::Tail, n, 0, block); }
  static OperatorExpr proj_below(long n, int block = 0) { return proj(ProjKind::Below, n, 0, block); }
  static OperatorExpr proj_leading(long n, int block = 0) { return proj(ProjKind::Leading, n, 0, block); }
  static OperatorExpr proj_interval(long lo, long hi, int block = 0) { return proj(ProjKind::Interval, lo, hi, block); }
  static OperatorExpr flip(int block = 0) {
    Node n;
    n.kind = Kind::Flip;
    n.block = block;
    return OperatorExpr(std::move(n));
  }
  static OperatorExpr scaled(Complex s, OperatorExpr e) {
    Node n;
    n.kind = Kind::Scale;
    n.factor = s;
    n.kids.push_back(std::move(e));
    return OperatorExpr(std::move(n));
  }
  static OperatorExpr sum(std::vector<OperatorExpr> kids) {
    Node n;
    n.kind = Kind::Sum;
    n.kids = std::move(kids);
    return OperatorExpr(std::move(n));
  }
  static OperatorExpr product(std::vector<OperatorExpr> kids) {
    Node n;
    n.kind = Kind::Product;
    n.kids = std::move(kids);
    return OperatorExpr(std::move(n));
  }

  Kind kind() const { return n_->kind; }

  /// Common block size of the expression (1 when nothing constrains it).
  int block_size() const {
    int b = 0;
    resolve_block(*n_, b);
    return b == 0 ? 1 : b;
  }

  /// Index anchors of the projections in the tree, always including 0.
  /// Everything "interesting" in a realized section happens within a
  /// decay length of [first, second].
  std::pair<long, long> anchors() const {
    long lo = 0, hi = 0;
    collect_anchors(*n_, lo, hi);
    return {lo, hi};
  }

  /// Largest effective half-width (at the given magnitude) over all symbols.
  long effective_halfwidth(double tol) const {
    long h = 1;
    collect_halfwidth(*n_, tol, h);
    return h;
  }

  bool has_flip() const { return contains_flip(*n_); }

  /// Dense matrix of the expression on the window. Products are formed as
  /// matrix products on this window; see realize_section for the interior
  /// extraction that keeps composition truncation out of the result.
  CMatrix realize(const WindowSpec& w) const {
    const int nb = block_size();
    return realize_node(*n_, w, nb);
  }

 private:
  struct Node {
    Kind kind = Kind::Identity;
    int block = 0;  // 0 = unconstrained
    Symbol symbol{1};
    ProjKind pk = ProjKind::NonNegative;
    long a = 0, b = 0;
    Complex factor{1.0, 0.0};
    std::vector<OperatorExpr> kids;
  };

  explicit OperatorExpr(Node n) : n_(std::make_shared<Node>(std::move(n))) {}

  static OperatorExpr proj(ProjKind pk, long a, long b, int block) {
    Node n;
    n.kind = Kind::Proj;
    n.pk = pk;
    n.a = a;
    n.b = b;
    n.block = block;
    return OperatorExpr(std::move(n));
  }

  static void resolve_block(const Node& n, int& b) {
    if (n.block != 0) {
      if (b != 0 && b != n.block)
        throw BlockSizeMismatch("operator expression mixes block sizes");
      b = n.block;
    }
    for (const auto& k : n.kids) resolve_block(*k.n_, b);
  }

  static void collect_anchors(const Node& n, long& lo, long& hi) {
    if (n.kind == Kind::Proj) {
      switch (n.pk) {
        case ProjKind::NonNegative:
        case ProjKind::Negative:
          break;
        case ProjKind::Tail:
        case ProjKind::Below:
          lo = std::min(lo, n.a);
          hi = std::max(hi, n.a);
          break;
        case ProjKind::Leading:
          lo = std::min(lo, n.a);
          hi = std::max(hi, n.a);
          break;
        case ProjKind::Interval:
          lo = std::min(lo, n.a);
          hi = std::max(hi, n.b);
          break;
      }
    }
    for (const auto& k : n.kids) collect_anchors(*k.n_, lo, hi);
  }

  static void collect_halfwidth(const Node& n, double tol, long& h) {
    if (n.kind == Kind::Multiply) h = std::max(h, n.symbol.effective_halfwidth(tol));
    for (const auto& k : n.kids) collect_halfwidth(*k.n_, tol, h);
  }

  static bool contains_flip(const Node& n) {
    if (n.kind == Kind::Flip) return true;
    for (const auto& k : n.kids)
      if (contains_flip(*k.n_)) return true;
    return false;
  }

  // --- realization -------------------------------------------------------

  static bool proj_keeps(const Node& n, long k) {
    switch (n.pk) {
      case ProjKind::NonNegative: return k >= 0;
      case ProjKind::Negative: return k < 0;
      case ProjKind::Tail: return k >= n.a;
      case ProjKind::Below: return k < n.a;
      case ProjKind::Leading: return k >= 0 && k < n.a;
      case ProjKind::Interval: return k >= n.a && k < n.b;
    }
    return false;
  }

  static void require_flip_window(const WindowSpec& w) {
    if (w.lo != -w.hi)
      throw WindowNotFlipSymmetric("flip needs a window symmetric about -1/2");
  }

  // Row index (scalar) of the flip image: k -> -k-1, as positions in w.
  static long flip_position(const WindowSpec& w, long pos) {
    const long k = w.lo + pos;
    return (-k - 1) - w.lo;
  }

  static CMatrix realize_node(const Node& n, const WindowSpec& w, int nb) {
    const long d = w.count() * nb;
    switch (n.kind) {
      case Kind::Identity:
        return CMatrix::Identity(d, d);
      case Kind::Multiply:
        return laurent_block(n.symbol, w);
      case Kind::Proj: {
        CMatrix m = CMatrix::Zero(d, d);
        for (long p = 0; p < w.count(); ++p)
          if (proj_keeps(n, w.lo + p))
            m.block(p * nb, p * nb, nb, nb).setIdentity();
        return m;
      }
      case Kind::Flip: {
        require_flip_window(w);
        CMatrix m = CMatrix::Zero(d, d);
        for (long p = 0; p < w.count(); ++p) {
          const long q = flip_position(w, p);
          m.block(q * nb, p * nb, nb, nb).setIdentity();
        }
        return m;
      }
      case Kind::Scale:
        return n.factor * realize_node(*n.kids[0].n_, w, nb);
      case Kind::Sum: {
        CMatrix m = CMatrix::Zero(d, d);
        for (const auto& k : n.kids) m += realize_node(*k.n_, w, nb);
        return m;
      }
      case Kind::Product:
        return realize_product(n, w, nb);
    }
    return CMatrix::Zero(d, d);
  }

  // Product fold. Projections and flips are applied as index masks and
  // permutations in O(d^2); only genuinely dense factors cost a GEMM.
  static CMatrix realize_product(const Node& n, const WindowSpec& w, int nb) {
    const long cnt = w.count();
    const long d = cnt * nb;
    // Pending prefix D * J^e (diagonal over scalar indices, optional flip),
    // maintained until the first dense factor shows up.
    std::vector<Complex> diag(static_cast<std::size_t>(cnt), Complex{1.0, 0.0});
    bool flip_pending = false;
    std::optional<CMatrix> acc;
    Complex scalar{1.0, 0.0};

    auto apply_diag_right = [&](const Node& p) {
      if (acc) {
        for (long q = 0; q < cnt; ++q)
          if (!proj_keeps(p, w.lo + q)) acc->middleCols(q * nb, nb).setZero();
      } else {
        // (D J^e) P = (D * (J^e P J^-e)) J^e ; conjugating a diagonal by the
        // flip re-indexes it by k -> -k-1.
        for (long q = 0; q < cnt; ++q) {
          const long src = flip_pending ? flip_position(w, q) : q;
          if (!proj_keeps(p, w.lo + src)) diag[static_cast<std::size_t>(q)] = 0.0;
        }
      }
    };
    auto apply_flip_right = [&]() {
      require_flip_window(w);
      if (acc) {
        CMatrix out(d, d);
        for (long q = 0; q < cnt; ++q)
          out.middleCols(q * nb, nb) = acc->middleCols(flip_position(w, q) * nb, nb);
        *acc = std::move(out);
      } else {
        flip_pending = !flip_pending;
      }
    };
    auto apply_dense_right = [&](const CMatrix& m) {
      if (acc) {
        *acc = (*acc) * m;
      } else {
        CMatrix out(d, d);
        for (long q = 0; q < cnt; ++q) {
          const long src = flip_pending ? flip_position(w, q) : q;
          out.middleRows(q * nb, nb) =
              diag[static_cast<std::size_t>(q)] * m.middleRows(src * nb, nb);
        }
        acc = std::move(out);
      }
    };

    // Recursive walk so Scale nodes can wrap any factor kind.
    auto apply_factor = [&](auto&& self, const Node& f) -> void {
      switch (f.kind) {
        case Kind::Identity:
          return;
        case Kind::Scale:
          scalar *= f.factor;
          self(self, *f.kids[0].n_);
          return;
        case Kind::Proj:
          apply_diag_right(f);
          return;
        case Kind::Flip:
          apply_flip_right();
          return;
        default:
          apply_dense_right(realize_node(f, w, nb));
          return;
      }
    };
    for (const auto& kid : n.kids) apply_factor(apply_factor, *kid.n_);

    if (!acc) {
      if (flip_pending) require_flip_window(w);
      CMatrix m = CMatrix::Zero(d, d);
      for (long q = 0; q < cnt; ++q) {
        const long col = flip_pending ? flip_position(w, q) : q;
        m.block(q * nb, col * nb, nb, nb) =
            diag[static_cast<std::size_t>(q)] * CMatrix::Identity(nb, nb);
      }
      acc = std::move(m);
    }
    if (scalar != Complex{1.0, 0.0}) *acc *= scalar;
    return *acc;
  }

  /// Section of the bi-infinite matrix (a_{j-k}) on the window.
  static CMatrix laurent_block(const Symbol& a, const WindowSpec& w) {
    const int nb = a.block_size();
    const long cnt = w.count();
    CMatrix m = CMatrix::Zero(cnt * nb, cnt * nb);
    if (a.is_zero()) return m;
    for (long dgl = a.k_min(); dgl <= a.k_max(); ++dgl) {
      const CMatrix& blk = a.stored(dgl);
      // fill blocks (j, j - dgl) for all j with both indices in the window
      const long j_from = std::max(w.lo, w.lo + dgl);
      const long j_to = std::min(w.hi, w.hi + dgl);  // exclusive
      for (long j = j_from; j < j_to; ++j) {
        const long row = j - w.lo;
        const long col = j - dgl - w.lo;
        m.block(row * nb, col * nb, nb, nb) = blk;
      }
    }
    return m;
  }

  std::shared_ptr<const Node> n_;

  friend CMatrix laurent_section(const Symbol& a, const WindowSpec& w);
};

/// Section of L(a) = (a_{j-k}) on an explicit window.
inline CMatrix laurent_section(const Symbol& a, const WindowSpec& w) {
  return OperatorExpr::laurent_block(a, w);
}

/// Finite block Toeplitz section (a_{j-k}), j,k = 0..n-1.
inline CMatrix toeplitz_finite(const Symbol& a, long n) {
  if (n < 1) throw WindowTooSmall("Toeplitz section needs n >= 1");
  return laurent_section(a, WindowSpec{0, n});
}

/// Finite block Hankel section: (a_{j+k+1}) by default, (a_{-j-k-1}) when
/// reflected (the Hankel matrix of the reflected symbol).
inline CMatrix hankel_finite(const Symbol& a, long rows, long cols,
                             bool reflected = false) {
  if (rows < 1 || cols < 1) throw WindowTooSmall("Hankel section needs rows, cols >= 1");
  const int nb = a.block_size();
  CMatrix m = CMatrix::Zero(rows * nb, cols * nb);
  for (long j = 0; j < rows; ++j) {
    for (long k = 0; k < cols; ++k) {
      const long idx = reflected ? (-j - k - 1) : (j + k + 1);
      if (a.in_support(idx)) m.block(j * nb, k * nb, nb, nb) = a.stored(idx);
    }
  }
  return m;
}

/// Realize on an enlarged window and keep the interior core block. Matrix
/// products on a window truncate the inner summation index at the window
/// edges; the extracted core entries agree with the bi-infinite composition
/// up to tails of length `margin`, which the caller grows until stable.
inline CMatrix realize_section(const OperatorExpr& e, const WindowSpec& core,
                               long margin) {
  WindowSpec ext{core.lo - margin, core.hi + margin};
  if (e.has_flip()) {
    const long h = std::max(std::labs(ext.lo), std::labs(ext.hi));
    ext = WindowSpec{-h, h};
  }
  const int nb = e.block_size();
  const CMatrix full = e.realize(ext);
  const long off = (core.lo - ext.lo) * nb;
  const long d = core.count() * nb;
  return full.block(off, off, d, d);
}

}  // namespace whdet
