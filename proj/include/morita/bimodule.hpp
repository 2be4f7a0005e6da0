#pragma once

#include <cstdint>
#include <vector>

#include "morita/fdca.hpp"
#include "morita/report.hpp"

namespace morita {

// An equivalence pair (X, Y): Y realizes the Morita equivalence of the large
// algebras, X the compatible sub-bimodule for the small ones.  Elements are
// P x Q matrices; inner products are the matrix products y y'* (C-valued)
// and y* y' (D-valued).
struct EquivalencePair {
  Inclusion left;   // A subset C acting from the left, ambient P
  Inclusion right;  // B subset D acting from the right, ambient Q
  MatSpan Y;
  MatSpan X;

  int P() const { return left.large.ambient_dim(); }
  int Q() const { return right.large.ambient_dim(); }
};

// Residual report over every pair invariant: shapes, actions, unit actions,
// inner-product containment, fullness, X inside Y.
Report validate_pair(const EquivalencePair& pair);

// The pair (A, C) over the inclusion itself, actions by multiplication.
EquivalencePair trivial_pair(const Inclusion& inc);

// Remark-style corner pair for a full projection p in M_n(A): the left
// inclusion stays the original A subset C; Y is the first block row of
// (1 (x) e) M_n(C) p, so elements are P x (P n) matrices, and the right
// inclusion is p M_n(A) p subset p M_n(C) p.
EquivalencePair make_corner_pair(const Inclusion& inc, int n, const Mat& p);

// The pair (X (x) M_k, Y (x) M_k) over the amplified inclusions.
EquivalencePair amplify_pair(const EquivalencePair& pair, int k);

enum class FrameSide { left, right };

struct Frame {
  std::vector<Mat> elements;
  FrameSide side = FrameSide::right;
  int size() const { return static_cast<int>(elements.size()); }
};

// Right frame: sum x_i* x_i = 1_B.  Greedy minimal selection, Gram inverse
// square root taken inside B; throws when the Gram is numerically singular.
Frame right_frame(const EquivalencePair& pair);
// Left frame: sum x_i x_i* = 1_A.
Frame left_frame(const EquivalencePair& pair);

double frame_residual(const EquivalencePair& pair, const Frame& frame);

// Linear map between module coordinate spaces.
struct ModuleMap {
  MatSpan source;
  MatSpan target;
  Mat coeffs;  // target.dim x source.dim

  Mat apply(const Mat& x) const { return target.from_coords(coeffs * source.coords(x)); }
  Mat preimage(const Mat& y) const {
    auto ls = solve_least_squares(coeffs, target.coords(y));
    return source.from_coords(ls.solution.col(0));
  }
};

// The corner picture built from a right frame x_1..x_n:
//   p = [x_i x_j*] in M_n(A),     Psi_B(b) = [x_i b x_j*],
//   Psi_D(d) = [x_i d x_j*],      Psi_X(x) = first block row (x x_j*) times p,
// together with witnesses a_j, b_j solving sum a_j p b_j = 1_{M_n(A)}.
struct CornerRealization {
  EquivalencePair pair;
  int n = 0;
  Mat p;  // in M_n(A), ambient P*n
  Mat e;  // kron(e_11, 1_C)
  StarAlgebra amplified_A, amplified_C;  // M_n(A), M_n(C)
  StarAlgebra corner_B, corner_D;        // p M_n(A) p, p M_n(C) p
  BimoduleMap psi_B, psi_D;              // B -> corner_B, D -> corner_D
  ModuleMap psi_X, psi_Y;                // into the first-block-row subspaces
  std::vector<Mat> wit_a, wit_b;
  Frame frame;

  // c in C embedded as the (1,1) block of M_n(C), i.e. kron(e_11, c).
  Mat embed_left(const Mat& c) const;
  // inverse of embed_left: the (1,1) block.
  Mat unembed_left(const Mat& m) const;
};

CornerRealization corner_realization(const EquivalencePair& pair);

// Residual report over the corner invariants (projection, iso residuals,
// witness identity, inner-product compatibility, Psi_D|_B = Psi_B).
Report validate_corner(const CornerRealization& cr);

// Interior tensor product realized as the product span {y w}, {x z}.
// Throws when the middle inclusions do not match.
EquivalencePair tensor_compose(const EquivalencePair& p1, const EquivalencePair& p2);

struct EquivalenceWitness {
  bool equivalent = false;
  ModuleMap map;  // Y -> W when equivalent
  Report detail;
};

// Searches for a bimodule isomorphism Y -> W preserving both inner products
// with Phi(X) = Z.  Deterministic linear-algebra search; false means no
// witness found at tolerance.
EquivalenceWitness is_equivalent(const EquivalencePair& p1, const EquivalencePair& p2,
                                 std::uint64_t seed = 7);

}  // namespace morita
