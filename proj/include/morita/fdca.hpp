#pragma once

#include <functional>
#include <vector>

#include "morita/linalg.hpp"

namespace morita {

// Orthonormal (Hilbert-Schmidt) basis of a subspace of rows x cols matrices.
// Coordinates are HS pairings against the basis, so coords() doubles as the
// orthogonal projection onto the span.
class MatSpan {
 public:
  MatSpan() = default;

  // Orthonormalizes a spanning set, dropping directions below the rank
  // threshold.  If the input is already orthonormal it is kept verbatim.
  static MatSpan from_spanning(int rows, int cols, const std::vector<Mat>& spanning,
                               double tol = kRankRelTol);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  const std::vector<Mat>& basis() const { return basis_; }

  CVec coords(const Mat& x) const;
  Mat from_coords(const CVec& c) const;
  Mat project(const Mat& x) const;
  double membership_residual(const Mat& x) const;  // absolute
  bool contains(const Mat& x, double tol = kAlgebraicTol) const;
  bool same_span(const MatSpan& other, double tol = kAlgebraicTol) const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<Mat> basis_;
};

// A unital *-subalgebra of an ambient matrix algebra.  The unit is stored
// explicitly: corner algebras carry a projection, not the ambient identity.
// Construction validates closure under product and adjoint and the unit law.
class StarAlgebra {
 public:
  StarAlgebra() = default;

  // Smallest unital *-closed subalgebra containing gens (unit = ambient identity).
  static StarAlgebra from_generators(int ambient_dim, const std::vector<Mat>& gens);

  // Orthonormalizes a spanning set with the given unit and validates.
  static StarAlgebra from_span(const std::vector<Mat>& spanning, const Mat& unit);

  int ambient_dim() const { return span_.rows(); }
  int dim() const { return span_.dim(); }
  const std::vector<Mat>& basis() const { return span_.basis(); }
  const Mat& unit() const { return unit_; }
  const MatSpan& span() const { return span_; }

  CVec coords(const Mat& x) const { return span_.coords(x); }
  Mat from_coords(const CVec& c) const { return span_.from_coords(c); }
  Mat project(const Mat& x) const { return span_.project(x); }
  double membership_residual(const Mat& x) const { return span_.membership_residual(x); }
  bool contains(const Mat& x, double tol = kAlgebraicTol) const { return span_.contains(x, tol); }

 private:
  MatSpan span_;
  Mat unit_;
};

// true iff x is Hermitian within tolerance with min eigenvalue >= -1e-9*|x|.
// Throws std::invalid_argument when x lies outside the algebra span.
bool is_positive(const StarAlgebra& alg, const Mat& x);

// A pair A subset C of algebras on the same ambient space with equal units.
struct Inclusion {
  StarAlgebra small;  // A
  StarAlgebra large;  // C
  Inclusion() = default;
  Inclusion(StarAlgebra a, StarAlgebra c);  // validates containment and units
};

// M_n(alg) inside ambient dimension ambient_dim * n; basis {a_i (x) e_kl}.
// Elements a (x) m are realized as kron(m, a).
StarAlgebra matrix_amplification(const StarAlgebra& alg, int n);

// Basis of {c in C : ca = ac for all a in A}, as a unital *-subalgebra of C.
StarAlgebra relative_commutant(const Inclusion& inc);

// {u in the ambient matrix algebra : ua = au for all a}, unit = ambient identity.
StarAlgebra ambient_commutant(const StarAlgebra& alg);

// A linear map between algebra coordinate spaces, stored as a coefficient
// matrix over the HS-orthonormal bases.  Used for phi, psi, conditional
// expectations and the corner isomorphisms alike.
struct BimoduleMap {
  StarAlgebra source;
  StarAlgebra target;
  Mat coeffs;  // target.dim() x source.dim()

  Mat apply(const Mat& x) const { return target.from_coords(coeffs * source.coords(x)); }
  // Solves coeffs * c = target coords, minimum norm.
  Mat preimage(const Mat& y) const;

  static BimoduleMap identity(const StarAlgebra& alg);
  static BimoduleMap zero(const StarAlgebra& source, const StarAlgebra& target);
  static BimoduleMap from_action(const StarAlgebra& source, const StarAlgebra& target,
                                 const std::function<Mat(const Mat&)>& action);
};

// Max residual of phi(a c a') = a phi(c) a' over basis triples, relative to
// operand scale.  phi must map inc.large into inc.small.
double bimodule_residual(const Inclusion& inc, const BimoduleMap& phi);

// Residual of phi(a) = a over the basis of inc.small.
double fixes_small_residual(const Inclusion& inc, const BimoduleMap& phi);

// Residual of phi(c*) = phi(c)* over the basis of the source.
double selfadjoint_residual(const BimoduleMap& phi);

// Hilbert-Schmidt orthogonal projection of C onto A.  Validated as a
// trace-compatible conditional expectation: fixes A, bimodule property,
// positivity on sampled c*c, trace preservation.  Throws on residual failure.
BimoduleMap trace_conditional_expectation(const Inclusion& inc);

}  // namespace morita
