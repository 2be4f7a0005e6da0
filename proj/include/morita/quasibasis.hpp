#pragma once

#include <vector>

#include "morita/bimodule.hpp"

namespace morita {

// A finite family {(u_i, v_i)} certifying index-finiteness of a map phi:
// c = sum u_i phi(v_i c) = sum phi(c u_i) v_i for every c in the domain.
struct QuasiBasis {
  std::vector<std::pair<Mat, Mat>> pairs;
  int size() const { return static_cast<int>(pairs.size()); }
};

// Residuals of both reconstruction identities over the domain basis,
// relative to the element norm.
Report verify_quasi_basis(const StarAlgebra& domain, const BimoduleMap& phi,
                          const QuasiBasis& qb);

// Gram-operator construction for a faithful conditional expectation:
// T(x) = sum_k g_k E(g_k* x) over a spanning set, u_k = T^{-1/2}(g_k),
// pairs (u_k, u_k*).  Throws when T is numerically singular or the result
// fails verification.
QuasiBasis construct_for_ce(const Inclusion& inc, const BimoduleMap& E);
QuasiBasis construct_for_ce(const Inclusion& inc, const BimoduleMap& E,
                            const std::vector<Mat>& spanning);

// sum u_i v_i.
Mat watatani_index(const QuasiBasis& qb);

// For invertible h in the relative commutant: a quasi-basis for c -> phi(h c)
// is {(u_i, h^{-1} v_i)}, and for c -> phi(c h) it is {(u_i h^{-1}, v_i)}.
QuasiBasis shift_quasi_basis_left(const QuasiBasis& qb, const Mat& h_inverse);
QuasiBasis shift_quasi_basis_right(const QuasiBasis& qb, const Mat& h_inverse);

// The corner family {(p (u_i (x) I_n) a_j p, p b_j (v_i (x) I_n) p)} built
// from the fullness witnesses; verified against F_phi, throws on failure.
QuasiBasis transfer_quasi_basis(const CornerRealization& cr, const QuasiBasis& qb,
                                const BimoduleMap& F_phi);

// Entrywise Psi_D preimage of a corner quasi-basis: a quasi-basis for f(phi).
QuasiBasis pull_back_quasi_basis(const CornerRealization& cr, const QuasiBasis& corner_qb);

}  // namespace morita
