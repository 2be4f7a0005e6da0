#pragma once

#include <cstdint>
#include <utility>

#include "morita/bimodule.hpp"

namespace morita {

// The intermediate map tau: Y -> X determined by tau(y) x* = phi(y x*).
struct TauMap {
  MatSpan Y;
  MatSpan X;
  Mat coeffs;  // X coords x Y coords
  Mat apply(const Mat& y) const { return X.from_coords(coeffs * Y.coords(y)); }
};

// Solves the defining system by least squares; the system has full column
// rank for a valid pair (nondegenerate A-valued pairing on full X).
// Throws when the residual exceeds tolerance or the system is rank deficient.
TauMap tau_from_phi(const EquivalencePair& pair, const BimoduleMap& phi);

// All six compatibility conditions tying phi, tau and psi together.
Report check_transfer_conditions(const EquivalencePair& pair, const BimoduleMap& phi,
                                 const TauMap& tau, const BimoduleMap& psi);

// The transfer psi = f(phi): D -> B via the frame formula
// psi(d) = sum_i x_i* tau(x_i d).  Output validated as a B-bimodule map and
// against all six conditions; throws on residual failure.
BimoduleMap f_forward(const EquivalencePair& pair, const BimoduleMap& phi);

// Mirror construction D -> B to C -> A; f_inverse(f_forward(phi)) = phi.
BimoduleMap f_inverse(const EquivalencePair& pair, const BimoduleMap& psi);

// F(phi) = (phi (x) id) restricted to the corner p M_n(C) p.
BimoduleMap F_corner(const CornerRealization& cr, const BimoduleMap& phi);

// Psi_B^{-1} o F(phi) o Psi_D; throws when it disagrees with f_forward.
BimoduleMap f_via_corner(const CornerRealization& cr, const BimoduleMap& phi);

// Lower-bound estimate of sup{ |phi(c)| : |c| <= 1 } by unit-ball sampling
// plus projected local ascent.
double map_norm_estimate(const BimoduleMap& phi, int samples = 10000, int restarts = 8,
                         std::uint64_t seed = 11);

// phi (x) id on M_k: amplified source and target algebras, blockwise action.
BimoduleMap amplify_map(const BimoduleMap& phi, int k);

// Identity residual of x psi(d) z* = phi((x d) z*) over all bases, stacked as
// one linear operator; `gap` is its smallest singular value over perturbation
// directions of psi.
struct DefiningIdentity {
  double residual;  // at psi as given
  double gap;       // smallest singular value of the perturbation operator
};
DefiningIdentity defining_identity(const EquivalencePair& pair, const BimoduleMap& phi,
                                   const BimoduleMap& psi);
double defining_identity_residual(const EquivalencePair& pair, const BimoduleMap& phi,
                                  const BimoduleMap& psi);

// Selfadjointness transfer on the basis plus positivity (and k-positivity)
// of f(phi) on sampled positive elements.
Report check_positivity_transfer(const EquivalencePair& pair, const BimoduleMap& phi,
                                 int samples, int k, std::uint64_t seed = 23);

// Largest t with phi(c) >= t c over sampled positive c (per-sample binary
// search, minimum over samples).
double best_positivity_constant(const StarAlgebra& domain, const BimoduleMap& phi,
                                int samples, std::uint64_t seed = 31);

// Pimsner-Popa transfer: derives the certificate for f(phi) from sampled
// positive elements of D; reports s and the certificates at s.
std::pair<double, Report> pimsner_popa_transfer(const EquivalencePair& pair,
                                                const BimoduleMap& phi, int samples = 200,
                                                std::uint64_t seed = 37);

// Both routes of the composition identity over a chain of two pairs.
Report composition_check(const EquivalencePair& p1, const EquivalencePair& p2,
                         const BimoduleMap& phi);

// Transfers through two equivalent pairs agree.
Report invariance_check(const EquivalencePair& p1, const EquivalencePair& p2,
                        const EquivalenceWitness& witness, const BimoduleMap& phi);

}  // namespace morita
