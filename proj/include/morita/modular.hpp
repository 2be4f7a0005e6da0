#pragma once

#include <tuple>

#include "morita/quasibasis.hpp"
#include "morita/transfer.hpp"

namespace morita {

// An automorphism of the relative commutant A' cap C, stored on commutant
// coordinates.  Modular automorphisms are multiplicative and unital but in
// general not *-preserving.
struct ModularAutomorphism {
  StarAlgebra commutant;
  Mat coeffs;
  Mat apply(const Mat& x) const { return commutant.from_coords(coeffs * commutant.coords(x)); }
};

// theta(c) = sum_i u_i phi(c v_i) on the relative commutant; validated as a
// unital multiplicative bijection whose image stays in the commutant.
ModularAutomorphism theta_from_quasibasis(const Inclusion& inc, const BimoduleMap& phi,
                                          const QuasiBasis& qb);
ModularAutomorphism theta_from_quasibasis(const StarAlgebra& commutant, const BimoduleMap& phi,
                                          const QuasiBasis& qb);

// Residual of phi(x y) = phi(y theta(x)) over commutant x basis and domain y basis.
Report check_modular_condition(const BimoduleMap& phi, const ModularAutomorphism& theta);

// Solves phi(x y) = phi(y L(x)) for an unknown linear L on the commutant and
// audits that the solution space is the single point theta.
Report solve_modular_uniqueness(const BimoduleMap& phi, const ModularAutomorphism& theta);

// A linear isomorphism between relative commutants.
struct CommutantIso {
  StarAlgebra domain;
  StarAlgebra codomain;
  Mat coeffs;
  Mat apply(const Mat& x) const { return codomain.from_coords(coeffs * domain.coords(x)); }
  Mat inverse_apply(const Mat& y) const;
};

// Residuals of multiplicativity, adjoints, unit and invertibility for a
// commutant isomorphism.
Report validate_commutant_iso(const CommutantIso& iso, const std::string& label);

// pi(c) = (c (x) I_n) p from A' cap C onto the corner commutant, with the
// witness-based inverse; also verifies the corner-commutant identification.
std::pair<CommutantIso, Report> pi_iso(const CornerRealization& cr);

// rho = Psi_D^{-1} o pi from A' cap C onto B' cap D.
std::pair<CommutantIso, Report> rho_iso(const CornerRealization& cr);

// Conjugation identities: theta for F(phi) equals pi theta pi^{-1}, and
// theta for f(phi) equals rho theta rho^{-1}, both computed from transferred
// quasi-bases.
Report conjugation_check(const CornerRealization& cr, const BimoduleMap& phi,
                         const QuasiBasis& qb);

// Shifted maps phi_h(c) = phi(h c) and h_phi(c) = phi(c h) for h in the
// commutant, with the four transfer identities through F and f.
struct ShiftedMaps {
  BimoduleMap left_shift;   // phi_h
  BimoduleMap right_shift;  // h_phi
  Report report;
};
ShiftedMaps shifted_maps(const CornerRealization& cr, const BimoduleMap& phi, const Mat& h);

}  // namespace morita
