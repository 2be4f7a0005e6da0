#include "morita/suites.hpp"

#include <random>
#include <stdexcept>

namespace morita {

namespace {

double rel(double residual, double scale) { return residual / std::max(1.0, scale); }

// Scales every tolerance in a report by tol / kAlgebraicTol.
void rescale(Report& rep, double tol) {
  if (tol == kAlgebraicTol) return;
  const double factor = tol / kAlgebraicTol;
  for (auto& e : rep.entries) {
    e.tolerance *= factor;
    e.pass = e.residual <= e.tolerance;
  }
}

bool is_ce(const Bundle& bundle) {
  return fixes_small_residual(bundle.inclusion, bundle.phi) <= kAlgebraicTol &&
         selfadjoint_residual(bundle.phi) <= kAlgebraicTol;
}

// Second corner pair over the right inclusion of `pair`, for chains: the
// projection concentrates B in the first amplification slot.
EquivalencePair chain_partner(const EquivalencePair& pair) {
  const Inclusion& inc = pair.right;
  Mat slot = Mat::Zero(2, 2);
  slot(0, 0) = 1.0;
  return make_corner_pair(inc, 2, kron(slot, inc.small.unit()));
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"construction", "corner", "properties", "quasibasis", "modular", "composition"};
}

Report suite_construction(const Bundle& bundle, const SuiteOptions& opt) {
  Report rep{"construction"};
  rep.merge(validate_pair(bundle.pair));
  rep.add("construction.phi_bimodule", bimodule_residual(bundle.inclusion, bundle.phi),
          kAlgebraicTol, "phi is an A-bimodule map");

  TauMap tau = tau_from_phi(bundle.pair, bundle.phi);
  BimoduleMap psi = f_forward(bundle.pair, bundle.phi);
  rep.merge(check_transfer_conditions(bundle.pair, bundle.phi, tau, psi));

  DefiningIdentity di = defining_identity(bundle.pair, bundle.phi, psi);
  rep.add("construction.defining_identity", di.residual, kAlgebraicTol,
          "x f(phi)(d) z* = phi((x d) z*)");
  rep.add_flag("construction.pairing_gap", di.gap > 2e-3,
               "perturbations of f(phi) are visible in the defining identity");
  {
    std::mt19937_64 rng(opt.seed ^ 0xabcd);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat delta(psi.coeffs.rows(), psi.coeffs.cols());
    for (Eigen::Index i = 0; i < delta.rows(); ++i)
      for (Eigen::Index j = 0; j < delta.cols(); ++j) delta(i, j) = cplx(gauss(rng), gauss(rng));
    delta /= delta.norm();
    for (double eps : {1e-3, 1e-6}) {
      BimoduleMap perturbed = psi;
      perturbed.coeffs += eps * delta;
      double res = defining_identity_residual(bundle.pair, bundle.phi, perturbed);
      bool grown = res >= 0.5 * eps * di.gap;
      rep.add_flag("construction.perturbation_eps" + std::to_string(eps), grown,
                   "perturbing f(phi) raises the defining residual");
    }
  }

  BimoduleMap back = f_inverse(bundle.pair, psi);
  rep.add("construction.round_trip", (back.coeffs - bundle.phi.coeffs).norm(), kAlgebraicTol,
          "f_inverse(f_forward(phi)) = phi");

  // Linearity at the coefficient level against a second map.
  {
    BimoduleMap phi2 = random_bimodule_map(bundle.inclusion, opt.seed + 5);
    BimoduleMap combo =
        BimoduleMap{bundle.phi.source, bundle.phi.target,
                    Mat(cplx(0.75, 0.0) * bundle.phi.coeffs + cplx(-0.5, 0.25) * phi2.coeffs)};
    BimoduleMap lhs = f_forward(bundle.pair, combo);
    BimoduleMap rhs1 = f_forward(bundle.pair, phi2);
    Mat rhs = cplx(0.75, 0.0) * psi.coeffs + cplx(-0.5, 0.25) * rhs1.coeffs;
    rep.add("construction.linearity", (lhs.coeffs - rhs).norm(), kAlgebraicTol,
            "f is linear in phi");
  }
  rescale(rep, opt.tol);
  return rep;
}

Report suite_corner(const Bundle& bundle, const SuiteOptions& opt) {
  Report rep{"corner"};
  CornerRealization cr = corner_realization(bundle.pair);
  rep.merge(validate_corner(cr));

  BimoduleMap F = F_corner(cr, bundle.phi);
  if (is_ce(bundle)) {
    rep.add("corner.F_fixes_p", (F.apply(cr.p) - cr.p).norm(), kAlgebraicTol,
            "F(phi) fixes p when phi is a conditional expectation");
  }

  // Inner-product identity for F on random corner elements.
  {
    std::mt19937_64 rng(opt.seed ^ 0x51);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto sample = [&](const StarAlgebra& alg) {
      CVec v(alg.dim());
      for (int i = 0; i < alg.dim(); ++i) v(i) = cplx(gauss(rng), gauss(rng));
      return alg.from_coords(v);
    };
    double worst = 0.0;
    const int P = bundle.pair.P();
    for (int s = 0; s < 8; ++s) {
      Mat x = sample(cr.amplified_A), z = sample(cr.amplified_A), c = sample(cr.amplified_C);
      Mat xe = cr.e * x * cr.p;
      Mat ze = cr.e * z * cr.p;
      Mat pcp = cr.p * c * cr.p;
      Mat lhs_amb = xe * F.apply(cr.corner_D.project(pcp)) * ze.adjoint();
      Mat lhs = lhs_amb.block(0, 0, P, P);
      Mat rhs_arg = (xe * pcp * ze.adjoint()).block(0, 0, P, P);
      Mat rhs = bundle.phi.apply(bundle.pair.left.large.project(rhs_arg));
      worst = std::max(worst, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
    rep.add("corner.pairing_identity", worst, kAlgebraicTol,
            "<(1(x)e)xp . F(phi)(pcp), (1(x)e)zp> = phi(<(1(x)e)xp . pcp, (1(x)e)zp>)");
  }

  BimoduleMap via = f_via_corner(cr, bundle.phi);
  BimoduleMap direct = f_forward(bundle.pair, bundle.phi);
  rep.add("corner.route_agreement", (via.coeffs - direct.coeffs).norm(), kAlgebraicTol,
          "corner route agrees with the frame route");
  rescale(rep, opt.tol);
  return rep;
}

Report suite_properties(const Bundle& bundle, const SuiteOptions& opt) {
  Report rep{"properties"};
  BimoduleMap psi = f_forward(bundle.pair, bundle.phi);

  // Selfadjoint transfer for the symmetrized map.
  {
    BimoduleMap sym = BimoduleMap::from_action(
        bundle.phi.source, bundle.phi.target, [&](const Mat& c) {
          return Mat(0.5 * (bundle.phi.apply(c) +
                            bundle.phi.apply(c.adjoint()).adjoint().eval()));
        });
    BimoduleMap fsym = f_forward(bundle.pair, sym);
    rep.add("properties.selfadjoint_transfer", selfadjoint_residual(fsym), kAlgebraicTol,
            "selfadjoint phi transfers to selfadjoint f(phi)");
  }

  if (is_ce(bundle)) {
    rep.merge(check_positivity_transfer(bundle.pair, bundle.phi, opt.samples, 2, opt.seed));
    rep.add("properties.ce_fixes_B", fixes_small_residual(bundle.pair.right, psi), kAlgebraicTol,
            "f(phi) restricts to the identity on B");
    rep.add("properties.ce_unital", (psi.apply(bundle.pair.right.large.unit()) -
                                     bundle.pair.right.small.unit())
                                        .norm(),
            kAlgebraicTol, "f(phi) is unital");
    rep.add("properties.ce_bimodule", bimodule_residual(bundle.pair.right, psi), kAlgebraicTol,
            "f(phi) is a B-bimodule map");
    auto [s, pp_rep] = pimsner_popa_transfer(bundle.pair, bundle.phi, opt.samples, opt.seed);
    rep.merge(pp_rep);
    rep.add_flag("properties.pp_constant", s >= 1e-3, "transferred constant stays bounded away from zero");
  }

  // Amplification identity at k = 2.
  {
    EquivalencePair amp_pair = amplify_pair(bundle.pair, 2);
    BimoduleMap amp_phi = amplify_map(bundle.phi, 2);
    BimoduleMap lhs = f_forward(amp_pair, amp_phi);
    BimoduleMap rhs = amplify_map(psi, 2);
    // Align: both live on M_2(D) -> M_2(B) but with independently built bases.
    double worst = 0.0;
    for (const Mat& d : lhs.source.basis()) {
      Mat l = lhs.apply(d);
      Mat r = rhs.target.project(rhs.apply(rhs.source.project(d)));
      worst = std::max(worst, rel((l - r).norm(), hs_norm(r)));
    }
    rep.add("properties.amplification", worst, kAlgebraicTol,
            "transfer commutes with amplification at k = 2");
  }

  // Sampled norm agreement (both estimates are lower bounds of equal sups).
  {
    double n1 = map_norm_estimate(bundle.phi, opt.samples * 10, 6, opt.seed);
    double n2 = map_norm_estimate(psi, opt.samples * 10, 6, opt.seed + 1);
    double scale = std::max({n1, n2, 1e-9});
    rep.add("properties.norm_agreement", std::abs(n1 - n2) / scale, 1e-2,
            "sampled norms of phi and f(phi) agree");
  }
  rescale(rep, opt.tol);
  return rep;
}

Report suite_quasibasis(const Bundle& bundle, const SuiteOptions& opt) {
  Report rep{"quasibasis"};
  if (!bundle.qb) {
    rep.add_flag("quasibasis.skipped", true, "map carries no quasi-basis");
    return rep;
  }
  rep.merge(verify_quasi_basis(bundle.pair.left.large, bundle.phi, *bundle.qb));

  if (is_ce(bundle)) {
    Mat index = watatani_index(*bundle.qb);
    double lower = min_eig_hermitian(
        (Mat(index + index.adjoint().eval()) / 2.0).eval());
    rep.add_flag("quasibasis.index_lower_bound", lower >= 1.0 - kAlgebraicTol,
                 "index of a conditional expectation dominates the unit");
    // Independence of the spanning set.
    std::mt19937_64 rng(opt.seed ^ 0x77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const StarAlgebra& C = bundle.pair.left.large;
    std::vector<Mat> alt;
    Mat mix = Mat::Zero(C.dim(), C.dim());
    for (int i = 0; i < C.dim(); ++i)
      for (int j = 0; j < C.dim(); ++j) mix(i, j) = cplx(gauss(rng), gauss(rng));
    mix += 2.0 * C.dim() * Mat::Identity(C.dim(), C.dim());
    for (int j = 0; j < C.dim(); ++j) alt.push_back(C.from_coords(mix.col(j)));
    QuasiBasis qb2 = construct_for_ce(bundle.inclusion, bundle.phi, alt);
    rep.add("quasibasis.index_independence",
            (watatani_index(*bundle.qb) - watatani_index(qb2)).norm(), kAlgebraicTol,
            "the index does not depend on the quasi-basis");
  }

  CornerRealization cr = corner_realization(bundle.pair);
  BimoduleMap F = F_corner(cr, bundle.phi);
  QuasiBasis transferred = transfer_quasi_basis(cr, *bundle.qb, F);
  rep.merge(verify_quasi_basis(cr.corner_D, F, transferred));
  BimoduleMap psi = f_forward(bundle.pair, bundle.phi);
  QuasiBasis pulled = pull_back_quasi_basis(cr, transferred);
  rep.merge(verify_quasi_basis(bundle.pair.right.large, psi, pulled));
  rescale(rep, opt.tol);
  return rep;
}

Report suite_modular(const Bundle& bundle, const SuiteOptions& opt) {
  Report rep{"modular"};
  if (!bundle.qb) {
    rep.add_flag("modular.skipped", true, "map carries no quasi-basis");
    return rep;
  }
  StarAlgebra K = relative_commutant(bundle.inclusion);
  ModularAutomorphism theta = theta_from_quasibasis(K, bundle.phi, *bundle.qb);
  rep.merge(check_modular_condition(bundle.phi, theta));
  rep.merge(solve_modular_uniqueness(bundle.phi, theta));

  CornerRealization cr = corner_realization(bundle.pair);
  rep.merge(conjugation_check(cr, bundle.phi, *bundle.qb));

  Mat h = random_commutant_positive(bundle.inclusion, opt.seed + 3);
  ShiftedMaps shifts = shifted_maps(cr, bundle.phi, h);
  rep.merge(shifts.report);
  rescale(rep, opt.tol);
  return rep;
}

Report suite_composition(const Bundle& bundle, const SuiteOptions& opt) {
  Report rep{"composition"};
  // Unit law: composing with the trivial pair of the right inclusion.
  {
    EquivalencePair unit_pair = trivial_pair(bundle.pair.right);
    EquivalencePair composed = tensor_compose(bundle.pair, unit_pair);
    rep.add_flag("composition.unit_law_span",
                 composed.Y.same_span(bundle.pair.Y) && composed.X.same_span(bundle.pair.X),
                 "tensoring with the trivial pair preserves the spans");
    Report comp = composition_check(bundle.pair, unit_pair, bundle.phi);
    rep.merge(comp);
  }
  // Chain of two corner pairs.
  {
    EquivalencePair second = chain_partner(bundle.pair);
    Report comp = composition_check(bundle.pair, second, bundle.phi);
    for (auto& e : comp.entries) e.check += "_chain";
    rep.merge(comp);
  }
  // Invariance under a unitary twist commuting with the right algebras.
  {
    const int Q = bundle.pair.Q();
    StarAlgebra comm = ambient_commutant(bundle.pair.right.large);
    std::mt19937_64 rng(opt.seed ^ 0x99);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CVec v(comm.dim());
    for (int i = 0; i < comm.dim(); ++i) v(i) = cplx(gauss(rng), gauss(rng));
    Mat g = comm.from_coords(v);
    Mat h = (g + g.adjoint().eval()) / 2.0;
    h /= std::max(1.0, operator_norm(h));
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    Eigen::VectorXcd phase(es.eigenvalues().size());
    for (Eigen::Index k = 0; k < phase.size(); ++k)
      phase(k) = std::exp(cplx(0.0, es.eigenvalues()(k)));
    Mat u = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();

    EquivalencePair twisted = bundle.pair;
    std::vector<Mat> ty, tx;
    for (const Mat& y : bundle.pair.Y.basis()) ty.push_back(y * u.adjoint());
    for (const Mat& x : bundle.pair.X.basis()) tx.push_back(x * u.adjoint());
    twisted.Y = MatSpan::from_spanning(bundle.pair.P(), Q, ty);
    twisted.X = MatSpan::from_spanning(bundle.pair.P(), Q, tx);
    rep.add_flag("composition.twist_valid", validate_pair(twisted).pass(),
                 "the unitary twist is again an equivalence pair");
    EquivalenceWitness witness = is_equivalent(bundle.pair, twisted, opt.seed);
    rep.add_flag("composition.twist_witness", witness.equivalent,
                 "the twist admits an equivalence witness");
    Report inv = invariance_check(bundle.pair, twisted, witness, bundle.phi);
    rep.merge(inv);
  }
  rescale(rep, opt.tol);
  return rep;
}

Report run_suite(const std::string& name, const Bundle& bundle, const SuiteOptions& opt) {
  if (name == "construction") return suite_construction(bundle, opt);
  if (name == "corner") return suite_corner(bundle, opt);
  if (name == "properties") return suite_properties(bundle, opt);
  if (name == "quasibasis") return suite_quasibasis(bundle, opt);
  if (name == "modular") return suite_modular(bundle, opt);
  if (name == "composition") return suite_composition(bundle, opt);
  throw std::invalid_argument("unknown suite: " + name);
}

Report run_suites(const std::vector<std::string>& names, const Bundle& bundle,
                  const SuiteOptions& opt) {
  Report rep{bundle.name};
  for (const auto& name : names) rep.merge(run_suite(name, bundle, opt));
  rep.sort_by_name();
  return rep;
}

}  // namespace morita
