#include "morita/modular.hpp"

#include <stdexcept>

namespace morita {

namespace {

double rel(double residual, double scale) { return residual / std::max(1.0, scale); }

bool coeffs_invertible(const Mat& m) {
  if (m.rows() != m.cols() || m.size() == 0) return false;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1) > kRankRelTol * sv(0);
}

}  // namespace

ModularAutomorphism theta_from_quasibasis(const Inclusion& inc, const BimoduleMap& phi,
                                          const QuasiBasis& qb) {
  return theta_from_quasibasis(relative_commutant(inc), phi, qb);
}

ModularAutomorphism theta_from_quasibasis(const StarAlgebra& commutant, const BimoduleMap& phi,
                                          const QuasiBasis& qb) {
  const int N = commutant.ambient_dim();
  Mat coeffs(commutant.dim(), commutant.dim());
  for (int j = 0; j < commutant.dim(); ++j) {
    const Mat& c = commutant.basis()[j];
    Mat acc = Mat::Zero(N, N);
    for (const auto& [u, v] : qb.pairs) acc += u * phi.apply(phi.source.project(c * v));
    if (commutant.membership_residual(acc) > kAlgebraicTol * std::max(1.0, hs_norm(acc))) {
      throw std::runtime_error("theta_from_quasibasis: image leaves the relative commutant");
    }
    coeffs.col(j) = commutant.coords(acc);
  }
  ModularAutomorphism theta{commutant, std::move(coeffs)};

  double mult = 0.0;
  for (const Mat& x : commutant.basis())
    for (const Mat& y : commutant.basis()) {
      Mat lhs = theta.apply(commutant.project(x * y));
      Mat rhs = theta.apply(x) * theta.apply(y);
      mult = std::max(mult, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  double unital = (theta.apply(commutant.unit()) - commutant.unit()).norm();
  if (mult > kAlgebraicTol || unital > kAlgebraicTol || !coeffs_invertible(theta.coeffs)) {
    throw std::runtime_error("theta_from_quasibasis: result is not an automorphism");
  }
  return theta;
}

Report check_modular_condition(const BimoduleMap& phi, const ModularAutomorphism& theta) {
  Report rep{"modular_condition"};
  const StarAlgebra& C = phi.source;
  double worst = 0.0;
  for (const Mat& x : theta.commutant.basis()) {
    Mat tx = theta.apply(x);
    for (const Mat& y : C.basis()) {
      Mat lhs = phi.apply(C.project(x * y));
      Mat rhs = phi.apply(C.project(y * tx));
      worst = std::max(worst, rel((lhs - rhs).norm(), std::max(hs_norm(lhs), hs_norm(rhs))));
    }
  }
  rep.add("modular.condition", worst, kAlgebraicTol, "phi(x y) = phi(y theta(x))");
  return rep;
}

Report solve_modular_uniqueness(const BimoduleMap& phi, const ModularAutomorphism& theta) {
  Report rep{"modular_uniqueness"};
  const StarAlgebra& C = phi.source;
  const StarAlgebra& A = phi.target;
  const StarAlgebra& K = theta.commutant;
  const int m = K.dim(), dC = C.dim(), dA = A.dim();

  // The system decouples per commutant basis element: one shared matrix M
  // with M[(y,a), l] = coords of phi(y K_l).
  Mat M(static_cast<Eigen::Index>(dC) * dA, m);
  for (int l = 0; l < m; ++l) {
    for (int yi = 0; yi < dC; ++yi) {
      M.block(static_cast<Eigen::Index>(yi) * dA, l, dA, 1) =
          A.coords(phi.apply(C.project(C.basis()[yi] * K.basis()[l])));
    }
  }
  int rank = 0;
  {
    Eigen::JacobiSVD<Mat> svd(M);
    const auto& sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > kRankRelTol * sv(0)) ++rank;
  }
  rep.add_flag("modular.rank_audit", rank == m,
               "the modular-condition system pins the automorphism uniquely");

  Mat rhs(static_cast<Eigen::Index>(dC) * dA, m);
  for (int j = 0; j < m; ++j) {
    for (int yi = 0; yi < dC; ++yi) {
      rhs.block(static_cast<Eigen::Index>(yi) * dA, j, dA, 1) =
          A.coords(phi.apply(C.project(K.basis()[j] * C.basis()[yi])));
    }
  }
  auto ls = solve_least_squares(M, rhs);
  rep.add("modular.solve_residual", ls.residual, kAlgebraicTol * std::sqrt(double(m)),
          "the linear solve reproduces the modular condition");
  rep.add("modular.matches_theta", (ls.solution - theta.coeffs).norm(),
          kAlgebraicTol * std::sqrt(double(m)),
          "the solved map coincides with the quasi-basis automorphism");
  return rep;
}

Mat CommutantIso::inverse_apply(const Mat& y) const {
  auto ls = solve_least_squares(coeffs, codomain.coords(y));
  return domain.from_coords(ls.solution.col(0));
}

Report validate_commutant_iso(const CommutantIso& iso, const std::string& label) {
  Report rep{label};
  double mult = 0.0;
  for (const Mat& x : iso.domain.basis())
    for (const Mat& y : iso.domain.basis()) {
      Mat lhs = iso.apply(iso.domain.project(x * y));
      Mat rhs = iso.apply(x) * iso.apply(y);
      mult = std::max(mult, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  rep.add(label + ".multiplicative", mult, kAlgebraicTol, "iso respects products");
  double star = 0.0;
  for (const Mat& x : iso.domain.basis()) {
    star = std::max(star, (iso.apply(x.adjoint()) - iso.apply(x).adjoint().eval()).norm());
  }
  rep.add(label + ".star", star, kAlgebraicTol, "iso respects adjoints");
  rep.add(label + ".unital", (iso.apply(iso.domain.unit()) - iso.codomain.unit()).norm(),
          kAlgebraicTol, "iso maps unit to unit");
  rep.add_flag(label + ".invertible", coeffs_invertible(iso.coeffs),
               "iso coefficient matrix invertible");
  return rep;
}

std::pair<CommutantIso, Report> pi_iso(const CornerRealization& cr) {
  Report rep{"pi"};
  StarAlgebra K = relative_commutant(cr.pair.left);
  StarAlgebra Kc = relative_commutant(Inclusion(cr.corner_B, cr.corner_D));
  rep.add_flag("pi.dimensions", K.dim() == Kc.dim(),
               "relative commutants have equal dimension");

  Mat id_n = Mat::Identity(cr.n, cr.n);
  std::vector<Mat> images;
  Mat coeffs(Kc.dim(), K.dim());
  double member = 0.0;
  for (int j = 0; j < K.dim(); ++j) {
    Mat img = kron(id_n, K.basis()[j]) * cr.p;
    images.push_back(img);
    member = std::max(member, rel(Kc.membership_residual(img), hs_norm(img)));
    coeffs.col(j) = Kc.coords(img);
  }
  rep.add("pi.image_in_corner_commutant", member, kAlgebraicTol,
          "(c (x) I_n) p lies in the corner relative commutant");
  rep.add_flag("pi.commutant_identification",
               MatSpan::from_spanning(Kc.ambient_dim(), Kc.ambient_dim(), images)
                   .same_span(Kc.span()),
               "the corner commutant is (M_n(A)' cap M_n(C)) p");

  CommutantIso pi{K, Kc, std::move(coeffs)};
  rep.merge(validate_commutant_iso(pi, "pi"));

  // Witness-based inverse: block (1,1) of sum a_j w b_j.
  const int P = cr.pair.P();
  double inv_res = 0.0;
  for (int j = 0; j < K.dim(); ++j) {
    Mat w = images[j];
    Mat acc = Mat::Zero(cr.p.rows(), cr.p.cols());
    for (size_t t = 0; t < cr.wit_a.size(); ++t) acc += cr.wit_a[t] * w * cr.wit_b[t];
    Mat recovered = acc.block(0, 0, P, P);
    inv_res = std::max(inv_res, (recovered - K.basis()[j]).norm());
  }
  rep.add("pi.witness_inverse", inv_res, 1e-9,
          "sum a_j (c (x) I_n) p b_j recovers c (x) I_n");
  return {pi, rep};
}

std::pair<CommutantIso, Report> rho_iso(const CornerRealization& cr) {
  Report rep{"rho"};
  StarAlgebra K = relative_commutant(cr.pair.left);
  StarAlgebra Kbd = relative_commutant(cr.pair.right);
  rep.add_flag("rho.dimensions", K.dim() == Kbd.dim(),
               "relative commutants have equal dimension");
  Mat id_n = Mat::Identity(cr.n, cr.n);
  Mat coeffs(Kbd.dim(), K.dim());
  double member = 0.0;
  for (int j = 0; j < K.dim(); ++j) {
    Mat img = cr.psi_D.preimage(kron(id_n, K.basis()[j]) * cr.p);
    member = std::max(member, rel(Kbd.membership_residual(img), hs_norm(img)));
    coeffs.col(j) = Kbd.coords(img);
  }
  rep.add("rho.image_in_commutant", member, kAlgebraicTol,
          "Psi_D^{-1}((c (x) I_n) p) lies in B' cap D");
  CommutantIso rho{K, Kbd, std::move(coeffs)};
  rep.merge(validate_commutant_iso(rho, "rho"));
  return {rho, rep};
}

Report conjugation_check(const CornerRealization& cr, const BimoduleMap& phi,
                         const QuasiBasis& qb) {
  Report rep{"conjugation"};
  BimoduleMap F = F_corner(cr, phi);
  QuasiBasis qbF = transfer_quasi_basis(cr, qb, F);
  rep.merge(verify_quasi_basis(cr.corner_D, F, qbF));

  StarAlgebra K = relative_commutant(cr.pair.left);
  ModularAutomorphism theta = theta_from_quasibasis(K, phi, qb);
  rep.merge(check_modular_condition(phi, theta));

  auto [pi, pi_rep] = pi_iso(cr);
  rep.merge(pi_rep);
  ModularAutomorphism thetaF = theta_from_quasibasis(pi.codomain, F, qbF);
  {
    double worst = 0.0;
    for (const Mat& c : K.basis()) {
      Mat lhs = thetaF.apply(pi.apply(c));
      Mat rhs = pi.apply(theta.apply(c));
      worst = std::max(worst, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
    rep.add("conjugation.corner", worst, kAlgebraicTol,
            "theta for F(phi) = pi o theta o pi^{-1}");
  }

  BimoduleMap f_phi = f_forward(cr.pair, phi);
  QuasiBasis qbf = pull_back_quasi_basis(cr, qbF);
  rep.merge(verify_quasi_basis(cr.pair.right.large, f_phi, qbf));
  auto [rho, rho_rep] = rho_iso(cr);
  rep.merge(rho_rep);
  ModularAutomorphism thetaf = theta_from_quasibasis(rho.codomain, f_phi, qbf);
  rep.merge(check_modular_condition(f_phi, thetaf));
  {
    double worst = 0.0;
    for (const Mat& c : K.basis()) {
      Mat lhs = thetaf.apply(rho.apply(c));
      Mat rhs = rho.apply(theta.apply(c));
      worst = std::max(worst, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
    rep.add("conjugation.transfer", worst, kAlgebraicTol,
            "theta for f(phi) = rho o theta o rho^{-1}");
  }
  return rep;
}

ShiftedMaps shifted_maps(const CornerRealization& cr, const BimoduleMap& phi, const Mat& h) {
  const Inclusion& inc = cr.pair.left;
  StarAlgebra K = relative_commutant(inc);
  if (K.membership_residual(h) > kAlgebraicTol * std::max(1.0, hs_norm(h))) {
    throw std::invalid_argument("shifted_maps: h lies outside the relative commutant");
  }
  const StarAlgebra& C = inc.large;
  const StarAlgebra& A = inc.small;

  BimoduleMap left_shift = BimoduleMap::from_action(
      C, A, [&](const Mat& c) { return phi.apply(C.project(h * c)); });
  BimoduleMap right_shift = BimoduleMap::from_action(
      C, A, [&](const Mat& c) { return phi.apply(C.project(c * h)); });

  ShiftedMaps out{left_shift, right_shift, Report{"shifted"}};
  out.report.add("shift.left_bimodule", bimodule_residual(inc, left_shift), kAlgebraicTol,
                 "c -> phi(h c) is a bimodule map");
  out.report.add("shift.right_bimodule", bimodule_residual(inc, right_shift), kAlgebraicTol,
                 "c -> phi(c h) is a bimodule map");

  Mat pi_h = kron(Mat::Identity(cr.n, cr.n), h) * cr.p;
  BimoduleMap F = F_corner(cr, phi);
  BimoduleMap F_left = F_corner(cr, left_shift);
  BimoduleMap F_right = F_corner(cr, right_shift);
  BimoduleMap F_shift_left = BimoduleMap::from_action(
      cr.corner_D, cr.corner_B,
      [&](const Mat& d) { return F.apply(cr.corner_D.project(pi_h * d)); });
  BimoduleMap F_shift_right = BimoduleMap::from_action(
      cr.corner_D, cr.corner_B,
      [&](const Mat& d) { return F.apply(cr.corner_D.project(d * pi_h)); });
  out.report.add("shift.F_left", rel((F_left.coeffs - F_shift_left.coeffs).norm(),
                                     F_shift_left.coeffs.norm()),
                 kAlgebraicTol, "F(phi_h) equals F(phi) shifted by pi(h)");
  out.report.add("shift.F_right", rel((F_right.coeffs - F_shift_right.coeffs).norm(),
                                      F_shift_right.coeffs.norm()),
                 kAlgebraicTol, "F(h_phi) equals pi(h)-shifted F(phi)");

  BimoduleMap f_phi = f_forward(cr.pair, phi);
  BimoduleMap f_left = f_forward(cr.pair, left_shift);
  BimoduleMap f_right = f_forward(cr.pair, right_shift);
  Mat rho_h = cr.psi_D.preimage(pi_h);
  const StarAlgebra& D = cr.pair.right.large;
  BimoduleMap f_shift_left = BimoduleMap::from_action(
      D, cr.pair.right.small, [&](const Mat& d) { return f_phi.apply(D.project(rho_h * d)); });
  BimoduleMap f_shift_right = BimoduleMap::from_action(
      D, cr.pair.right.small, [&](const Mat& d) { return f_phi.apply(D.project(d * rho_h)); });
  out.report.add("shift.f_left", rel((f_left.coeffs - f_shift_left.coeffs).norm(),
                                     f_shift_left.coeffs.norm()),
                 kAlgebraicTol, "f(phi_h) equals f(phi) shifted by rho(h)");
  out.report.add("shift.f_right", rel((f_right.coeffs - f_shift_right.coeffs).norm(),
                                      f_shift_right.coeffs.norm()),
                 kAlgebraicTol, "f(h_phi) equals rho(h)-shifted f(phi)");
  return out;
}

}  // namespace morita
