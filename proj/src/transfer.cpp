#include "morita/transfer.hpp"

#include <random>
#include <stdexcept>

namespace morita {

namespace {

double rel(double residual, double scale) { return residual / std::max(1.0, scale); }

// Applies phi blockwise to an (n P) x (n P) matrix over C.
Mat apply_blockwise(const BimoduleMap& phi, const Mat& m, int P) {
  const int n = static_cast<int>(m.rows()) / P;
  const int T = phi.target.ambient_dim();
  Mat out = Mat::Zero(static_cast<Eigen::Index>(n) * T, static_cast<Eigen::Index>(n) * T);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.block(i * T, j * T, T, T) = phi.apply(m.block(i * P, j * P, P, P));
  return out;
}

CVec random_coords(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  CVec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = cplx(gauss(rng), gauss(rng));
  return v;
}

}  // namespace

TauMap tau_from_phi(const EquivalencePair& pair, const BimoduleMap& phi) {
  if (bimodule_residual(pair.left, phi) > kAlgebraicTol) {
    throw std::invalid_argument("tau_from_phi: phi fails bimodule validation");
  }
  const int P = pair.P();
  const int dx = pair.X.dim(), dy = pair.Y.dim();
  // System rows: for each x in X basis, the P x P entries of tau(y) x*.
  Mat system(static_cast<Eigen::Index>(dx) * P * P, dx);
  for (int i = 0; i < dx; ++i) {
    const Mat& x = pair.X.basis()[i];
    for (int k = 0; k < dx; ++k) {
      system.block(static_cast<Eigen::Index>(i) * P * P, k, P * P, 1) =
          flatten(pair.X.basis()[k] * x.adjoint());
    }
  }
  {
    Eigen::JacobiSVD<Mat> svd(system);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= kRankRelTol * sv(0)) {
      throw std::runtime_error("tau_from_phi: pairing system is rank deficient (pair not full)");
    }
  }
  Mat rhs(static_cast<Eigen::Index>(dx) * P * P, dy);
  for (int j = 0; j < dy; ++j) {
    const Mat& y = pair.Y.basis()[j];
    for (int i = 0; i < dx; ++i) {
      const Mat& x = pair.X.basis()[i];
      rhs.block(static_cast<Eigen::Index>(i) * P * P, j, P * P, 1) =
          flatten(phi.apply(pair.left.large.project(y * x.adjoint())));
    }
  }
  auto ls = solve_least_squares(system, rhs);
  const double scale = std::max(1.0, operator_norm(phi.coeffs));
  if (ls.residual > kAlgebraicTol * scale * std::sqrt(static_cast<double>(dy))) {
    throw std::runtime_error("tau_from_phi: defining identity residual above tolerance");
  }
  return TauMap{pair.Y, pair.X, ls.solution};
}

Report check_transfer_conditions(const EquivalencePair& pair, const BimoduleMap& phi,
                                 const TauMap& tau, const BimoduleMap& psi) {
  Report rep{"transfer_conditions"};
  const auto& A = pair.left.small;
  const auto& C = pair.left.large;
  const auto& B = pair.right.small;
  const auto& D = pair.right.large;

  double r1 = 0.0;
  for (const Mat& c : C.basis())
    for (const Mat& x : pair.X.basis()) {
      Mat lhs = tau.apply(c * x);
      Mat rhs = phi.apply(c) * x;
      r1 = std::max(r1, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  rep.add("transfer.cond1", r1, kAlgebraicTol, "tau(c x) = phi(c) x");

  double r2 = 0.0;
  for (const Mat& a : A.basis())
    for (const Mat& y : pair.Y.basis()) {
      Mat lhs = tau.apply(a * y);
      Mat rhs = a * tau.apply(y);
      r2 = std::max(r2, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  rep.add("transfer.cond2", r2, kAlgebraicTol, "tau(a y) = a tau(y)");

  double r3 = 0.0;
  for (const Mat& y : pair.Y.basis())
    for (const Mat& x : pair.X.basis()) {
      Mat lhs = tau.apply(y) * x.adjoint();
      Mat rhs = phi.apply(C.project(y * x.adjoint()));
      r3 = std::max(r3, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  rep.add("transfer.cond3", r3, kAlgebraicTol, "tau(y) x* = phi(y x*)");

  double r4 = 0.0;
  for (const Mat& x : pair.X.basis())
    for (const Mat& d : D.basis()) {
      Mat lhs = tau.apply(x * d);
      Mat rhs = x * psi.apply(d);
      r4 = std::max(r4, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  rep.add("transfer.cond4", r4, kAlgebraicTol, "tau(x d) = x psi(d)");

  double r5 = 0.0;
  for (const Mat& y : pair.Y.basis())
    for (const Mat& b : B.basis()) {
      Mat lhs = tau.apply(y * b);
      Mat rhs = tau.apply(y) * b;
      r5 = std::max(r5, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  rep.add("transfer.cond5", r5, kAlgebraicTol, "tau(y b) = tau(y) b");

  double r6 = 0.0;
  for (const Mat& x : pair.X.basis())
    for (const Mat& y : pair.Y.basis()) {
      Mat lhs = psi.apply(D.project(x.adjoint() * y));
      Mat rhs = x.adjoint() * tau.apply(y);
      r6 = std::max(r6, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  rep.add("transfer.cond6", r6, kAlgebraicTol, "psi(<x,y>_D) = <x, tau(y)>_B");
  return rep;
}

BimoduleMap f_forward(const EquivalencePair& pair, const BimoduleMap& phi) {
  TauMap tau = tau_from_phi(pair, phi);
  Frame frame = right_frame(pair);
  const auto& B = pair.right.small;
  const auto& D = pair.right.large;
  Mat coeffs(B.dim(), D.dim());
  double membership = 0.0;
  for (int j = 0; j < D.dim(); ++j) {
    const Mat& d = D.basis()[j];
    Mat acc = Mat::Zero(pair.Q(), pair.Q());
    for (const Mat& x : frame.elements) acc += x.adjoint() * tau.apply(x * d);
    membership = std::max(membership, rel(B.membership_residual(acc), hs_norm(acc)));
    coeffs.col(j) = B.coords(acc);
  }
  BimoduleMap psi{D, B, std::move(coeffs)};
  if (membership > kAlgebraicTol) {
    throw std::runtime_error("f_forward: image leaves the target algebra");
  }
  if (bimodule_residual(pair.right, psi) > kAlgebraicTol) {
    throw std::runtime_error("f_forward: output fails bimodule validation");
  }
  Report rep = check_transfer_conditions(pair, phi, tau, psi);
  if (!rep.pass()) {
    throw std::runtime_error("f_forward: a compatibility condition exceeded tolerance");
  }
  return psi;
}

BimoduleMap f_inverse(const EquivalencePair& pair, const BimoduleMap& psi) {
  if (bimodule_residual(pair.right, psi) > kAlgebraicTol) {
    throw std::invalid_argument("f_inverse: psi fails bimodule validation");
  }
  const int Q = pair.Q();
  const int dx = pair.X.dim(), dy = pair.Y.dim();
  // Mirror system: x* tau(y) = psi(x* y) for all x.
  Mat system(static_cast<Eigen::Index>(dx) * Q * Q, dx);
  for (int i = 0; i < dx; ++i) {
    const Mat& x = pair.X.basis()[i];
    for (int k = 0; k < dx; ++k) {
      system.block(static_cast<Eigen::Index>(i) * Q * Q, k, Q * Q, 1) =
          flatten(x.adjoint() * pair.X.basis()[k]);
    }
  }
  {
    Eigen::JacobiSVD<Mat> svd(system);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= kRankRelTol * sv(0)) {
      throw std::runtime_error("f_inverse: pairing system is rank deficient (pair not full)");
    }
  }
  Mat rhs(static_cast<Eigen::Index>(dx) * Q * Q, dy);
  for (int j = 0; j < dy; ++j) {
    const Mat& y = pair.Y.basis()[j];
    for (int i = 0; i < dx; ++i) {
      const Mat& x = pair.X.basis()[i];
      rhs.block(static_cast<Eigen::Index>(i) * Q * Q, j, Q * Q, 1) =
          flatten(psi.apply(pair.right.large.project(x.adjoint() * y)));
    }
  }
  auto ls = solve_least_squares(system, rhs);
  const double scale = std::max(1.0, operator_norm(psi.coeffs));
  if (ls.residual > kAlgebraicTol * scale * std::sqrt(static_cast<double>(dy))) {
    throw std::runtime_error("f_inverse: defining identity residual above tolerance");
  }
  TauMap tau{pair.Y, pair.X, ls.solution};

  Frame frame = left_frame(pair);
  const auto& A = pair.left.small;
  const auto& C = pair.left.large;
  Mat coeffs(A.dim(), C.dim());
  double membership = 0.0;
  for (int j = 0; j < C.dim(); ++j) {
    const Mat& c = C.basis()[j];
    Mat acc = Mat::Zero(pair.P(), pair.P());
    for (const Mat& x : frame.elements) acc += tau.apply(c * x) * x.adjoint();
    membership = std::max(membership, rel(A.membership_residual(acc), hs_norm(acc)));
    coeffs.col(j) = A.coords(acc);
  }
  BimoduleMap phi{C, A, std::move(coeffs)};
  if (membership > kAlgebraicTol) {
    throw std::runtime_error("f_inverse: image leaves the target algebra");
  }
  if (bimodule_residual(pair.left, phi) > kAlgebraicTol) {
    throw std::runtime_error("f_inverse: output fails bimodule validation");
  }
  Report rep = check_transfer_conditions(pair, phi, tau, psi);
  if (!rep.pass()) {
    throw std::runtime_error("f_inverse: a compatibility condition exceeded tolerance");
  }
  return phi;
}

BimoduleMap F_corner(const CornerRealization& cr, const BimoduleMap& phi) {
  if (bimodule_residual(cr.pair.left, phi) > kAlgebraicTol) {
    throw std::invalid_argument("F_corner: phi fails bimodule validation");
  }
  const int P = cr.pair.P();
  Mat coeffs(cr.corner_B.dim(), cr.corner_D.dim());
  double containment = 0.0;
  for (int j = 0; j < cr.corner_D.dim(); ++j) {
    Mat img = apply_blockwise(phi, cr.corner_D.basis()[j], P);
    containment = std::max(containment, rel(cr.corner_B.membership_residual(img), hs_norm(img)));
    coeffs.col(j) = cr.corner_B.coords(img);
  }
  if (containment > kAlgebraicTol) {
    throw std::runtime_error("F_corner: image leaves the corner p M_n(A) p");
  }
  return BimoduleMap{cr.corner_D, cr.corner_B, std::move(coeffs)};
}

BimoduleMap f_via_corner(const CornerRealization& cr, const BimoduleMap& phi) {
  BimoduleMap F = F_corner(cr, phi);
  // Psi_B^{-1} o F o Psi_D at the coefficient level.
  Mat rhs = F.coeffs * cr.psi_D.coeffs;
  auto ls = solve_least_squares(cr.psi_B.coeffs, rhs);
  BimoduleMap psi{cr.pair.right.large, cr.pair.right.small, ls.solution};
  BimoduleMap direct = f_forward(cr.pair, phi);
  double diff = (psi.coeffs - direct.coeffs).norm();
  if (diff > kAlgebraicTol * std::max(1.0, direct.coeffs.norm())) {
    throw std::runtime_error("f_via_corner: corner route disagrees with the frame route");
  }
  return psi;
}

double map_norm_estimate(const BimoduleMap& phi, int samples, int restarts,
                         std::uint64_t seed) {
  const int dim = phi.source.dim();
  if (dim == 0 || phi.coeffs.norm() == 0.0) return 0.0;
  std::mt19937_64 rng(seed);
  auto value_of = [&](const CVec& coords) {
    Mat c = phi.source.from_coords(coords);
    double nc = operator_norm(c);
    if (nc < 1e-14) return std::pair<double, Mat>(0.0, std::move(c));
    c /= nc;
    return std::pair<double, Mat>(operator_norm(phi.apply(c)), std::move(c));
  };
  double best = 0.0;
  CVec best_coords = CVec::Zero(dim);
  for (int s = 0; s < samples; ++s) {
    CVec v = random_coords(rng, dim);
    auto [val, c] = value_of(v);
    if (val > best) {
      best = val;
      best_coords = v;
    }
  }
  for (int r = 0; r < restarts; ++r) {
    CVec base = (r == 0) ? best_coords : random_coords(rng, dim);
    double base_val = value_of(base).first;
    double step = 0.5;
    while (step > 1e-7) {
      bool improved = false;
      for (int t = 0; t < 24; ++t) {
        CVec cand = base + step * random_coords(rng, dim);
        double val = value_of(cand).first;
        if (val > base_val) {
          base = cand;
          base_val = val;
          improved = true;
        }
      }
      if (!improved) step *= 0.5;
    }
    best = std::max(best, base_val);
  }
  return best;
}

BimoduleMap amplify_map(const BimoduleMap& phi, int k) {
  if (k < 1) throw std::invalid_argument("amplify_map: k must be positive");
  if (k == 1) return phi;
  StarAlgebra source = matrix_amplification(phi.source, k);
  StarAlgebra target = matrix_amplification(phi.target, k);
  const int P = phi.source.ambient_dim();
  return BimoduleMap::from_action(source, target,
                                  [&](const Mat& m) { return apply_blockwise(phi, m, P); });
}

namespace {

// Stacks the defining identity x psi(d) z* = phi((x d) z*) into one linear
// operator on vec(psi coefficients).
struct IdentityOperator {
  Mat op;   // rows x (dimB * dimD)
  CVec rhs;
};

IdentityOperator build_identity_operator(const EquivalencePair& pair, const BimoduleMap& phi) {
  const auto& B = pair.right.small;
  const auto& D = pair.right.large;
  const int P = pair.P();
  const int dx = pair.X.dim(), dB = B.dim(), dD = D.dim();
  const Eigen::Index rows =
      static_cast<Eigen::Index>(dx) * dx * dD * P * P;
  IdentityOperator out;
  out.op = Mat::Zero(rows, static_cast<Eigen::Index>(dB) * dD);
  out.rhs = CVec::Zero(rows);
  Eigen::Index at = 0;
  for (int i = 0; i < dx; ++i) {
    const Mat& x = pair.X.basis()[i];
    for (int j = 0; j < dx; ++j) {
      const Mat& z = pair.X.basis()[j];
      for (int k = 0; k < dD; ++k) {
        const Mat& d = D.basis()[k];
        for (int beta = 0; beta < dB; ++beta) {
          out.op.block(at, static_cast<Eigen::Index>(k) * dB + beta, P * P, 1) =
              flatten(x * B.basis()[beta] * z.adjoint());
        }
        out.rhs.segment(at, P * P) =
            flatten(phi.apply(pair.left.large.project((x * d) * z.adjoint())));
        at += P * P;
      }
    }
  }
  return out;
}

CVec vec_by_source(const Mat& coeffs) {
  // column-major by source index: entry (beta, k) at k*dB + beta.
  CVec v(coeffs.size());
  Eigen::Index at = 0;
  for (Eigen::Index k = 0; k < coeffs.cols(); ++k)
    for (Eigen::Index beta = 0; beta < coeffs.rows(); ++beta) v(at++) = coeffs(beta, k);
  return v;
}

}  // namespace

double defining_identity_residual(const EquivalencePair& pair, const BimoduleMap& phi,
                                  const BimoduleMap& psi) {
  IdentityOperator io = build_identity_operator(pair, phi);
  return (io.op * vec_by_source(psi.coeffs) - io.rhs).norm();
}

DefiningIdentity defining_identity(const EquivalencePair& pair, const BimoduleMap& phi,
                                   const BimoduleMap& psi) {
  IdentityOperator io = build_identity_operator(pair, phi);
  DefiningIdentity out;
  out.residual = (io.op * vec_by_source(psi.coeffs) - io.rhs).norm();
  Eigen::JacobiSVD<Mat> svd(io.op);
  const auto& sv = svd.singularValues();
  out.gap = sv(sv.size() - 1);
  return out;
}

Report check_positivity_transfer(const EquivalencePair& pair, const BimoduleMap& phi,
                                 int samples, int k, std::uint64_t seed) {
  Report rep{"positivity_transfer"};
  BimoduleMap psi = f_forward(pair, phi);
  std::mt19937_64 rng(seed);

  // Sampled positivity certificate for phi itself.
  double phi_pos = 0.0;
  for (int s = 0; s < std::max(8, samples / 8); ++s) {
    Mat c = phi.source.from_coords(random_coords(rng, phi.source.dim()));
    Mat pos = c.adjoint() * c;
    Mat img = phi.apply(phi.source.project(pos));
    double me = min_eig_hermitian((img + img.adjoint().eval()) / 2.0);
    phi_pos = std::max(phi_pos, rel(std::max(0.0, -me), hs_norm(pos)));
  }
  rep.add("positivity.phi_certificate", phi_pos, kAlgebraicTol,
          "phi maps sampled positives to positives");

  if (selfadjoint_residual(phi) <= kAlgebraicTol) {
    rep.add("positivity.selfadjoint_transfer", selfadjoint_residual(psi), kAlgebraicTol,
            "f(phi)(d*) = f(phi)(d)* on the basis");
  }

  double worst = 0.0;
  const auto& D = pair.right.large;
  for (int s = 0; s < samples; ++s) {
    Mat z = D.from_coords(random_coords(rng, D.dim()));
    Mat d = D.project(z.adjoint() * z);
    Mat img = psi.apply(d);
    double me = min_eig_hermitian((img + img.adjoint().eval()) / 2.0);
    worst = std::max(worst, rel(std::max(0.0, -me), hs_norm(d)));
  }
  rep.add("positivity.transfer_samples", worst, kAlgebraicTol,
          "f(phi) maps sampled positives to positives");

  if (k > 1) {
    BimoduleMap amp = amplify_map(psi, k);
    double worst_k = 0.0;
    for (int s = 0; s < samples; ++s) {
      Mat z = amp.source.from_coords(random_coords(rng, amp.source.dim()));
      Mat d = amp.source.project(z.adjoint() * z);
      Mat img = amp.apply(d);
      double me = min_eig_hermitian((img + img.adjoint().eval()) / 2.0);
      worst_k = std::max(worst_k, rel(std::max(0.0, -me), hs_norm(d)));
    }
    rep.add("positivity.k_positive_samples", worst_k, kAlgebraicTol,
            "f(phi) (x) id maps sampled positives of the amplification to positives");
  }
  return rep;
}

namespace {

// Largest t with img >= t * base for one PSD pair, by bisection on the
// minimum eigenvalue; tol_slack absorbs roundoff on singular directions.
double pair_constant(const Mat& img, const Mat& base, double hi) {
  const double slack = kAlgebraicTol * std::max(1.0, hs_norm(base));
  auto ok = [&](double t) {
    Mat m = img - t * base;
    return min_eig_hermitian((m + m.adjoint().eval()) / 2.0) >= -slack;
  };
  if (!ok(0.0)) return 0.0;
  double lo = 0.0;
  if (ok(hi)) return hi;
  for (int it = 0; it < 60; ++it) {
    double mid = (lo + hi) / 2.0;
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

double best_positivity_constant(const StarAlgebra& domain, const BimoduleMap& phi,
                                int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double best = 2.0;
  auto account = [&](const Mat& pos) {
    Mat d = domain.project(pos);
    if (hs_norm(d) < 1e-12) return;
    Mat img = phi.apply(d);
    best = std::min(best, pair_constant(img, d, best));
  };
  // Random squares, plus spectral projections of random Hermitians: the
  // binding direction is usually a singular positive element.
  for (int s = 0; s < samples; ++s) {
    Mat z = domain.from_coords(random_coords(rng, domain.dim()));
    account(z.adjoint() * z);
    Mat h = (z + z.adjoint().eval()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const auto& ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      Mat v = es.eigenvectors().col(i);
      account(v * v.adjoint());
    }
  }
  return best;
}

std::pair<double, Report> pimsner_popa_transfer(const EquivalencePair& pair,
                                                const BimoduleMap& phi, int samples,
                                                std::uint64_t seed) {
  Report rep{"pimsner_popa"};
  double t = best_positivity_constant(pair.left.large, phi, samples, seed);
  rep.add_flag("pp.source_constant_positive", t > 0.0,
               "a positive t with phi(c) >= t c exists on samples");
  BimoduleMap psi = f_forward(pair, phi);
  double s = best_positivity_constant(pair.right.large, psi, samples, seed ^ 0x9e3779b9u);
  rep.add_flag("pp.transfer_constant_positive", s > 0.0,
               "a positive s with f(phi)(d) >= s d exists on samples");

  std::mt19937_64 rng(seed + 1);
  const auto& D = pair.right.large;
  double cert = 0.0;
  for (int k = 0; k < samples; ++k) {
    Mat z = D.from_coords(random_coords(rng, D.dim()));
    Mat d = D.project(z.adjoint() * z);
    Mat m = psi.apply(d) - s * d;
    double me = min_eig_hermitian((m + m.adjoint().eval()) / 2.0);
    cert = std::max(cert, rel(std::max(0.0, -me), hs_norm(d)));
  }
  rep.add("pp.certificates", cert, kAlgebraicTol, "f(phi)(d) - s d stays PSD on samples");
  if (s <= 0.0) {
    throw std::runtime_error("pimsner_popa_transfer: no positive s found at tolerance");
  }
  return {s, rep};
}

Report composition_check(const EquivalencePair& p1, const EquivalencePair& p2,
                         const BimoduleMap& phi) {
  Report rep{"composition"};
  EquivalencePair composed = tensor_compose(p1, p2);
  BimoduleMap through = f_forward(p2, f_forward(p1, phi));
  BimoduleMap direct = f_forward(composed, phi);
  double diff = (through.coeffs - direct.coeffs).norm();
  rep.add("composition.identity", rel(diff, direct.coeffs.norm()), kAlgebraicTol,
          "transfer through the tensor pair equals the composite of transfers");
  return rep;
}

Report invariance_check(const EquivalencePair& p1, const EquivalencePair& p2,
                        const EquivalenceWitness& witness, const BimoduleMap& phi) {
  Report rep{"invariance"};
  rep.add_flag("invariance.witness", witness.equivalent, "pairs are equivalent");
  if (!witness.equivalent) return rep;
  BimoduleMap f1 = f_forward(p1, phi);
  BimoduleMap f2 = f_forward(p2, phi);
  double diff = (f1.coeffs - f2.coeffs).norm();
  rep.add("invariance.identity", rel(diff, f1.coeffs.norm()), kAlgebraicTol,
          "equivalent pairs induce the same transfer");
  return rep;
}

}  // namespace morita
