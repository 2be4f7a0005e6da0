#include "morita/quasibasis.hpp"

#include <stdexcept>

namespace morita {

namespace {

double rel(double residual, double scale) { return residual / std::max(1.0, scale); }

}  // namespace

Report verify_quasi_basis(const StarAlgebra& domain, const BimoduleMap& phi,
                          const QuasiBasis& qb) {
  Report rep{"quasibasis"};
  double member = 0.0;
  for (const auto& [u, v] : qb.pairs) {
    member = std::max(member, rel(domain.membership_residual(u), hs_norm(u)));
    member = std::max(member, rel(domain.membership_residual(v), hs_norm(v)));
  }
  rep.add("quasibasis.membership", member, kAlgebraicTol, "u_i, v_i lie in the domain");

  const int N = domain.ambient_dim();
  double left = 0.0, right = 0.0;
  for (const Mat& c : domain.basis()) {
    Mat acc_l = Mat::Zero(N, N);
    Mat acc_r = Mat::Zero(N, N);
    for (const auto& [u, v] : qb.pairs) {
      acc_l += u * phi.apply(domain.project(v * c));
      acc_r += phi.apply(domain.project(c * u)) * v;
    }
    left = std::max(left, (acc_l - c).norm() / std::max(1.0, hs_norm(c)));
    right = std::max(right, (acc_r - c).norm() / std::max(1.0, hs_norm(c)));
  }
  rep.add("quasibasis.left_identity", left, kAlgebraicTol, "c = sum u_i phi(v_i c)");
  rep.add("quasibasis.right_identity", right, kAlgebraicTol, "c = sum phi(c u_i) v_i");
  return rep;
}

QuasiBasis construct_for_ce(const Inclusion& inc, const BimoduleMap& E) {
  return construct_for_ce(inc, E, inc.large.basis());
}

QuasiBasis construct_for_ce(const Inclusion& inc, const BimoduleMap& E,
                            const std::vector<Mat>& spanning) {
  const StarAlgebra& C = inc.large;
  const int dC = C.dim();
  // Gram operator on C coordinates.
  Mat T = Mat::Zero(dC, dC);
  for (int j = 0; j < dC; ++j) {
    const Mat& cj = C.basis()[j];
    Mat acc = Mat::Zero(C.ambient_dim(), C.ambient_dim());
    for (const Mat& g : spanning) acc += g * E.apply(C.project(g.adjoint() * cj));
    T.col(j) = C.coords(acc);
  }
  if ((T - T.adjoint().eval()).norm() > 1e-8 * std::max(1.0, T.norm())) {
    throw std::runtime_error("construct_for_ce: Gram operator is not Hermitian");
  }
  {
    Eigen::SelfAdjointEigenSolver<Mat> es((T + T.adjoint().eval()) / 2.0, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev(0) <= ev(ev.size() - 1) / kConditionLimit) {
      throw std::runtime_error("construct_for_ce: Gram operator numerically singular");
    }
  }
  Mat T_inv_sqrt = psd_inv_sqrt(T);
  QuasiBasis qb;
  for (const Mat& g : spanning) {
    Mat u = C.from_coords(T_inv_sqrt * C.coords(g));
    qb.pairs.emplace_back(u, u.adjoint());
  }
  Report rep = verify_quasi_basis(C, E, qb);
  if (!rep.pass()) {
    throw std::runtime_error("construct_for_ce: constructed family failed verification");
  }
  return qb;
}

Mat watatani_index(const QuasiBasis& qb) {
  if (qb.pairs.empty()) throw std::invalid_argument("watatani_index: empty quasi-basis");
  Mat acc = Mat::Zero(qb.pairs.front().first.rows(), qb.pairs.front().first.cols());
  for (const auto& [u, v] : qb.pairs) acc += u * v;
  return acc;
}

QuasiBasis shift_quasi_basis_left(const QuasiBasis& qb, const Mat& h_inverse) {
  QuasiBasis out;
  for (const auto& [u, v] : qb.pairs) out.pairs.emplace_back(u, Mat(h_inverse * v));
  return out;
}

QuasiBasis shift_quasi_basis_right(const QuasiBasis& qb, const Mat& h_inverse) {
  QuasiBasis out;
  for (const auto& [u, v] : qb.pairs) out.pairs.emplace_back(Mat(u * h_inverse), v);
  return out;
}

QuasiBasis transfer_quasi_basis(const CornerRealization& cr, const QuasiBasis& qb,
                                const BimoduleMap& F_phi) {
  const int n = cr.n;
  Mat id_n = Mat::Identity(n, n);
  QuasiBasis out;
  for (const auto& [u, v] : qb.pairs) {
    Mat u_amp = kron(id_n, u);
    Mat v_amp = kron(id_n, v);
    for (size_t j = 0; j < cr.wit_a.size(); ++j) {
      out.pairs.emplace_back(Mat(cr.p * u_amp * cr.wit_a[j] * cr.p),
                             Mat(cr.p * cr.wit_b[j] * v_amp * cr.p));
    }
  }
  Report rep = verify_quasi_basis(cr.corner_D, F_phi, out);
  if (!rep.pass()) {
    throw std::runtime_error("transfer_quasi_basis: corner family failed verification");
  }
  return out;
}

QuasiBasis pull_back_quasi_basis(const CornerRealization& cr, const QuasiBasis& corner_qb) {
  QuasiBasis out;
  for (const auto& [u, v] : corner_qb.pairs) {
    out.pairs.emplace_back(cr.psi_D.preimage(u), cr.psi_D.preimage(v));
  }
  return out;
}

}  // namespace morita
