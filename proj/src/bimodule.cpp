#include "morita/bimodule.hpp"

#include <random>
#include <stdexcept>

namespace morita {

namespace {

double rel(double residual, double scale) { return residual / std::max(1.0, scale); }

Mat block(const Mat& m, int i, int j, int P) { return m.block(i * P, j * P, P, P); }

// n x n block matrix with P x P blocks.
Mat assemble_blocks(int n, int P, const std::function<Mat(int, int)>& fn) {
  Mat out = Mat::Zero(static_cast<Eigen::Index>(n) * P, static_cast<Eigen::Index>(n) * P);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.block(i * P, j * P, P, P) = fn(i, j);
  return out;
}

Mat matrix_unit(int n, int i, int j) {
  Mat e = Mat::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

bool same_inclusion(const Inclusion& a, const Inclusion& b, double tol) {
  return a.large.ambient_dim() == b.large.ambient_dim() &&
         (a.large.unit() - b.large.unit()).norm() <= tol &&
         (a.small.unit() - b.small.unit()).norm() <= tol &&
         a.small.span().same_span(b.small.span(), tol) &&
         a.large.span().same_span(b.large.span(), tol);
}

}  // namespace

// --- validation ---

Report validate_pair(const EquivalencePair& pair) {
  Report rep{"pair"};
  const auto& A = pair.left.small;
  const auto& C = pair.left.large;
  const auto& B = pair.right.small;
  const auto& D = pair.right.large;
  const int P = pair.P(), Q = pair.Q();

  bool shapes = pair.Y.rows() == P && pair.Y.cols() == Q && pair.X.rows() == P &&
                pair.X.cols() == Q && pair.Y.dim() > 0 && pair.X.dim() > 0;
  rep.add_flag("pair.shapes", shapes, "ambient shape consistency");
  if (!shapes) return rep;

  double unit_act = 0.0;
  for (const Mat& y : pair.Y.basis()) {
    unit_act = std::max(unit_act, (C.unit() * y - y).norm());
    unit_act = std::max(unit_act, (y * D.unit() - y).norm());
  }
  rep.add("pair.unit_action", unit_act, kAlgebraicTol, "units act as identity on Y");

  double x_in_y = 0.0;
  for (const Mat& x : pair.X.basis()) x_in_y = std::max(x_in_y, pair.Y.membership_residual(x));
  rep.add("pair.X_inside_Y", x_in_y, kAlgebraicTol, "X spans a subspace of Y");

  double act = 0.0;
  for (const Mat& c : C.basis())
    for (const Mat& y : pair.Y.basis())
      act = std::max(act, rel(pair.Y.membership_residual(c * y), hs_norm(c * y)));
  for (const Mat& d : D.basis())
    for (const Mat& y : pair.Y.basis())
      act = std::max(act, rel(pair.Y.membership_residual(y * d), hs_norm(y * d)));
  rep.add("pair.action_Y", act, kAlgebraicTol, "C.Y.D stays in Y");

  double actx = 0.0;
  for (const Mat& a : A.basis())
    for (const Mat& x : pair.X.basis())
      actx = std::max(actx, rel(pair.X.membership_residual(a * x), hs_norm(a * x)));
  for (const Mat& b : B.basis())
    for (const Mat& x : pair.X.basis())
      actx = std::max(actx, rel(pair.X.membership_residual(x * b), hs_norm(x * b)));
  rep.add("pair.action_X", actx, kAlgebraicTol, "A.X.B stays in X");

  double ip = 0.0;
  std::vector<Mat> prods_C, prods_D, prods_A, prods_B;
  for (const Mat& y : pair.Y.basis())
    for (const Mat& y2 : pair.Y.basis()) {
      Mat lc = y * y2.adjoint();
      Mat rd = y.adjoint() * y2;
      ip = std::max(ip, rel(C.membership_residual(lc), hs_norm(lc)));
      ip = std::max(ip, rel(D.membership_residual(rd), hs_norm(rd)));
      prods_C.push_back(lc);
      prods_D.push_back(rd);
    }
  for (const Mat& x : pair.X.basis())
    for (const Mat& x2 : pair.X.basis()) {
      Mat la = x * x2.adjoint();
      Mat rb = x.adjoint() * x2;
      ip = std::max(ip, rel(A.membership_residual(la), hs_norm(la)));
      ip = std::max(ip, rel(B.membership_residual(rb), hs_norm(rb)));
      prods_A.push_back(la);
      prods_B.push_back(rb);
    }
  rep.add("pair.inner_products", ip, kAlgebraicTol,
          "y y'* in C, y* y' in D, x x'* in A, x* x' in B");

  bool full = span_rank(prods_C) == C.dim() && span_rank(prods_D) == D.dim() &&
              span_rank(prods_A) == A.dim() && span_rank(prods_B) == B.dim();
  rep.add_flag("pair.fullness", full, "inner-product spans exhaust the algebras");
  return rep;
}

EquivalencePair trivial_pair(const Inclusion& inc) {
  EquivalencePair pair;
  pair.left = inc;
  pair.right = inc;
  const int N = inc.large.ambient_dim();
  pair.Y = MatSpan::from_spanning(N, N, inc.large.basis());
  pair.X = MatSpan::from_spanning(N, N, inc.small.basis());
  return pair;
}

// --- corner pair ---

EquivalencePair make_corner_pair(const Inclusion& inc, int n, const Mat& p) {
  if (n < 1) throw std::invalid_argument("make_corner_pair: n must be positive");
  const int P = inc.large.ambient_dim();
  const Eigen::Index Pn = static_cast<Eigen::Index>(P) * n;
  if (p.rows() != Pn || p.cols() != Pn) {
    throw std::invalid_argument("make_corner_pair: p has wrong shape");
  }
  if ((p - p.adjoint().eval()).norm() > 1e-10 * std::max(1.0, p.norm()) ||
      (p * p - p).norm() > 1e-10 * std::max(1.0, p.norm())) {
    throw std::invalid_argument("make_corner_pair: p is not a projection");
  }
  StarAlgebra MnA = matrix_amplification(inc.small, n);
  StarAlgebra MnC = matrix_amplification(inc.large, n);
  if (!MnA.contains(p)) {
    throw std::invalid_argument("make_corner_pair: p does not lie in M_n(A)");
  }
  // Fullness of the two-sided ideal generated by p.
  std::vector<Mat> ideal;
  ideal.reserve(static_cast<size_t>(MnA.dim()) * MnA.dim());
  for (const Mat& u : MnA.basis())
    for (const Mat& v : MnA.basis()) ideal.push_back(u * p * v);
  if (span_rank(ideal) != MnA.dim()) {
    throw std::invalid_argument("make_corner_pair: p is not full in M_n(A)");
  }

  std::vector<Mat> b_span, d_span;
  for (const Mat& u : MnA.basis()) b_span.push_back(p * u * p);
  for (const Mat& w : MnC.basis()) d_span.push_back(p * w * p);
  StarAlgebra B = StarAlgebra::from_span(b_span, p);
  StarAlgebra D = StarAlgebra::from_span(d_span, p);

  const Mat& unitC = inc.large.unit();
  std::vector<Mat> y_span, x_span;
  for (const Mat& w : MnC.basis()) y_span.push_back(unitC * (w * p).topRows(P));
  for (const Mat& u : MnA.basis()) x_span.push_back(unitC * (u * p).topRows(P));

  EquivalencePair pair;
  pair.left = inc;
  pair.right = Inclusion(B, D);
  pair.Y = MatSpan::from_spanning(P, static_cast<int>(Pn), y_span);
  pair.X = MatSpan::from_spanning(P, static_cast<int>(Pn), x_span);
  Report rep = validate_pair(pair);
  if (!rep.pass()) {
    throw std::runtime_error("make_corner_pair: constructed pair failed validation");
  }
  return pair;
}

EquivalencePair amplify_pair(const EquivalencePair& pair, int k) {
  if (k < 1) throw std::invalid_argument("amplify_pair: k must be positive");
  if (k == 1) return pair;
  EquivalencePair out;
  out.left = Inclusion(matrix_amplification(pair.left.small, k),
                       matrix_amplification(pair.left.large, k));
  out.right = Inclusion(matrix_amplification(pair.right.small, k),
                        matrix_amplification(pair.right.large, k));
  std::vector<Mat> y_span, x_span;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      Mat unit_ij = matrix_unit(k, i, j);
      for (const Mat& y : pair.Y.basis()) y_span.push_back(kron(unit_ij, y));
      for (const Mat& x : pair.X.basis()) x_span.push_back(kron(unit_ij, x));
    }
  out.Y = MatSpan::from_spanning(pair.P() * k, pair.Q() * k, y_span);
  out.X = MatSpan::from_spanning(pair.P() * k, pair.Q() * k, x_span);
  return out;
}

// --- frames ---

namespace {

Frame build_frame(const EquivalencePair& pair, FrameSide side) {
  const bool right = side == FrameSide::right;
  const StarAlgebra& corner = right ? pair.right.small : pair.left.small;  // B or A
  const Mat& unit = corner.unit();
  const int amb = corner.ambient_dim();
  Mat complement = Mat::Identity(amb, amb) - unit;

  std::vector<Mat> candidates;
  if (pair.P() == pair.Q()) {
    Mat c0 = pair.X.project(Mat::Identity(pair.P(), pair.Q()));
    if (hs_norm(c0) > 1e-6) candidates.push_back(c0);
  }
  for (const Mat& x : pair.X.basis()) candidates.push_back(x);

  std::vector<Mat> chosen;
  Mat gram = Mat::Zero(amb, amb);
  auto spectrum = [&](const Mat& g) {
    Eigen::SelfAdjointEigenSolver<Mat> es((g + g.adjoint().eval()) / 2.0,
                                          Eigen::EigenvaluesOnly);
    return std::pair<double, double>(es.eigenvalues()(0), es.eigenvalues()(es.eigenvalues().size() - 1));
  };
  bool good = false;
  for (const Mat& s : candidates) {
    chosen.push_back(s);
    gram += right ? Mat(s.adjoint() * s) : Mat(s * s.adjoint());
    auto [lo, hi] = spectrum(gram + complement);
    if (lo > 1e-4 * hi) {
      good = true;
      break;
    }
  }
  if (!good) {
    auto [lo, hi] = spectrum(gram + complement);
    if (lo <= hi / kConditionLimit) {
      throw std::runtime_error("frame: Gram numerically singular; instance rejected");
    }
  }
  Mat scale = psd_inv_sqrt(gram + complement);
  Frame frame;
  frame.side = side;
  for (const Mat& s : chosen) frame.elements.push_back(right ? Mat(s * scale) : Mat(scale * s));
  double res = frame_residual(pair, frame);
  if (res > kAlgebraicTol) {
    throw std::runtime_error("frame: reconstruction residual above tolerance");
  }
  return frame;
}

}  // namespace

Frame right_frame(const EquivalencePair& pair) { return build_frame(pair, FrameSide::right); }
Frame left_frame(const EquivalencePair& pair) { return build_frame(pair, FrameSide::left); }

double frame_residual(const EquivalencePair& pair, const Frame& frame) {
  const bool right = frame.side == FrameSide::right;
  const Mat& unit = right ? pair.right.small.unit() : pair.left.small.unit();
  Mat sum = Mat::Zero(unit.rows(), unit.cols());
  double membership = 0.0;
  for (const Mat& x : frame.elements) {
    sum += right ? Mat(x.adjoint() * x) : Mat(x * x.adjoint());
    membership = std::max(membership, pair.X.membership_residual(x));
  }
  return std::max((sum - unit).norm(), membership);
}

// --- corner realization ---

Mat CornerRealization::embed_left(const Mat& c) const {
  Mat e11 = matrix_unit(n, 0, 0);
  return kron(e11, c);
}

Mat CornerRealization::unembed_left(const Mat& m) const {
  const int P = pair.P();
  return m.block(0, 0, P, P);
}

CornerRealization corner_realization(const EquivalencePair& pair) {
  CornerRealization cr;
  cr.pair = pair;
  cr.frame = right_frame(pair);
  const int n = cr.frame.size();
  const int P = pair.P();
  cr.n = n;
  const auto& xs = cr.frame.elements;

  cr.amplified_A = matrix_amplification(pair.left.small, n);
  cr.amplified_C = matrix_amplification(pair.left.large, n);
  cr.p = assemble_blocks(n, P, [&](int i, int j) { return Mat(xs[i] * xs[j].adjoint()); });
  cr.e = kron(matrix_unit(n, 0, 0), pair.left.large.unit());

  std::vector<Mat> b_span, d_span;
  for (const Mat& u : cr.amplified_A.basis()) b_span.push_back(cr.p * u * cr.p);
  for (const Mat& w : cr.amplified_C.basis()) d_span.push_back(cr.p * w * cr.p);
  cr.corner_B = StarAlgebra::from_span(b_span, cr.p);
  cr.corner_D = StarAlgebra::from_span(d_span, cr.p);

  auto conjugate = [&](const Mat& m) {
    return assemble_blocks(n, P, [&](int i, int j) { return Mat(xs[i] * m * xs[j].adjoint()); });
  };
  cr.psi_B = BimoduleMap::from_action(pair.right.small, cr.corner_B, conjugate);
  cr.psi_D = BimoduleMap::from_action(pair.right.large, cr.corner_D, conjugate);

  std::vector<Mat> x_target, y_target;
  for (const Mat& u : cr.amplified_A.basis()) x_target.push_back(cr.e * u * cr.p);
  for (const Mat& w : cr.amplified_C.basis()) y_target.push_back(cr.e * w * cr.p);
  MatSpan tX = MatSpan::from_spanning(P * n, P * n, x_target);
  MatSpan tY = MatSpan::from_spanning(P * n, P * n, y_target);
  auto row_of = [&](const Mat& v) {
    Mat out = Mat::Zero(static_cast<Eigen::Index>(P) * n, static_cast<Eigen::Index>(P) * n);
    for (int j = 0; j < n; ++j) out.block(0, j * P, P, P) = v * xs[j].adjoint();
    return out;
  };
  {
    Mat cx(tX.dim(), pair.X.dim());
    for (int j = 0; j < pair.X.dim(); ++j) cx.col(j) = tX.coords(row_of(pair.X.basis()[j]));
    cr.psi_X = ModuleMap{pair.X, tX, std::move(cx)};
    Mat cy(tY.dim(), pair.Y.dim());
    for (int j = 0; j < pair.Y.dim(); ++j) cy.col(j) = tY.coords(row_of(pair.Y.basis()[j]));
    cr.psi_Y = ModuleMap{pair.Y, tY, std::move(cy)};
  }

  // Fullness witnesses: a column-pivoted selection of {u_i p u_j} spanning
  // M_n(A), then an exact least-squares solve of sum a_j p b_j = 1.
  {
    const auto& basis = cr.amplified_A.basis();
    const int dim = cr.amplified_A.dim();
    Mat columns(static_cast<Eigen::Index>(P) * n * P * n, static_cast<Eigen::Index>(dim) * dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        columns.col(static_cast<Eigen::Index>(i) * dim + j) = flatten(basis[i] * cr.p * basis[j]);
    Eigen::ColPivHouseholderQR<Mat> qr(columns);
    qr.setThreshold(kRankRelTol);
    const int rank = static_cast<int>(qr.rank());
    Mat sel(columns.rows(), rank);
    std::vector<int> picked(rank);
    for (int k = 0; k < rank; ++k) {
      picked[k] = static_cast<int>(qr.colsPermutation().indices()(k));
      sel.col(k) = columns.col(picked[k]);
    }
    Mat unit_vec = flatten(cr.amplified_A.unit());
    auto ls = solve_least_squares(sel, unit_vec);
    if (ls.residual > kAlgebraicTol * std::max(1.0, unit_vec.norm())) {
      throw std::runtime_error("corner_realization: fullness witnesses not found");
    }
    for (int k = 0; k < rank; ++k) {
      const int i = picked[k] / dim, j = picked[k] % dim;
      cr.wit_a.push_back(ls.solution(k, 0) * basis[i]);
      cr.wit_b.push_back(basis[j]);
    }
  }

  Report rep = validate_corner(cr);
  if (!rep.pass()) {
    throw std::runtime_error("corner_realization: isomorphism residual above tolerance");
  }
  return cr;
}

Report validate_corner(const CornerRealization& cr) {
  Report rep{"corner"};
  const auto& pair = cr.pair;

  rep.add("corner.p_projection",
          std::max((cr.p * cr.p - cr.p).norm(), (cr.p - cr.p.adjoint().eval()).norm()), 1e-10,
          "p is a projection");
  rep.add("corner.p_in_MnA", cr.amplified_A.membership_residual(cr.p), kAlgebraicTol,
          "p lies in M_n(A)");
  rep.add("corner.frame", frame_residual(pair, cr.frame), kAlgebraicTol,
          "right frame reconstructs the unit of B");

  auto iso_residual = [&](const BimoduleMap& psi, const StarAlgebra& dom) {
    double worst = 0.0;
    for (const Mat& u : dom.basis())
      for (const Mat& v : dom.basis()) {
        Mat lhs = psi.apply(u * v);
        Mat rhs = psi.apply(u) * psi.apply(v);
        worst = std::max(worst, rel((lhs - rhs).norm(), hs_norm(rhs)));
      }
    for (const Mat& u : dom.basis()) {
      worst = std::max(worst, (psi.apply(u.adjoint()) - psi.apply(u).adjoint().eval()).norm());
    }
    worst = std::max(worst, (psi.apply(dom.unit()) - cr.p).norm());
    return worst;
  };
  rep.add("corner.psiB_iso", iso_residual(cr.psi_B, pair.right.small), kAlgebraicTol,
          "Psi_B is a unital *-isomorphism onto p M_n(A) p");
  rep.add("corner.psiD_iso", iso_residual(cr.psi_D, pair.right.large), kAlgebraicTol,
          "Psi_D is a unital *-isomorphism onto p M_n(C) p");

  auto invertible = [](const Mat& m) {
    if (m.rows() != m.cols()) return false;
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1) > kRankRelTol * sv(0);
  };
  rep.add_flag("corner.psiB_bijective", invertible(cr.psi_B.coeffs), "Psi_B coefficient matrix invertible");
  rep.add_flag("corner.psiD_bijective", invertible(cr.psi_D.coeffs), "Psi_D coefficient matrix invertible");
  rep.add_flag("corner.psiX_bijective", invertible(cr.psi_X.coeffs), "Psi_X coefficient matrix invertible");
  rep.add_flag("corner.psiY_bijective", invertible(cr.psi_Y.coeffs), "Psi_Y coefficient matrix invertible");

  double restrict_res = 0.0;
  for (const Mat& b : pair.right.small.basis()) {
    restrict_res = std::max(restrict_res, (cr.psi_D.apply(b) - cr.psi_B.apply(b)).norm());
  }
  rep.add("corner.psiD_restricts_to_psiB", restrict_res, kAlgebraicTol,
          "Psi_D restricted to B equals Psi_B");

  Mat wit_sum = Mat::Zero(cr.p.rows(), cr.p.cols());
  for (size_t j = 0; j < cr.wit_a.size(); ++j) wit_sum += cr.wit_a[j] * cr.p * cr.wit_b[j];
  rep.add("corner.witness_identity", (wit_sum - cr.amplified_A.unit()).norm(), kAlgebraicTol,
          "sum a_j p b_j equals the unit of M_n(A)");

  double module_res = 0.0;
  for (const Mat& x : pair.X.basis())
    for (const Mat& d : pair.right.large.basis()) {
      Mat lhs = cr.psi_Y.apply(x * d);
      Mat rhs = cr.psi_X.apply(x) * cr.psi_D.apply(d);
      module_res = std::max(module_res, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  for (const Mat& c : pair.left.large.basis())
    for (const Mat& y : pair.Y.basis()) {
      Mat lhs = cr.psi_Y.apply(c * y);
      Mat rhs = cr.embed_left(c) * cr.psi_Y.apply(y);
      module_res = std::max(module_res, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  rep.add("corner.psi_module_maps", module_res, kAlgebraicTol,
          "Psi_X, Psi_Y intertwine both actions");

  double inner_res = 0.0;
  for (const Mat& y : pair.Y.basis())
    for (const Mat& y2 : pair.Y.basis()) {
      Mat lhs = cr.psi_Y.apply(y) * cr.psi_Y.apply(y2).adjoint();
      Mat rhs = cr.embed_left(y * y2.adjoint());
      inner_res = std::max(inner_res, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  for (const Mat& x : pair.X.basis())
    for (const Mat& x2 : pair.X.basis()) {
      Mat lhs = cr.psi_X.apply(x).adjoint() * cr.psi_X.apply(x2);
      Mat rhs = cr.psi_B.apply(x.adjoint() * x2);
      inner_res = std::max(inner_res, rel((lhs - rhs).norm(), hs_norm(rhs)));
    }
  rep.add("corner.psi_inner_products", inner_res, kAlgebraicTol,
          "Psi maps are compatible with both inner products");
  return rep;
}

// --- tensor composition ---

EquivalencePair tensor_compose(const EquivalencePair& p1, const EquivalencePair& p2) {
  if (!same_inclusion(p1.right, p2.left, kAlgebraicTol)) {
    throw std::invalid_argument("tensor_compose: middle inclusions mismatch");
  }
  std::vector<Mat> y_span, x_span;
  for (const Mat& y : p1.Y.basis())
    for (const Mat& w : p2.Y.basis()) y_span.push_back(y * w);
  for (const Mat& x : p1.X.basis())
    for (const Mat& z : p2.X.basis()) x_span.push_back(x * z);
  EquivalencePair out;
  out.left = p1.left;
  out.right = p2.right;
  out.Y = MatSpan::from_spanning(p1.P(), p2.Q(), y_span);
  out.X = MatSpan::from_spanning(p1.P(), p2.Q(), x_span);
  Report rep = validate_pair(out);
  if (!rep.pass()) {
    throw std::runtime_error("tensor_compose: product span failed pair validation");
  }
  return out;
}

// --- equivalence witness search ---

namespace {

// Verifies that phi (coeffs W-coords x Y-coords) is an inner-product
// preserving bimodule isomorphism sending X onto Z.
bool verify_witness(const EquivalencePair& p1, const EquivalencePair& p2, const Mat& phi,
                    Report& rep) {
  const double tol = 1e-8;
  ModuleMap map{p1.Y, p2.Y, phi};
  double inter = 0.0;
  for (const Mat& c : p1.left.large.basis())
    for (const Mat& y : p1.Y.basis())
      inter = std::max(inter, rel((map.apply(c * y) - c * map.apply(y)).norm(),
                                  hs_norm(map.apply(y))));
  for (const Mat& d : p1.right.large.basis())
    for (const Mat& y : p1.Y.basis())
      inter = std::max(inter, rel((map.apply(y * d) - map.apply(y) * d).norm(),
                                  hs_norm(map.apply(y))));
  rep.add("equiv.bimodule_map", inter, tol, "witness intertwines both actions");

  double ip = 0.0;
  for (const Mat& y : p1.Y.basis())
    for (const Mat& y2 : p1.Y.basis()) {
      Mat wy = map.apply(y), wy2 = map.apply(y2);
      ip = std::max(ip, (wy * wy2.adjoint() - y * y2.adjoint()).norm());
      ip = std::max(ip, (wy.adjoint() * wy2 - y.adjoint() * y2).norm());
    }
  rep.add("equiv.inner_products", ip, tol, "witness preserves both inner products");

  double xz = 0.0;
  std::vector<Mat> images;
  for (const Mat& x : p1.X.basis()) {
    Mat img = map.apply(x);
    images.push_back(img);
    xz = std::max(xz, p2.X.membership_residual(img));
  }
  rep.add("equiv.X_onto_Z", xz, tol, "witness maps X into Z");
  bool rank_ok = span_rank(images) == p2.X.dim();
  rep.add_flag("equiv.X_rank", rank_ok, "witness restricted to X is a bijection onto Z");
  return rep.pass();
}

}  // namespace

EquivalenceWitness is_equivalent(const EquivalencePair& p1, const EquivalencePair& p2,
                                 std::uint64_t seed) {
  EquivalenceWitness w;
  w.detail.name = "equiv";
  if (!same_inclusion(p1.left, p2.left, kAlgebraicTol) ||
      !same_inclusion(p1.right, p2.right, kAlgebraicTol)) {
    w.detail.add_flag("equiv.same_inclusions", false, "pairs live over the same inclusions");
    return w;
  }
  if (p1.Y.dim() != p2.Y.dim() || p1.X.dim() != p2.X.dim()) {
    w.detail.add_flag("equiv.dimensions", false, "dim Y = dim W and dim X = dim Z");
    return w;
  }
  const int dy = p1.Y.dim();
  const int dw = p2.Y.dim();

  // Linear intertwining constraints on vec(Phi), column-major.
  std::vector<Mat> rows;
  Mat idY = Mat::Identity(dy, dy), idW = Mat::Identity(dw, dw);
  auto action_matrix = [](const MatSpan& span, const Mat& g, bool left_side) {
    Mat m(span.dim(), span.dim());
    for (int j = 0; j < span.dim(); ++j) {
      Mat moved = left_side ? Mat(g * span.basis()[j]) : Mat(span.basis()[j] * g);
      m.col(j) = span.coords(moved);
    }
    return m;
  };
  for (const Mat& c : p1.left.large.basis()) {
    Mat ly = action_matrix(p1.Y, c, true);
    Mat lw = action_matrix(p2.Y, c, true);
    rows.push_back(kron(ly.transpose(), idW) - kron(idY, lw));
  }
  for (const Mat& d : p1.right.large.basis()) {
    Mat ry = action_matrix(p1.Y, d, false);
    Mat rw = action_matrix(p2.Y, d, false);
    rows.push_back(kron(ry.transpose(), idW) - kron(idY, rw));
  }
  {
    Mat zc(dw, p2.X.dim());
    for (int j = 0; j < p2.X.dim(); ++j) zc.col(j) = p2.Y.coords(p2.X.basis()[j]);
    Mat off_z = idW - zc * zc.adjoint();  // Z basis is HS-orthonormal
    for (const Mat& x : p1.X.basis()) {
      Mat xi = p1.Y.coords(x);
      rows.push_back(kron(xi.transpose(), off_z));
    }
  }
  Eigen::Index total = 0;
  for (const Mat& r : rows) total += r.rows();
  Mat system(total, static_cast<Eigen::Index>(dy) * dw);
  Eigen::Index at = 0;
  for (const Mat& r : rows) {
    system.block(at, 0, r.rows(), r.cols()) = r;
    at += r.rows();
  }
  std::vector<Mat> kernel = nullspace(system, 1.0);
  if (kernel.empty()) {
    w.detail.add_flag("equiv.intertwiner_space", false, "nontrivial intertwiner space exists");
    return w;
  }

  auto unpack = [&](const CVec& v) {
    Mat phi(dw, dy);
    for (int j = 0; j < dy; ++j) phi.col(j) = v.segment(static_cast<Eigen::Index>(j) * dw, dw);
    return phi;
  };
  std::vector<Mat> candidates;
  {
    // Identity-transfer candidate: coordinates of Y basis in the W span.
    Mat id_cand(dw, dy);
    for (int j = 0; j < dy; ++j) id_cand.col(j) = p2.Y.coords(p1.Y.basis()[j]);
    CVec v(static_cast<Eigen::Index>(dy) * dw);
    for (int j = 0; j < dy; ++j) v.segment(static_cast<Eigen::Index>(j) * dw, dw) = id_cand.col(j);
    if (v.norm() > 1e-8 && (system * v).norm() <= 1e-8 * std::max(1.0, v.norm())) {
      candidates.push_back(id_cand);
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 8; ++attempt) {
    CVec v = CVec::Zero(static_cast<Eigen::Index>(dy) * dw);
    for (const Mat& k : kernel) v += cplx(gauss(rng), gauss(rng)) * k.col(0);
    if (v.norm() < 1e-12) continue;
    candidates.push_back(unpack(v));
  }

  for (const Mat& phi0 : candidates) {
    Mat gram = phi0.adjoint() * phi0;
    Eigen::SelfAdjointEigenSolver<Mat> es((gram + gram.adjoint().eval()) / 2.0,
                                          Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev(0) <= 1e-10 * std::max(ev(ev.size() - 1), 1e-300)) continue;
    Mat phi = phi0 * psd_inv_sqrt(gram);
    Report rep{"equiv"};
    if (verify_witness(p1, p2, phi, rep)) {
      w.equivalent = true;
      w.map = ModuleMap{p1.Y, p2.Y, phi};
      w.detail = std::move(rep);
      return w;
    }
  }
  w.detail.add_flag("equiv.witness_found", false, "no witness found at tolerance");
  return w;
}

}  // namespace morita
