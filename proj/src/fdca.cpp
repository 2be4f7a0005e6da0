#include "morita/fdca.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace morita {

namespace {

Mat identity_mat(int n) { return Mat::Identity(n, n); }

}  // namespace

// --- MatSpan ---

MatSpan MatSpan::from_spanning(int rows, int cols, const std::vector<Mat>& spanning,
                               double tol) {
  MatSpan out;
  out.rows_ = rows;
  out.cols_ = cols;
  if (spanning.empty()) return out;
  for (const Mat& m : spanning) {
    if (m.rows() != rows || m.cols() != cols) {
      throw std::invalid_argument("MatSpan: spanning element has wrong shape");
    }
    if (!all_finite(m)) throw std::invalid_argument("MatSpan: non-finite entry");
  }
  // Keep an already orthonormal family verbatim (stable save/load round trips).
  {
    bool ortho = true;
    for (size_t i = 0; i < spanning.size() && ortho; ++i)
      for (size_t j = i; j < spanning.size() && ortho; ++j) {
        cplx g = hs_inner(spanning[i], spanning[j]);
        cplx want = (i == j) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
        if (std::abs(g - want) > 1e-12) ortho = false;
      }
    if (ortho) {
      out.basis_ = spanning;
      return out;
    }
  }
  Mat stacked(static_cast<Eigen::Index>(rows) * cols,
              static_cast<Eigen::Index>(spanning.size()));
  for (size_t k = 0; k < spanning.size(); ++k)
    stacked.col(static_cast<Eigen::Index>(k)) = flatten(spanning[k]);
  if (stacked.norm() == 0.0) return out;
  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol * smax) out.basis_.push_back(unflatten(svd.matrixU().col(i), rows, cols));
  }
  return out;
}

CVec MatSpan::coords(const Mat& x) const {
  if (x.rows() != rows_ || x.cols() != cols_) {
    throw std::invalid_argument("MatSpan::coords: shape mismatch");
  }
  CVec c(dim());
  for (int i = 0; i < dim(); ++i) c(i) = hs_inner(basis_[i], x);
  return c;
}

Mat MatSpan::from_coords(const CVec& c) const {
  if (c.size() != dim()) throw std::invalid_argument("MatSpan::from_coords: size mismatch");
  Mat x = Mat::Zero(rows_, cols_);
  for (int i = 0; i < dim(); ++i) x += c(i) * basis_[i];
  return x;
}

Mat MatSpan::project(const Mat& x) const { return from_coords(coords(x)); }

double MatSpan::membership_residual(const Mat& x) const { return (x - project(x)).norm(); }

bool MatSpan::contains(const Mat& x, double tol) const {
  return membership_residual(x) <= tol * std::max(1.0, hs_norm(x));
}

bool MatSpan::same_span(const MatSpan& other, double tol) const {
  if (rows_ != other.rows_ || cols_ != other.cols_ || dim() != other.dim()) return false;
  for (const Mat& b : basis_)
    if (!other.contains(b, tol)) return false;
  for (const Mat& b : other.basis_)
    if (!contains(b, tol)) return false;
  return true;
}

// --- StarAlgebra ---

namespace {

void validate_algebra(const MatSpan& span, const Mat& unit) {
  if (span.dim() == 0) throw std::invalid_argument("StarAlgebra: empty span");
  const auto& basis = span.basis();
  for (const Mat& a : basis) {
    if (span.membership_residual(a.adjoint()) > kAlgebraicTol) {
      throw std::invalid_argument("StarAlgebra: span is not closed under adjoint");
    }
  }
  for (const Mat& a : basis) {
    for (const Mat& b : basis) {
      Mat prod = a * b;
      double scale = std::max(1.0, hs_norm(prod));
      if (span.membership_residual(prod) > kAlgebraicTol * scale) {
        throw std::invalid_argument("StarAlgebra: span is not closed under product");
      }
    }
  }
  if (span.membership_residual(unit) > kAlgebraicTol * std::max(1.0, hs_norm(unit))) {
    throw std::invalid_argument("StarAlgebra: unit lies outside the span");
  }
  if ((unit - unit.adjoint().eval()).norm() > 1e-10 * std::max(1.0, unit.norm()) ||
      (unit * unit - unit).norm() > 1e-10 * std::max(1.0, unit.norm())) {
    throw std::invalid_argument("StarAlgebra: unit is not a projection");
  }
  for (const Mat& a : basis) {
    if ((unit * a - a).norm() > 1e-10 || (a * unit - a).norm() > 1e-10) {
      throw std::invalid_argument("StarAlgebra: unit law fails on basis");
    }
  }
}

}  // namespace

StarAlgebra StarAlgebra::from_span(const std::vector<Mat>& spanning, const Mat& unit) {
  if (spanning.empty()) throw std::invalid_argument("StarAlgebra: no spanning set");
  const int n = static_cast<int>(spanning.front().rows());
  if (spanning.front().cols() != n) throw std::invalid_argument("StarAlgebra: not square");
  StarAlgebra alg;
  alg.span_ = MatSpan::from_spanning(n, n, spanning);
  alg.unit_ = unit;
  validate_algebra(alg.span_, alg.unit_);
  return alg;
}

StarAlgebra StarAlgebra::from_generators(int ambient_dim, const std::vector<Mat>& gens) {
  std::vector<Mat> current;
  current.push_back(identity_mat(ambient_dim));
  for (const Mat& g : gens) {
    if (g.rows() != ambient_dim || g.cols() != ambient_dim) {
      throw std::invalid_argument("from_generators: generator has wrong shape");
    }
    current.push_back(g);
    current.push_back(g.adjoint());
  }
  MatSpan span = MatSpan::from_spanning(ambient_dim, ambient_dim, current);
  const int max_dim = ambient_dim * ambient_dim;
  for (int round = 0;; ++round) {
    std::vector<Mat> extended = span.basis();
    const auto& basis = span.basis();
    for (const Mat& a : basis) extended.push_back(a.adjoint());
    for (const Mat& a : basis)
      for (const Mat& b : basis) extended.push_back(a * b);
    MatSpan next = MatSpan::from_spanning(ambient_dim, ambient_dim, extended);
    if (next.dim() == span.dim()) break;
    span = next;
    if (span.dim() > max_dim || round > max_dim) {
      throw std::runtime_error("from_generators: closure exceeded ambient dimension bound");
    }
  }
  StarAlgebra alg;
  alg.span_ = span;
  alg.unit_ = identity_mat(ambient_dim);
  validate_algebra(alg.span_, alg.unit_);
  return alg;
}

bool is_positive(const StarAlgebra& alg, const Mat& x) {
  if (!alg.contains(x)) {
    throw std::invalid_argument("is_positive: element lies outside the algebra");
  }
  const double scale = std::max(hs_norm(x), 1e-300);
  if ((x - x.adjoint().eval()).norm() > kAlgebraicTol * std::max(scale, 1.0)) return false;
  Mat h = (x + x.adjoint().eval()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0) >= -kAlgebraicTol * std::max(scale, 1.0);
}

// --- Inclusion ---

Inclusion::Inclusion(StarAlgebra a, StarAlgebra c) : small(std::move(a)), large(std::move(c)) {
  if (small.ambient_dim() != large.ambient_dim()) {
    throw std::invalid_argument("Inclusion: ambient dimensions differ");
  }
  for (const Mat& b : small.basis()) {
    if (!large.contains(b)) {
      throw std::invalid_argument("Inclusion: small algebra is not contained in large");
    }
  }
  if ((small.unit() - large.unit()).norm() > 1e-10) {
    throw std::invalid_argument("Inclusion: units differ");
  }
}

StarAlgebra matrix_amplification(const StarAlgebra& alg, int n) {
  if (n < 1) throw std::invalid_argument("matrix_amplification: n must be positive");
  const int N = alg.ambient_dim();
  std::vector<Mat> span;
  span.reserve(static_cast<size_t>(alg.dim()) * n * n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      Mat unit_kl = Mat::Zero(n, n);
      unit_kl(k, l) = 1.0;
      for (const Mat& a : alg.basis()) span.push_back(kron(unit_kl, a));
    }
  Mat unit = kron(identity_mat(n), alg.unit());
  (void)N;
  return StarAlgebra::from_span(span, unit);
}

StarAlgebra relative_commutant(const Inclusion& inc) {
  const StarAlgebra& A = inc.small;
  const StarAlgebra& C = inc.large;
  const int N = C.ambient_dim();
  const int dC = C.dim();
  // Stack the commutator maps gamma -> vec([sum gamma_k C_k, a_i]).
  Mat op(static_cast<Eigen::Index>(A.dim()) * N * N, dC);
  for (int i = 0; i < A.dim(); ++i) {
    const Mat& a = A.basis()[i];
    for (int k = 0; k < dC; ++k) {
      const Mat& c = C.basis()[k];
      op.block(static_cast<Eigen::Index>(i) * N * N, k, N * N, 1) = flatten(c * a - a * c);
    }
  }
  std::vector<Mat> kernel = nullspace(op, 1.0);
  std::vector<Mat> basis;
  basis.reserve(kernel.size());
  for (const Mat& gamma : kernel) basis.push_back(C.from_coords(gamma.col(0)));
  if (basis.empty()) throw std::runtime_error("relative_commutant: empty commutant");
  return StarAlgebra::from_span(basis, C.unit());
}

StarAlgebra ambient_commutant(const StarAlgebra& alg) {
  const int N = alg.ambient_dim();
  Mat op(static_cast<Eigen::Index>(alg.dim()) * N * N, static_cast<Eigen::Index>(N) * N);
  for (int i = 0; i < alg.dim(); ++i) {
    const Mat& a = alg.basis()[i];
    for (int col = 0; col < N * N; ++col) {
      Mat e = unflatten(CVec::Unit(N * N, col), N, N);
      op.block(static_cast<Eigen::Index>(i) * N * N, col, N * N, 1) = flatten(e * a - a * e);
    }
  }
  std::vector<Mat> kernel = nullspace(op, 1.0);
  std::vector<Mat> basis;
  for (const Mat& gamma : kernel) basis.push_back(unflatten(gamma.col(0), N, N));
  return StarAlgebra::from_span(basis, Mat::Identity(N, N));
}

// --- BimoduleMap ---

Mat BimoduleMap::preimage(const Mat& y) const {
  auto ls = solve_least_squares(coeffs, target.coords(y));
  return source.from_coords(ls.solution.col(0));
}

BimoduleMap BimoduleMap::identity(const StarAlgebra& alg) {
  return {alg, alg, Mat::Identity(alg.dim(), alg.dim())};
}

BimoduleMap BimoduleMap::zero(const StarAlgebra& source, const StarAlgebra& target) {
  return {source, target, Mat::Zero(target.dim(), source.dim())};
}

BimoduleMap BimoduleMap::from_action(const StarAlgebra& source, const StarAlgebra& target,
                                     const std::function<Mat(const Mat&)>& action) {
  Mat coeffs(target.dim(), source.dim());
  for (int j = 0; j < source.dim(); ++j) coeffs.col(j) = target.coords(action(source.basis()[j]));
  return {source, target, std::move(coeffs)};
}

double bimodule_residual(const Inclusion& inc, const BimoduleMap& phi) {
  double worst = 0.0;
  for (const Mat& a : inc.small.basis()) {
    for (const Mat& c : inc.large.basis()) {
      for (const Mat& a2 : inc.small.basis()) {
        Mat lhs = phi.apply(a * c * a2);
        Mat rhs = a * phi.apply(c) * a2;
        double scale = std::max(1.0, hs_norm(rhs));
        worst = std::max(worst, (lhs - rhs).norm() / scale);
      }
    }
  }
  return worst;
}

double fixes_small_residual(const Inclusion& inc, const BimoduleMap& phi) {
  double worst = 0.0;
  for (const Mat& a : inc.small.basis()) worst = std::max(worst, (phi.apply(a) - a).norm());
  return worst;
}

double selfadjoint_residual(const BimoduleMap& phi) {
  double worst = 0.0;
  for (const Mat& c : phi.source.basis()) {
    worst = std::max(worst, (phi.apply(c.adjoint()) - phi.apply(c).adjoint().eval()).norm());
  }
  return worst;
}

BimoduleMap trace_conditional_expectation(const Inclusion& inc) {
  const StarAlgebra& A = inc.small;
  const StarAlgebra& C = inc.large;
  Mat coeffs(A.dim(), C.dim());
  for (int j = 0; j < C.dim(); ++j) {
    CVec col(A.dim());
    for (int i = 0; i < A.dim(); ++i) col(i) = hs_inner(A.basis()[i], C.basis()[j]);
    coeffs.col(j) = col;
  }
  BimoduleMap E{A /*placeholder, fixed below*/, A, Mat()};
  E.source = C;
  E.target = A;
  E.coeffs = std::move(coeffs);

  if (fixes_small_residual(inc, E) > 1e-10 * A.dim()) {
    throw std::runtime_error("trace_conditional_expectation: does not fix the subalgebra");
  }
  if (bimodule_residual(inc, E) > kAlgebraicTol) {
    throw std::runtime_error("trace_conditional_expectation: bimodule residual above tolerance");
  }
  // Trace compatibility and positivity on sampled c*c (fixed internal seed).
  for (const Mat& c : C.basis()) {
    if (std::abs(E.apply(c).trace() - c.trace()) > kAlgebraicTol * std::max(1.0, hs_norm(c))) {
      throw std::runtime_error("trace_conditional_expectation: trace is not preserved");
    }
  }
  std::mt19937_64 rng(0x5eedu);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < 16; ++s) {
    CVec z(C.dim());
    for (int i = 0; i < C.dim(); ++i) z(i) = cplx(gauss(rng), gauss(rng));
    Mat c = C.from_coords(z);
    Mat pos = c.adjoint() * c;
    Mat img = E.apply(pos);
    if (min_eig_hermitian((img + img.adjoint().eval()) / 2.0) <
        -kAlgebraicTol * std::max(1.0, hs_norm(pos))) {
      throw std::runtime_error("trace_conditional_expectation: positivity failure on sample");
    }
  }
  return E;
}

}  // namespace morita
