#include "morita/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace morita {

bool all_finite(const Mat& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const cplx v = a(i, j);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
  return true;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols()) +
                                " and " + std::to_string(b.rows()) + " do not match");
  }
  return a * b;
}

Mat adjoint(const Mat& a) { return a.adjoint(); }

double operator_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

namespace {

void require_hermitian(const Mat& a, const char* who) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument(std::string(who) + ": matrix is not square");
  }
  const double scale = std::max(a.norm(), 1e-300);
  if ((a - a.adjoint().eval()).norm() > 1e-10 * std::max(scale, 1.0)) {
    throw std::invalid_argument(std::string(who) + ": matrix is not Hermitian");
  }
}

}  // namespace

double min_eig_hermitian(const Mat& a) {
  require_hermitian(a, "min_eig_hermitian");
  Mat h = (a + a.adjoint().eval()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Mat psd_sqrt(const Mat& a) {
  require_hermitian(a, "psd_sqrt");
  Mat h = (a + a.adjoint().eval()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const auto& ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd root(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kAlgebraicTol * scale) {
      throw std::invalid_argument("psd_sqrt: eigenvalue " + std::to_string(ev(i)) +
                                  " below PSD tolerance");
    }
    root(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

Mat psd_inv_sqrt(const Mat& a, double rank_tol) {
  require_hermitian(a, "psd_inv_sqrt");
  Mat h = (a + a.adjoint().eval()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const auto& ev = es.eigenvalues();
  const double scale = ev.size() ? std::max(ev.cwiseAbs().maxCoeff(), 0.0) : 0.0;
  Eigen::VectorXd root(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kAlgebraicTol * std::max(scale, 1e-300)) {
      throw std::invalid_argument("psd_inv_sqrt: matrix is not PSD");
    }
    root(i) = (ev(i) > rank_tol * scale) ? 1.0 / std::sqrt(ev(i)) : 0.0;
  }
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

std::vector<Mat> nullspace(const Mat& op, double scale_floor) {
  std::vector<Mat> out;
  const Eigen::Index n = op.cols();
  if (n == 0) return out;
  if (op.rows() == 0 || op.norm() == 0.0) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Mat v = Mat::Zero(n, 1);
      v(j, 0) = 1.0;
      out.push_back(v);
    }
    return out;
  }
  Eigen::JacobiSVD<Mat> svd(op, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double threshold = kRankRelTol * std::max(sv(0), scale_floor);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > threshold) ++rank;
  const Mat& V = svd.matrixV();
  for (Eigen::Index j = rank; j < n; ++j) out.push_back(V.col(j));
  return out;
}

LeastSquares solve_least_squares(const Mat& op, const Mat& rhs) {
  if (op.rows() != rhs.rows()) {
    throw std::invalid_argument("solve_least_squares: row counts do not match");
  }
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(op);
  cod.setThreshold(kRankRelTol);
  Mat x = cod.solve(rhs);
  double res = (op * x - rhs).norm();
  return {std::move(x), res};
}

int span_rank(const std::vector<Mat>& vectors, double tol) {
  if (vectors.empty()) return 0;
  const Eigen::Index rows = vectors.front().rows();
  const Eigen::Index cols = vectors.front().cols();
  Mat stacked(rows * cols, static_cast<Eigen::Index>(vectors.size()));
  for (size_t k = 0; k < vectors.size(); ++k) {
    if (vectors[k].rows() != rows || vectors[k].cols() != cols) {
      throw std::invalid_argument("span_rank: vectors have mixed shapes");
    }
    stacked.col(static_cast<Eigen::Index>(k)) = flatten(vectors[k]);
  }
  if (stacked.norm() == 0.0) return 0;
  Eigen::JacobiSVD<Mat> svd(stacked);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol * smax) ++rank;
  return rank;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CVec flatten(const Mat& a) {
  CVec v(a.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) v(k++) = a(i, j);
  return v;
}

Mat unflatten(const CVec& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols) {
    throw std::invalid_argument("unflatten: size mismatch");
  }
  Mat a(rows, cols);
  Eigen::Index k = 0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = v(k++);
  return a;
}

cplx hs_inner(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("hs_inner: shape mismatch");
  }
  return (a.adjoint() * b).trace();
}

double hs_norm(const Mat& a) { return a.norm(); }

}  // namespace morita
