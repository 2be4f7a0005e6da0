#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace morita {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// Residual tolerances used across the library.  Algebraic identities are
// checked relative to operand scale, iterative estimates get looser slack.
inline constexpr double kAlgebraicTol = 1e-9;
inline constexpr double kIterativeTol = 1e-6;
inline constexpr double kRankRelTol = 1e-8;     // rank threshold vs. largest singular value
inline constexpr double kConditionLimit = 1e8;  // instance rejection guard

bool all_finite(const Mat& a);

// Checked product; throws std::invalid_argument on inner-dimension mismatch.
Mat matmul(const Mat& a, const Mat& b);

// Conjugate transpose.
Mat adjoint(const Mat& a);

// Largest singular value.
double operator_norm(const Mat& a);

// Smallest eigenvalue of a Hermitian matrix; throws std::invalid_argument if
// the input is not Hermitian within 1e-10 of its scale.
double min_eig_hermitian(const Mat& a);

// Hermitian PSD square root; throws std::invalid_argument on an eigenvalue
// below -1e-9 * scale.  Eigenvalues in the roundoff band are clamped to zero.
Mat psd_sqrt(const Mat& a);

// Pseudo inverse square root of a Hermitian PSD matrix: eigenvalues at or
// below rank_tol * lambda_max map to zero, the rest to lambda^{-1/2}.
Mat psd_inv_sqrt(const Mat& a, double rank_tol = kRankRelTol);

// Orthonormal basis of the kernel of a coordinate-space map, as column
// vectors.  Singular values at or below rank_tol * max(sigma_max, scale_floor)
// count as zero; pass scale_floor = 1 for operators built from normalized
// bases, where an all-noise matrix must read as the zero map.
std::vector<Mat> nullspace(const Mat& op, double scale_floor = 0.0);

struct LeastSquares {
  Mat solution;       // minimum-norm least-squares solution
  double residual;    // Frobenius norm of op*solution - rhs
};
LeastSquares solve_least_squares(const Mat& op, const Mat& rhs);

// Numerical rank of the span of the flattened vectors at relative threshold tol.
// All vectors must share one shape.
int span_rank(const std::vector<Mat>& vectors, double tol = kRankRelTol);

// Kronecker product, blocks of b scaled by entries of a.
Mat kron(const Mat& a, const Mat& b);

// Row-major flatten / unflatten.
CVec flatten(const Mat& a);
Mat unflatten(const CVec& v, int rows, int cols);

// Hilbert-Schmidt pairing Tr(a* b) and induced norm.
cplx hs_inner(const Mat& a, const Mat& b);
double hs_norm(const Mat& a);

}  // namespace morita
