#pragma once

#include <Eigen/Dense>

namespace lfdproto {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative shrinkage applied to an ill-conditioned right-hand matrix:
/// b + kRidgeEpsilon * Tr(b) / dim * I.
inline constexpr double kRidgeEpsilon = 1e-6;

/// Largest dimension accepted by the dense solvers.
inline constexpr Eigen::Index kMaxDimension = 4096;

struct SymEigResult {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column i pairs with eigenvalues(i); orthonormal
};

struct GenEigResult {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column i pairs with eigenvalues(i); b-orthonormal
  Matrix whitener;      // lower-triangular L with L L^T = b + ridge * I
  double ridge = 0.0;   // diagonal shift actually applied to b (0 if none)
};

/// Throws NotFinite / NotSymmetric / DimensionMismatch when `a` is not a
/// finite square symmetric matrix (asymmetry tolerance 1e-10 relative).
void check_symmetric(const Matrix& a, const char* what = "matrix");

/// Flips the sign of each column so that its first non-negligible entry is
/// positive.
void normalize_column_signs(Matrix& v);

/// Full eigendecomposition of a dense symmetric matrix, eigenvalues descending.
SymEigResult sym_eig(const Matrix& a);

/// Ridge that would be added to `b` before whitening: zero when the smallest
/// eigenvalue of b already exceeds the ridge level, otherwise
/// kRidgeEpsilon * Tr(b) / dim (with a fallback scale when Tr(b) vanishes).
double ridge_for(const Matrix& b, const Matrix* fallback_scale = nullptr);

/// Solves a v = lambda b v for symmetric a and symmetric positive
/// (semi)definite b by Cholesky whitening b = L L^T followed by sym_eig on
/// L^{-1} a L^{-T}.
GenEigResult solve_generalized_eig(const Matrix& a, const Matrix& b);

/// Tr((w^T den w)^{-1} (w^T num w)).
double trace_ratio(const Matrix& w, const Matrix& num, const Matrix& den);

/// Symmetric square-root style factor G with G G^T = a for PSD a (negative
/// eigenvalues from rounding are clamped to zero).
Matrix psd_factor(const Matrix& a);

bool all_finite(const Matrix& a);

}  // namespace lfdproto
