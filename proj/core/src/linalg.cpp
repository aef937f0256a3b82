#include "lfdproto/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lfdproto/error.hpp"

namespace lfdproto {
namespace {

constexpr double kSymmetryTolerance = 1e-10;

void check_square(const Matrix& a, const char* what) {
  require(a.rows() >= 1 && a.rows() == a.cols(), Errc::kDimensionMismatch,
          std::string(what) + " must be square and non-empty");
  require(a.rows() <= kMaxDimension, Errc::kDimensionMismatch,
          std::string(what) + " exceeds the maximum supported dimension");
}

// Eigen returns ascending eigenvalues; reverse to descending and fix signs.
SymEigResult descending(const Vector& values, const Matrix& vectors) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return values(l) > values(r); });
  SymEigResult out{Vector(n), Matrix(vectors.rows(), n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = values(order[static_cast<std::size_t>(i)]);
    out.eigenvectors.col(i) = vectors.col(order[static_cast<std::size_t>(i)]);
  }
  normalize_column_signs(out.eigenvectors);
  return out;
}

}  // namespace

bool all_finite(const Matrix& a) { return a.allFinite(); }

void check_symmetric(const Matrix& a, const char* what) {
  check_square(a, what);
  require(a.allFinite(), Errc::kNotFinite, std::string(what) + " has NaN or Inf entries");
  const double scale = a.norm();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  require(asym <= kSymmetryTolerance * std::max(scale, 1e-300), Errc::kNotSymmetric,
          std::string(what) + " is not symmetric");
}

void normalize_column_signs(Matrix& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    const double tol = 1e-12 * v.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      if (std::abs(v(i, j)) > tol) {
        if (v(i, j) < 0) v.col(j) *= -1.0;
        break;
      }
    }
  }
}

SymEigResult sym_eig(const Matrix& a) {
  check_symmetric(a, "sym_eig input");
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::ComputeEigenvectors);
  require(solver.info() == Eigen::Success, Errc::kNotFinite, "eigensolver did not converge");
  return descending(solver.eigenvalues(), solver.eigenvectors());
}

double ridge_for(const Matrix& b, const Matrix* fallback_scale) {
  const Eigen::Index n = b.rows();
  double scale = b.trace() / static_cast<double>(n);
  if (!(scale > 0.0) && fallback_scale != nullptr) {
    scale = fallback_scale->diagonal().cwiseAbs().sum() / static_cast<double>(n);
  }
  if (!(scale > 0.0)) scale = 1.0;
  const double ridge = kRidgeEpsilon * scale;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (b + b.transpose()), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) return ridge;
  return solver.eigenvalues()(0) > ridge ? 0.0 : ridge;
}

GenEigResult solve_generalized_eig(const Matrix& a, const Matrix& b) {
  check_symmetric(a, "generalized eigenproblem lhs");
  check_symmetric(b, "generalized eigenproblem rhs");
  require(a.rows() == b.rows(), Errc::kDimensionMismatch,
          "generalized eigenproblem operands differ in dimension");
  GenEigResult out;
  out.ridge = ridge_for(b, &a);
  Matrix b_used = 0.5 * (b + b.transpose());
  b_used.diagonal().array() += out.ridge;

  Eigen::LLT<Matrix> llt(b_used);
  require(llt.info() == Eigen::Success, Errc::kNotPositiveDefinite,
          "rhs is not positive definite after ridge regularization");
  out.whitener = llt.matrixL();

  // c = L^{-1} a L^{-T}
  const auto lower = llt.matrixL();
  Matrix c = lower.solve(a);
  c = lower.solve(c.transpose()).transpose();
  c = 0.5 * (c + c.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> solver(c, Eigen::ComputeEigenvectors);
  require(solver.info() == Eigen::Success, Errc::kNotFinite, "eigensolver did not converge");
  SymEigResult whitened = descending(solver.eigenvalues(), solver.eigenvectors());

  out.eigenvalues = whitened.eigenvalues;
  out.eigenvectors = llt.matrixU().solve(whitened.eigenvectors);  // v = L^{-T} y
  normalize_column_signs(out.eigenvectors);
  return out;
}

double trace_ratio(const Matrix& w, const Matrix& num, const Matrix& den) {
  require(num.rows() == w.rows() && den.rows() == w.rows(), Errc::kDimensionMismatch,
          "trace_ratio operands differ in dimension");
  check_symmetric(num, "trace_ratio numerator");
  check_symmetric(den, "trace_ratio denominator");
  Matrix projected_den = w.transpose() * den * w;
  projected_den = 0.5 * (projected_den + projected_den.transpose());
  const Matrix projected_num = w.transpose() * num * w;
  require(projected_den.trace() > 0.0, Errc::kSingularProjection,
          "projected denominator vanishes");
  const double ridge = ridge_for(projected_den);
  projected_den.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(projected_den);
  require(llt.info() == Eigen::Success, Errc::kSingularProjection,
          "projected denominator is singular beyond ridge rescue");
  const double value = llt.solve(projected_num).trace();
  require(std::isfinite(value), Errc::kSingularProjection, "trace ratio is not finite");
  return value;
}

Matrix psd_factor(const Matrix& a) {
  check_symmetric(a, "covariance");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (a + a.transpose()));
  require(solver.info() == Eigen::Success, Errc::kNotFinite, "eigensolver did not converge");
  const Vector roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal();
}

}  // namespace lfdproto
