#include <doctest.h>

#include <lfdproto/error.hpp>
#include <lfdproto/linalg.hpp>

#include "helpers.hpp"

using namespace lfdproto;
using testutil::random_spd;
using testutil::random_symmetric;

namespace {

double max_residual(const Matrix& a, const Matrix& b, const GenEigResult& r) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) {
    const Vector v = r.eigenvectors.col(i);
    worst = std::max(worst, (a * v - r.eigenvalues(i) * b * v).norm());
  }
  return worst;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("sym_eig on the identity returns unit eigenvalues and an orthonormal basis") {
  const SymEigResult r = sym_eig(Matrix::Identity(3, 3));
  CHECK((r.eigenvalues - Vector::Ones(3)).norm() < 1e-14);
  CHECK((r.eigenvectors.transpose() * r.eigenvectors - Matrix::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("sym_eig on a diagonal matrix sorts descending with standard basis columns") {
  Matrix a = Vector(Eigen::Vector3d(2, 5, -1)).asDiagonal();
  const SymEigResult r = sym_eig(a);
  CHECK(r.eigenvalues(0) == doctest::Approx(5));
  CHECK(r.eigenvalues(1) == doctest::Approx(2));
  CHECK(r.eigenvalues(2) == doctest::Approx(-1));
  CHECK(std::abs(r.eigenvectors(1, 0)) == doctest::Approx(1));
  CHECK(std::abs(r.eigenvectors(0, 1)) == doctest::Approx(1));
  CHECK(std::abs(r.eigenvectors(2, 2)) == doctest::Approx(1));
}

TEST_CASE("sym_eig of [[2,1],[1,2]]") {
  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  const SymEigResult r = sym_eig(a);
  CHECK(r.eigenvalues(0) == doctest::Approx(3));
  CHECK(r.eigenvalues(1) == doctest::Approx(1));
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(r.eigenvectors(0, 0) == doctest::Approx(s));
  CHECK(r.eigenvectors(1, 0) == doctest::Approx(s));
  // first non-negligible component positive
  CHECK(r.eigenvectors(0, 1) == doctest::Approx(s));
  CHECK(r.eigenvectors(1, 1) == doctest::Approx(-s));
}

TEST_CASE("sym_eig matches the characteristic polynomial on all small integer matrices") {
  double worst = 0.0;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      for (int c = -2; c <= 2; ++c) {
        Matrix m(2, 2);
        m << a, b, b, c;
        const auto expect = oracle::generalized_eigenvalues(testutil::to_rows(m), oracle::identity(2));
        const Vector got = sym_eig(m).eigenvalues;
        for (int i = 0; i < 2; ++i) worst = std::max(worst, std::abs(got(i) - expect[static_cast<std::size_t>(i)]));
      }
  std::array<int, 6> e{};
  for (int code = 0; code < 15625; ++code) {
    int rest = code;
    for (int& v : e) {
      v = rest % 5 - 2;
      rest /= 5;
    }
    Matrix m(3, 3);
    m << e[0], e[1], e[2], e[1], e[3], e[4], e[2], e[4], e[5];
    const auto expect = oracle::generalized_eigenvalues(testutil::to_rows(m), oracle::identity(3));
    const Vector got = sym_eig(m).eigenvalues;
    for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(got(i) - expect[static_cast<std::size_t>(i)]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("sym_eig reconstruction and orthonormality on random input") {
  Rng rng(11);
  for (int n = 1; n <= 20; ++n) {
    const Matrix a = random_symmetric(n, rng);
    const SymEigResult r = sym_eig(a);
    const Matrix recon = r.eigenvectors * r.eigenvalues.asDiagonal() * r.eigenvectors.transpose();
    CHECK((recon - a).norm() <= 1e-8 * a.norm());
    CHECK((r.eigenvectors.transpose() * r.eigenvectors - Matrix::Identity(n, n)).norm() < 1e-8);
    for (Eigen::Index i = 1; i < n; ++i) CHECK(r.eigenvalues(i - 1) >= r.eigenvalues(i));
  }
}

TEST_CASE("sym_eig rejects asymmetric, non-finite and non-square input") {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  CHECK_THROWS_AS(sym_eig(a), Error);
  try {
    sym_eig(a);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kNotSymmetric);
  }
  Matrix nan = Matrix::Identity(2, 2);
  nan(0, 0) = std::nan("");
  try {
    sym_eig(nan);
    FAIL("expected NotFinite");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kNotFinite);
  }
  try {
    sym_eig(Matrix::Zero(2, 3));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDimensionMismatch);
  }
}

TEST_CASE("sym_eig tolerates asymmetry below the relative tolerance") {
  Matrix a(2, 2);
  a << 1, 1, 1 + 1e-13, 1;
  CHECK_NOTHROW(sym_eig(a));
}

TEST_CASE("generalized eigenproblem with b = I reduces to sym_eig") {
  Matrix a = Vector(Eigen::Vector2d(4, 1)).asDiagonal();
  const GenEigResult r = solve_generalized_eig(a, Matrix::Identity(2, 2));
  CHECK(r.eigenvalues(0) == doctest::Approx(4));
  CHECK(r.eigenvalues(1) == doctest::Approx(1));
  CHECK(r.ridge == 0.0);
}

TEST_CASE("generalized eigenvalues of diag(2,2) against diag(2,1)") {
  Matrix a = 2.0 * Matrix::Identity(2, 2);
  Matrix b = Vector(Eigen::Vector2d(2, 1)).asDiagonal();
  const GenEigResult r = solve_generalized_eig(a, b);
  CHECK(r.eigenvalues(0) == doctest::Approx(2));
  CHECK(r.eigenvalues(1) == doctest::Approx(1));
}

TEST_CASE("generalized eigenpairs on random SPD pairs satisfy residual and b-orthonormality") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 2 + trial % 15;
    const Matrix a = random_symmetric(n, rng);
    const Matrix b = random_spd(n, rng);
    const GenEigResult r = solve_generalized_eig(a, b);
    CHECK(max_residual(a, b, r) <= 1e-8 * (a.norm() + b.norm()));
    const Matrix gram = r.eigenvectors.transpose() * b * r.eigenvectors;
    CHECK((gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("random 3x3 SPD pairs match the determinant root oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix a = random_spd(3, rng), b = random_spd(3, rng);
    const auto expect = oracle::generalized_eigenvalues(testutil::to_rows(a), testutil::to_rows(b));
    const Vector got = solve_generalized_eig(a, b).eigenvalues;
    for (int i = 0; i < 3; ++i)
      CHECK(got(i) == doctest::Approx(expect[static_cast<std::size_t>(i)]).epsilon(1e-6));
  }
}

TEST_CASE("singular b is rescued by the ridge") {
  Matrix b = Matrix::Zero(3, 3);
  b(0, 0) = 1.0;
  Matrix a = Matrix::Identity(3, 3);
  const GenEigResult r = solve_generalized_eig(a, b);
  CHECK(r.ridge == doctest::Approx(1e-6 / 3.0));
  CHECK(all_finite(r.eigenvectors));
  const Matrix br = b + r.ridge * Matrix::Identity(3, 3);
  CHECK((r.whitener * r.whitener.transpose() - br).norm() < 1e-12);
}

TEST_CASE("zero b falls back to the scale of a") {
  const GenEigResult r = solve_generalized_eig(2.0 * Matrix::Identity(2, 2), Matrix::Zero(2, 2));
  CHECK(r.ridge > 0.0);
  CHECK(all_finite(r.eigenvalues));
}

TEST_CASE("indefinite b is rejected") {
  Matrix b = Vector(Eigen::Vector2d(1, -1)).asDiagonal();
  try {
    solve_generalized_eig(Matrix::Identity(2, 2), b);
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kNotPositiveDefinite);
  }
}

TEST_CASE("generalized solver rejects mismatched shapes") {
  try {
    solve_generalized_eig(Matrix::Identity(2, 2), Matrix::Identity(3, 3));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDimensionMismatch);
  }
}

TEST_CASE("trace_ratio worked examples") {
  Rng rng(3);
  const Matrix s = random_spd(4, rng);
  const Matrix w = testutil::random_matrix(4, 2, rng);
  CHECK(trace_ratio(w, s, s) == doctest::Approx(2.0));
  CHECK(trace_ratio(w, Matrix::Zero(4, 4), s) == 0.0);
  Matrix num = Vector(Eigen::Vector2d(1, 2)).asDiagonal();
  Matrix den = Vector(Eigen::Vector2d(2, 1)).asDiagonal();
  CHECK(trace_ratio(Matrix::Identity(2, 2), num, den) == doctest::Approx(2.5));
}

TEST_CASE("trace_ratio is invariant to invertible right transforms") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix num = random_spd(5, rng), den = random_spd(5, rng);
    const Matrix w = testutil::random_matrix(5, 3, rng);
    Matrix t = testutil::random_matrix(3, 3, rng);
    t += 3.0 * Matrix::Identity(3, 3);
    const double base = trace_ratio(w, num, den);
    CHECK(std::abs(trace_ratio(w * t, num, den) - base) <= 1e-8 * std::abs(base));
  }
}

TEST_CASE("trace_ratio with a projection annihilating den is singular") {
  Matrix den = Matrix::Zero(2, 2);
  den(0, 0) = 1.0;
  Matrix w(2, 1);
  w << 0, 1;
  try {
    trace_ratio(w, Matrix::Identity(2, 2), den);
    FAIL("expected SingularProjection");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kSingularProjection);
  }
}

TEST_CASE("eigen decompositions are deterministic") {
  Rng rng(1);
  const Matrix a = random_symmetric(6, rng), b = random_spd(6, rng);
  const GenEigResult r1 = solve_generalized_eig(a, b), r2 = solve_generalized_eig(a, b);
  CHECK(r1.eigenvectors == r2.eigenvectors);
  CHECK(r1.eigenvalues == r2.eigenvalues);
}

TEST_CASE("psd_factor reproduces PSD input") {
  Rng rng(2);
  const Matrix g = testutil::random_matrix(4, 2, rng);
  const Matrix a = g * g.transpose();
  const Matrix f = psd_factor(a);
  CHECK((f * f.transpose() - a).norm() < 1e-10 * a.norm());
}

}
