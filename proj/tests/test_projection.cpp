#include <doctest.h>

#include <lfdproto/datagen.hpp>
#include <lfdproto/error.hpp>
#include <lfdproto/projection.hpp>

#include "helpers.hpp"

using namespace lfdproto;

namespace {

double ratio_within_between(const LabeledSet& s, const Matrix& f) {
  const ScatterPair p = fda_scatter(s);
  return trace_ratio(f, p.within, p.between);
}

// Largest principal angle cosine deficit between the column spans of a and b.
double subspace_distance(const Matrix& a, const Matrix& b) {
  const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), b.cols());
  const Vector s = Eigen::JacobiSVD<Matrix>(qa.transpose() * qb).singularValues();
  return 1.0 - s.minCoeff();
}

}  // namespace

TEST_SUITE("projection") {

TEST_CASE("identity projection") {
  const Projection f = identity_projection(3);
  CHECK(f.matrix == Matrix::Identity(3, 3));
  const Vector x = Eigen::Vector3d(1.5, -2, 7);
  CHECK(project(f, x) == x);
  CHECK_THROWS_AS(identity_projection(0), Error);
}

TEST_CASE("trace ratio under the identity equals the unprojected ratio") {
  Rng rng(1);
  const Matrix a = testutil::random_spd(3, rng), b = testutil::random_spd(3, rng);
  CHECK(trace_ratio(identity_projection(3).matrix, a, b) == doctest::Approx((b.inverse() * a).trace()));
}

TEST_CASE("fda in one dimension returns the sign-normalized direction") {
  const LabeledSet s = testutil::set_1d({0, 2, 4, 6}, {0, 0, 1, 1}, 2);
  const Projection f = fda_projection(s, 1);
  CHECK(f.matrix.rows() == 1);
  CHECK(f.matrix(0, 0) > 0.0);
}

TEST_CASE("fda finds the separating axis under anisotropic noise") {
  Rng rng(2);
  const LabeledSet s = testutil::gaussian_set({Eigen::Vector2d(-3, 0), Eigen::Vector2d(3, 0)},
                                              Eigen::Vector2d(std::sqrt(0.1), std::sqrt(10.0)), 50, rng);
  const Projection f = fda_projection(s, 1);
  const Vector v = f.matrix.col(0).normalized();
  CHECK(std::abs(v(0)) > 0.99);
}

TEST_CASE("fda rejects dimensions above C - 1 and the between-scatter rank") {
  Rng rng(3);
  const LabeledSet two = testutil::gaussian_set({Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0)}, Vector::Ones(2), 5, rng);
  try {
    fda_projection(two, 2);
    FAIL("expected DimensionTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDimensionTooLarge);
  }
  // exact collinear means: between scatter has rank 1
  LabeledSet s;
  s.class_count = 3;
  s.points.resize(6, 2);
  s.points << -0.5, 1, 0.5, -1, 0.5, 1, 1.5, -1, 1.5, 1, 2.5, -1;
  s.labels = {0, 0, 1, 1, 2, 2};
  CHECK_NOTHROW(fda_projection(s, 1));
  try {
    fda_projection(s, 2);
    FAIL("expected DimensionTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDimensionTooLarge);
  }
  CHECK_THROWS_AS(fda_projection(s, 0), Error);
}

TEST_CASE("lfda with an all-ones affinity spans the fda subspace") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vector> means;
    for (int c = 0; c < 4; ++c) means.push_back(2.0 * testutil::random_matrix(5, 1, rng));
    const LabeledSet s = testutil::gaussian_set(means, Vector::Ones(5), 6, rng);
    AffinityMatrix ones{Matrix::Ones(s.size(), s.size()), 1.0, false};
    for (int n = 1; n <= 3; ++n)
      CHECK(subspace_distance(lfda_projection(s, ones, n).matrix, fda_projection(s, n).matrix) < 1e-6);
  }
}

TEST_CASE("lfda beats fda on the sandwiched class") {
  const Task t = sample_task(sandwich_spec(20, 1), 17);
  const Projection fda = fda_projection(t.support, 1);
  const Projection lfda = lfda_projection(t.support, affinity(t.support), 1);
  // measured against the local scatter pair, which is what LFDA optimizes
  const ScatterPair local = lfda_scatter(t.support, affinity(t.support));
  CHECK(trace_ratio(lfda.matrix, local.within, local.between) < trace_ratio(fda.matrix, local.within, local.between));
}

TEST_CASE("one-shot five-way lfda has four dimensions available") {
  Rng rng(5);
  std::vector<Vector> means;
  for (int c = 0; c < 5; ++c) means.push_back(testutil::random_matrix(8, 1, rng));
  const LabeledSet s = testutil::gaussian_set(means, Vector::Ones(8), 1, rng);
  ExtractorConfig cfg;
  cfg.kind = ExtractorKind::kLfdaShared;
  CHECK(default_dim(cfg.kind, s) == 4);
  CHECK(lfda_projection(s, affinity(s), 4).matrix.cols() == 4);
  try {
    lfda_projection(s, affinity(s), 5);
    FAIL("expected DimensionTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDimensionTooLarge);
  }
  CHECK(lfda_projection_per_class(s, affinity(s), 4).size() == 5);
}

TEST_CASE("projection rejects mismatched dimension") {
  try {
    project(identity_projection(2), Eigen::Vector3d(1, 2, 3));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDimensionMismatch);
  }
}

TEST_CASE("orthonormal projections contract and all projections are linear") {
  Rng rng(6);
  const Matrix q = Eigen::HouseholderQR<Matrix>(testutil::random_matrix(5, 5, rng)).householderQ();
  Projection f{q.leftCols(2), Extractor::kLfda, ProjectionMode::kShared, -1, 2};
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = testutil::random_matrix(5, 1, rng), y = testutil::random_matrix(5, 1, rng);
    CHECK(project(f, x).norm() <= x.norm() * (1 + 1e-12));
    const Vector lhs = project(f, 2.5 * x - 0.75 * y);
    const Vector rhs = 2.5 * project(f, x) - 0.75 * project(f, y);
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, lhs.norm()));
  }
}

TEST_CASE("projecting the mean equals the mean of projections") {
  Rng rng(7);
  const Matrix pts = testutil::random_matrix(10, 4, rng);
  Projection f{testutil::random_matrix(4, 2, rng), Extractor::kFda, ProjectionMode::kShared, -1, 2};
  const Vector a = project(f, pts.colwise().mean().transpose());
  const Vector b = project_rows(f, pts).colwise().mean().transpose();
  CHECK((a - b).norm() <= 1e-12 * std::max(1.0, a.norm()));
}

TEST_CASE("one-dimensional projections beat random directions on their objective") {
  Rng rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Vector> means;
    for (int c = 0; c < 3; ++c) means.push_back(2.0 * testutil::random_matrix(4, 1, rng));
    const LabeledSet s = testutil::gaussian_set(means, Eigen::Vector4d(0.5, 1, 2, 3), 6, rng);
    const ScatterPair fda = fda_scatter(s);
    const AffinityMatrix a = affinity(s, 20.0);
    const ScatterPair local = lfda_scatter(s, a);
    const double fda_best = trace_ratio(fda_projection(s, 1).matrix, fda.within, fda.between);
    const double lfda_best = trace_ratio(lfda_projection(s, a, 1).matrix, local.within, local.between);
    for (int r = 0; r < 1000; ++r) {
      Vector v(4);
      for (int i = 0; i < 4; ++i) v(i) = normal(rng);
      v.normalize();
      CHECK(fda_best <= trace_ratio(v, fda.within, fda.between) * (1 + 1e-9));
      CHECK(lfda_best <= trace_ratio(v, local.within, local.between) * (1 + 1e-9));
    }
  }
}

TEST_CASE("shared lfda has a smaller covariance ratio than coordinate subsets") {
  Rng rng(9);
  int wins = 0;
  const int draws = 100;
  for (int d = 0; d < draws; ++d) {
    const Task t = sample_task(anisotropic_spec(6, 5, 5, 1), 1000 + static_cast<std::uint64_t>(d));
    ExtractorConfig cfg;
    cfg.kind = ExtractorKind::kLfdaShared;
    cfg.dim = 2;
    const Projection f = build_projections(t.support, cfg).projections.front();
    const ScatterPair local = lfda_scatter(t.support, affinity(t.support));
    const double lfda = trace_ratio(f.matrix, local.within, local.between);
    std::uniform_int_distribution<int> pick(0, 5);
    int i = pick(rng), j = pick(rng);
    while (j == i) j = pick(rng);
    Matrix axes = Matrix::Zero(6, 2);
    axes(i, 0) = axes(j, 1) = 1.0;
    if (lfda <= trace_ratio(axes, local.within, local.between) * (1 + 1e-9)) ++wins;
  }
  CHECK(wins >= 95);
}

TEST_CASE("build_projections is deterministic and respects the mode") {
  const Task t = sample_task(anisotropic_spec(4, 3, 5, 2), 3);
  ExtractorConfig per;
  per.kind = ExtractorKind::kLfdaPerClass;
  const ProjectionSet a = build_projections(t.support, per), b = build_projections(t.support, per);
  REQUIRE(a.projections.size() == 3);
  CHECK(a.mode == ProjectionMode::kPerClass);
  for (int c = 0; c < 3; ++c) {
    CHECK(a.for_class(c).matrix == b.for_class(c).matrix);
    CHECK(a.for_class(c).class_id == c);
  }
  ExtractorConfig shared;
  shared.kind = ExtractorKind::kFda;
  const ProjectionSet s = build_projections(t.support, shared);
  CHECK(s.mode == ProjectionMode::kShared);
  CHECK(s.for_class(2).matrix.cols() == 2);
}

TEST_CASE("extractor names round-trip") {
  for (ExtractorKind k : {ExtractorKind::kIdentity, ExtractorKind::kFda, ExtractorKind::kLfdaShared,
                          ExtractorKind::kLfdaPerClass})
    CHECK(parse_extractor(extractor_name(k)) == k);
  CHECK_THROWS_AS(parse_extractor("svd"), Error);
}

}
