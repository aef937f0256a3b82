#include "lfdproto/projection.hpp"

#include <algorithm>
#include <string>

#include "lfdproto/error.hpp"

namespace lfdproto {
namespace {

constexpr double kRankTolerance = 1e-10;

Matrix leading_columns(const GenEigResult& eig, int n) { return eig.eigenvectors.leftCols(n); }

void check_dim(int n, Eigen::Index cap, const char* what) {
  require(n >= 1, Errc::kInvalidArgument, std::string(what) + ": requested dimension must be >= 1");
  require(n <= cap, Errc::kDimensionTooLarge,
          std::string(what) + ": requested dimension " + std::to_string(n) +
              " exceeds the available " + std::to_string(cap));
}

}  // namespace

Projection identity_projection(Eigen::Index m) {
  require(m >= 1, Errc::kInvalidArgument, "identity projection needs m >= 1");
  return Projection{Matrix::Identity(m, m), Extractor::kIdentity, ProjectionMode::kShared, -1,
                    static_cast<int>(m)};
}

Projection fda_projection(const LabeledSet& s, int n) {
  s.validate();
  check_dim(n, std::min<Eigen::Index>(s.class_count - 1, s.dim()), "fda_projection");
  const ScatterPair sc = fda_scatter(s);

  const Vector between_spectrum = sym_eig(sc.between).eigenvalues;
  const double top = std::max(between_spectrum(0), 0.0);
  const auto rank = (between_spectrum.array() > kRankTolerance * top).count();
  require(top > 0.0 && rank >= n, Errc::kDimensionTooLarge,
          "fda_projection: between-class scatter has rank " + std::to_string(top > 0.0 ? rank : 0) +
              " < requested " + std::to_string(n));

  const GenEigResult eig = solve_generalized_eig(sc.between, sc.within);
  return Projection{leading_columns(eig, n), Extractor::kFda, ProjectionMode::kShared, -1, n};
}

Projection lfda_projection(const LabeledSet& s, const AffinityMatrix& a, int n) {
  s.validate();
  const Eigen::Index k = s.per_class_count();
  check_dim(n, std::min<Eigen::Index>(k * s.class_count - 1, s.dim()), "lfda_projection");
  const ScatterPair sc = lfda_scatter(s, a);
  const GenEigResult eig = solve_generalized_eig(sc.between, sc.within);
  return Projection{leading_columns(eig, n), Extractor::kLfda, ProjectionMode::kShared, -1, n};
}

std::vector<Projection> lfda_projection_per_class(const LabeledSet& s, const AffinityMatrix& a, int n) {
  s.validate();
  const Eigen::Index k = s.per_class_count();
  check_dim(n, std::min<Eigen::Index>(k * s.class_count - 1, s.dim()), "lfda_projection_per_class");
  const ScatterPair sc = lfda_scatter(s, a);
  std::vector<Projection> out;
  out.reserve(static_cast<std::size_t>(s.class_count));
  for (int c = 0; c < s.class_count; ++c) {
    const GenEigResult eig = solve_generalized_eig(sc.between, class_local_within(s, a, c));
    out.push_back(Projection{leading_columns(eig, n), Extractor::kLfda, ProjectionMode::kPerClass, c, n});
  }
  return out;
}

Vector project(const Projection& f, const Vector& x) {
  require(x.size() == f.input_dim(), Errc::kDimensionMismatch,
          "vector dimension does not match projection input dimension");
  return f.matrix.transpose() * x;
}

Matrix project_rows(const Projection& f, const Matrix& points) {
  require(points.cols() == f.input_dim(), Errc::kDimensionMismatch,
          "point dimension does not match projection input dimension");
  return points * f.matrix;
}

std::string_view extractor_name(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::kIdentity: return "identity";
    case ExtractorKind::kFda: return "fda";
    case ExtractorKind::kLfdaShared: return "lfda-shared";
    case ExtractorKind::kLfdaPerClass: return "lfda-perclass";
  }
  return "identity";
}

ExtractorKind parse_extractor(std::string_view name) {
  if (name == "identity" || name == "proto" || name == "protonet") return ExtractorKind::kIdentity;
  if (name == "fda") return ExtractorKind::kFda;
  if (name == "lfda-shared") return ExtractorKind::kLfdaShared;
  if (name == "lfda-perclass" || name == "lfda") return ExtractorKind::kLfdaPerClass;
  fail(Errc::kInvalidArgument, "unknown extractor '" + std::string(name) + "'");
}

int default_dim(ExtractorKind kind, const LabeledSet& support) {
  const auto m = support.dim();
  switch (kind) {
    case ExtractorKind::kIdentity: return static_cast<int>(m);
    case ExtractorKind::kFda:
      return static_cast<int>(std::min<Eigen::Index>(support.class_count - 1, m));
    case ExtractorKind::kLfdaShared:
    case ExtractorKind::kLfdaPerClass:
      return static_cast<int>(
          std::min<Eigen::Index>(support.per_class_count() * support.class_count - 1, m));
  }
  return static_cast<int>(m);
}

const Projection& ProjectionSet::for_class(int c) const {
  if (mode == ProjectionMode::kShared) return projections.front();
  require(c >= 0 && static_cast<std::size_t>(c) < projections.size(), Errc::kInvalidArgument,
          "no projection for class " + std::to_string(c));
  return projections[static_cast<std::size_t>(c)];
}

AffinityMatrix make_affinity(const LabeledSet& support, const ExtractorConfig& cfg) {
  return cfg.local_scaling ? affinity_local_scaling(support, cfg.local_neighbor, cfg.bandwidth)
                           : affinity(support, cfg.bandwidth);
}

ProjectionSet build_projections(const LabeledSet& support, const ExtractorConfig& cfg) {
  support.validate();
  const int n = cfg.dim > 0 ? cfg.dim : default_dim(cfg.kind, support);
  switch (cfg.kind) {
    case ExtractorKind::kIdentity:
      return ProjectionSet{{identity_projection(support.dim())}, ProjectionMode::kShared};
    case ExtractorKind::kFda:
      return ProjectionSet{{fda_projection(support, n)}, ProjectionMode::kShared};
    case ExtractorKind::kLfdaShared:
      return ProjectionSet{{lfda_projection(support, make_affinity(support, cfg), n)},
                           ProjectionMode::kShared};
    case ExtractorKind::kLfdaPerClass:
      return ProjectionSet{lfda_projection_per_class(support, make_affinity(support, cfg), n),
                           ProjectionMode::kPerClass};
  }
  fail(Errc::kInvalidArgument, "unknown extractor");
}

ProjectedCovariances projected_covariances(const LabeledSet& s, const Projection& f) {
  return projected_covariances(s, f.matrix);
}

}  // namespace lfdproto
