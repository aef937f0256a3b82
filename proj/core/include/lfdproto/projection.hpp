#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lfdproto/linalg.hpp"
#include "lfdproto/scatter.hpp"

namespace lfdproto {

enum class Extractor { kIdentity, kFda, kLfda };
enum class ProjectionMode { kShared, kPerClass };

/// Feature projection z = matrix^T x, matrix is m x n. Column i of the matrix
/// produces output coordinate i.
struct Projection {
  Matrix matrix;
  Extractor extractor = Extractor::kIdentity;
  ProjectionMode mode = ProjectionMode::kShared;
  int class_id = -1;  // owning class in PerClass mode
  int dim_requested = 0;

  Eigen::Index input_dim() const { return matrix.rows(); }
  Eigen::Index output_dim() const { return matrix.cols(); }
};

Projection identity_projection(Eigen::Index m);

/// Top-n generalized eigenvectors of S_bet v = lambda S_wit v (moment form).
/// n must satisfy 1 <= n <= min(C - 1, m) and not exceed the rank of S_bet.
Projection fda_projection(const LabeledSet& s, int n);

/// Top-n generalized eigenvectors of S^A_bet v = lambda S^A_wit v.
/// 1 <= n <= min(kC - 1, m).
Projection lfda_projection(const LabeledSet& s, const AffinityMatrix& a, int n);

/// One projection per class c: top-n generalized eigenvectors of
/// S^A_bet v = lambda W_c v, where W_c is the affinity-weighted within scatter
/// of class c alone.
std::vector<Projection> lfda_projection_per_class(const LabeledSet& s, const AffinityMatrix& a, int n);

Vector project(const Projection& f, const Vector& x);

/// Projects every row of `points`.
Matrix project_rows(const Projection& f, const Matrix& points);

enum class ExtractorKind { kIdentity, kFda, kLfdaShared, kLfdaPerClass };

std::string_view extractor_name(ExtractorKind kind);
ExtractorKind parse_extractor(std::string_view name);

struct ExtractorConfig {
  ExtractorKind kind = ExtractorKind::kLfdaPerClass;
  int dim = 0;                 // 0 selects the extractor's default
  double bandwidth = 1.0;      // affinity kernel bandwidth
  bool local_scaling = false;  // per-point bandwidth from same-class neighbors
  int local_neighbor = 7;
};

/// Default output dimension: m (Identity), min(C - 1, m) (FDA) or
/// min(kC - 1, m) (LFDA).
int default_dim(ExtractorKind kind, const LabeledSet& support);

/// Either a single shared projection or one projection per class.
struct ProjectionSet {
  std::vector<Projection> projections;
  ProjectionMode mode = ProjectionMode::kShared;

  const Projection& for_class(int c) const;
};

AffinityMatrix make_affinity(const LabeledSet& support, const ExtractorConfig& cfg);

/// Computes the projection(s) from the support set only.
ProjectionSet build_projections(const LabeledSet& support, const ExtractorConfig& cfg);

ProjectedCovariances projected_covariances(const LabeledSet& s, const Projection& f);

}  // namespace lfdproto
