#pragma once

#include <vector>

#include "lfdproto/linalg.hpp"

namespace lfdproto {

/// Points (one per row) in R^m with integer class labels in [0, class_count).
struct LabeledSet {
  Matrix points;
  std::vector<int> labels;
  int class_count = 0;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }

  /// Throws DimensionMismatch / InvalidArgument / EmptyClass / NotFinite.
  void validate() const;

  std::vector<Eigen::Index> class_indices(int c) const;
  std::vector<Eigen::Index> class_sizes() const;

  /// Shared per-class count k; throws UnequalClassSizes otherwise.
  Eigen::Index per_class_count() const;
};

struct ClassMeans {
  std::vector<Vector> per_class;
  Vector global;
};

ClassMeans class_means(const LabeledSet& s);

enum class ScatterKind { kFda, kLfda };

struct ScatterPair {
  Matrix within;
  Matrix between;
  ScatterKind kind = ScatterKind::kFda;
};

/// Moment-form Fisher scatter with 1/(kC) within and 1/C between
/// normalization. Requires equal class sizes.
ScatterPair fda_scatter(const LabeledSet& s);

/// Pairwise-form scatter (1/2) sum_{ij} P_ij (x_i - x_j)(x_i - x_j)^T with
/// P^w = 1/k for same-class pairs and P^b = 1/(kC) - 1/k (same class),
/// 1/(kC) (different class). Equals kC times fda_scatter.
///
/// The same-class between weight is negative. With the opposite sign the
/// pairwise between matrix is no longer proportional to the moment-form one;
/// the negative convention is the one that yields a PSD between scatter equal
/// to kC * S_bet.
ScatterPair pairwise_scatter(const LabeledSet& s);

struct AffinityMatrix {
  Matrix entries;
  double bandwidth = 1.0;
  bool local_scaling = false;
};

/// A_ij = exp(-||x_i - x_j||^2 / bandwidth). bandwidth = 1 is the bare
/// squared-exponential kernel.
AffinityMatrix affinity(const LabeledSet& s, double bandwidth = 1.0);

/// Local-scaling affinity A_ij = exp(-||x_i - x_j||^2 / (bandwidth s_i s_j))
/// where s_i is the distance from x_i to its `neighbor`-th nearest same-class
/// point (clamped to the class size; 1 when no neighbor exists).
AffinityMatrix affinity_local_scaling(const LabeledSet& s, int neighbor = 7, double bandwidth = 1.0);

/// Affinity-weighted pairwise scatter: P^w = A_ij / k (same class),
/// P^b = A_ij (1/(kC) - 1/k) (same class), 1/(kC) (different class).
ScatterPair lfda_scatter(const LabeledSet& s, const AffinityMatrix& a);

/// Within part of lfda_scatter restricted to pairs inside class c.
Matrix class_local_within(const LabeledSet& s, const AffinityMatrix& a, int c);

/// (1/2) sum_{ij} w_ij (x_i - x_j)(x_i - x_j)^T for a symmetric weight matrix.
Matrix weighted_pair_scatter(const Matrix& points, const Matrix& weights);

/// Per-class covariance (1/k_c) sum_i (x_i - mu_c)(x_i - mu_c)^T.
std::vector<Matrix> class_covariances(const LabeledSet& s);

struct ProjectedCovariances {
  Matrix between;               // Sigma_F
  std::vector<Matrix> within;   // Sigma_{F,c}, one per class
};

/// Covariances of the projected points z = f^T x: Sigma_F is the uniform
/// average over classes of (f^T mu_c - f^T mu)(...)^T (the two-class form
/// carries the factor 1/2) and Sigma_{F,c} the class-c covariance.
ProjectedCovariances projected_covariances(const LabeledSet& s, const Matrix& f);

}  // namespace lfdproto
