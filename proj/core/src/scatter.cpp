#include "lfdproto/scatter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lfdproto/error.hpp"

namespace lfdproto {

void LabeledSet::validate() const {
  require(points.rows() >= 1 && points.cols() >= 1, Errc::kInvalidArgument,
          "labeled set must contain at least one point of dimension >= 1");
  require(static_cast<Eigen::Index>(labels.size()) == points.rows(), Errc::kDimensionMismatch,
          "label count differs from point count");
  require(class_count >= 1, Errc::kInvalidArgument, "class_count must be >= 1");
  require(points.allFinite(), Errc::kNotFinite, "labeled set has NaN or Inf entries");
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(class_count), 0);
  for (int label : labels) {
    require(label >= 0 && label < class_count, Errc::kInvalidArgument,
            "label " + std::to_string(label) + " outside [0, class_count)");
    ++counts[static_cast<std::size_t>(label)];
  }
  for (int c = 0; c < class_count; ++c) {
    require(counts[static_cast<std::size_t>(c)] > 0, Errc::kEmptyClass,
            "class " + std::to_string(c) + " has no points");
  }
}

std::vector<Eigen::Index> LabeledSet::class_indices(int c) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == c) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

std::vector<Eigen::Index> LabeledSet::class_sizes() const {
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(std::max(class_count, 0)), 0);
  for (int label : labels) {
    if (label >= 0 && label < class_count) ++counts[static_cast<std::size_t>(label)];
  }
  return counts;
}

Eigen::Index LabeledSet::per_class_count() const {
  const auto counts = class_sizes();
  require(!counts.empty(), Errc::kInvalidArgument, "labeled set has no classes");
  for (auto n : counts) {
    require(n == counts.front(), Errc::kUnequalClassSizes,
            "classes have unequal sizes; the fixed-k scatter forms require equal k");
  }
  return counts.front();
}

ClassMeans class_means(const LabeledSet& s) {
  s.validate();
  ClassMeans out;
  out.per_class.assign(static_cast<std::size_t>(s.class_count), Vector::Zero(s.dim()));
  const auto counts = s.class_sizes();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    out.per_class[static_cast<std::size_t>(s.labels[static_cast<std::size_t>(i)])] +=
        s.points.row(i).transpose();
  }
  for (std::size_t c = 0; c < out.per_class.size(); ++c) {
    out.per_class[c] /= static_cast<double>(counts[c]);
  }
  out.global = s.points.colwise().mean().transpose();
  return out;
}

ScatterPair fda_scatter(const LabeledSet& s) {
  s.validate();
  const Eigen::Index k = s.per_class_count();
  const double total = static_cast<double>(k * s.class_count);
  const ClassMeans means = class_means(s);

  ScatterPair out{Matrix::Zero(s.dim(), s.dim()), Matrix::Zero(s.dim(), s.dim()), ScatterKind::kFda};
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const Vector d = s.points.row(i).transpose() -
                     means.per_class[static_cast<std::size_t>(s.labels[static_cast<std::size_t>(i)])];
    out.within.noalias() += d * d.transpose();
  }
  out.within /= total;
  for (const Vector& mu_c : means.per_class) {
    const Vector d = mu_c - means.global;
    out.between.noalias() += d * d.transpose();
  }
  out.between /= static_cast<double>(s.class_count);
  return out;
}

Matrix weighted_pair_scatter(const Matrix& points, const Matrix& weights) {
  require(weights.rows() == points.rows() && weights.cols() == points.rows(),
          Errc::kDimensionMismatch, "pair weights must be n x n for n points");
  // (1/2) sum_ij w_ij (x_i - x_j)(x_i - x_j)^T = X^T (D - W) X for symmetric W.
  Matrix laplacian = -0.5 * (weights + weights.transpose());
  laplacian.diagonal() += 0.5 * (weights.rowwise().sum() + weights.colwise().sum().transpose());
  Matrix out = points.transpose() * laplacian * points;
  return 0.5 * (out + out.transpose());
}

namespace {

ScatterPair weighted_scatter(const LabeledSet& s, const Matrix* affinity_entries) {
  s.validate();
  const Eigen::Index k = s.per_class_count();
  const double kd = static_cast<double>(k);
  const double kc = kd * static_cast<double>(s.class_count);
  const Eigen::Index n = s.size();
  Matrix w_within = Matrix::Zero(n, n);
  Matrix w_between = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (s.labels[static_cast<std::size_t>(i)] == s.labels[static_cast<std::size_t>(j)]) {
        const double a = affinity_entries ? (*affinity_entries)(i, j) : 1.0;
        w_within(i, j) = a / kd;
        w_between(i, j) = a * (1.0 / kc - 1.0 / kd);
      } else {
        w_between(i, j) = 1.0 / kc;
      }
    }
  }
  return ScatterPair{weighted_pair_scatter(s.points, w_within),
                     weighted_pair_scatter(s.points, w_between),
                     affinity_entries ? ScatterKind::kLfda : ScatterKind::kFda};
}

}  // namespace

ScatterPair pairwise_scatter(const LabeledSet& s) { return weighted_scatter(s, nullptr); }

AffinityMatrix affinity(const LabeledSet& s, double bandwidth) {
  s.validate();
  require(bandwidth > 0.0 && std::isfinite(bandwidth), Errc::kInvalidArgument,
          "affinity bandwidth must be positive");
  const Eigen::Index n = s.size();
  AffinityMatrix out{Matrix::Ones(n, n), bandwidth, false};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (s.points.row(i) - s.points.row(j)).squaredNorm();
      out.entries(i, j) = out.entries(j, i) = std::exp(-d2 / bandwidth);
    }
  }
  return out;
}

AffinityMatrix affinity_local_scaling(const LabeledSet& s, int neighbor, double bandwidth) {
  s.validate();
  require(neighbor >= 1, Errc::kInvalidArgument, "local-scaling neighbor index must be >= 1");
  require(bandwidth > 0.0 && std::isfinite(bandwidth), Errc::kInvalidArgument,
          "affinity bandwidth must be positive");
  const Eigen::Index n = s.size();
  Vector scale = Vector::Ones(n);
  for (int c = 0; c < s.class_count; ++c) {
    const auto idx = s.class_indices(c);
    if (idx.size() < 2) continue;
    for (Eigen::Index i : idx) {
      std::vector<double> dists;
      for (Eigen::Index j : idx) {
        if (j != i) dists.push_back((s.points.row(i) - s.points.row(j)).norm());
      }
      std::sort(dists.begin(), dists.end());
      const std::size_t pick = std::min<std::size_t>(static_cast<std::size_t>(neighbor), dists.size()) - 1;
      if (dists[pick] > 0.0) scale(i) = dists[pick];
    }
  }
  AffinityMatrix out{Matrix::Ones(n, n), bandwidth, true};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (s.points.row(i) - s.points.row(j)).squaredNorm();
      out.entries(i, j) = out.entries(j, i) = std::exp(-d2 / (bandwidth * scale(i) * scale(j)));
    }
  }
  return out;
}

ScatterPair lfda_scatter(const LabeledSet& s, const AffinityMatrix& a) {
  require(a.entries.rows() == s.size() && a.entries.cols() == s.size(), Errc::kDimensionMismatch,
          "affinity dimension does not match point count");
  return weighted_scatter(s, &a.entries);
}

Matrix class_local_within(const LabeledSet& s, const AffinityMatrix& a, int c) {
  s.validate();
  require(a.entries.rows() == s.size() && a.entries.cols() == s.size(), Errc::kDimensionMismatch,
          "affinity dimension does not match point count");
  require(c >= 0 && c < s.class_count, Errc::kInvalidArgument, "class id out of range");
  const double kd = static_cast<double>(s.per_class_count());
  const Eigen::Index n = s.size();
  Matrix w = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s.labels[static_cast<std::size_t>(i)] != c) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (s.labels[static_cast<std::size_t>(j)] == c) w(i, j) = a.entries(i, j) / kd;
    }
  }
  return weighted_pair_scatter(s.points, w);
}

std::vector<Matrix> class_covariances(const LabeledSet& s) {
  const ClassMeans means = class_means(s);
  std::vector<Matrix> out(static_cast<std::size_t>(s.class_count), Matrix::Zero(s.dim(), s.dim()));
  const auto counts = s.class_sizes();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const auto c = static_cast<std::size_t>(s.labels[static_cast<std::size_t>(i)]);
    const Vector d = s.points.row(i).transpose() - means.per_class[c];
    out[c].noalias() += d * d.transpose();
  }
  for (std::size_t c = 0; c < out.size(); ++c) out[c] /= static_cast<double>(counts[c]);
  return out;
}

ProjectedCovariances projected_covariances(const LabeledSet& s, const Matrix& f) {
  s.validate();
  require(f.rows() == s.dim(), Errc::kDimensionMismatch,
          "projection rows must equal the feature dimension");
  const ClassMeans means = class_means(s);
  // Uniform average over class means; equal class sizes make mu the average of mu_c.
  Vector center = Vector::Zero(s.dim());
  for (const Vector& mu_c : means.per_class) center += mu_c;
  center /= static_cast<double>(s.class_count);

  ProjectedCovariances out;
  out.between = Matrix::Zero(f.cols(), f.cols());
  for (const Vector& mu_c : means.per_class) {
    const Vector d = f.transpose() * (mu_c - center);
    out.between.noalias() += d * d.transpose();
  }
  out.between /= static_cast<double>(s.class_count);
  for (const Matrix& cov : class_covariances(s)) out.within.push_back(f.transpose() * cov * f);
  return out;
}

}  // namespace lfdproto
