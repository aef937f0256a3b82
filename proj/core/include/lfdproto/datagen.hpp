#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lfdproto/embedder.hpp"
#include "lfdproto/episode.hpp"
#include "lfdproto/linalg.hpp"
#include "lfdproto/projection.hpp"
#include "lfdproto/rng.hpp"

namespace lfdproto {

/// Mixture of components for one class; offsets are relative to the class
/// mean and each component adds the shared within-class noise.
struct ClassMixture {
  std::vector<Vector> offsets;
  std::vector<double> weights;
};

/// Gaussian generative model for synthetic tasks: class means
/// mu_c ~ N(mean, class_mean_covariance) (or fixed), points
/// x ~ N(mu_c + offset, within_class_covariance).
struct SyntheticSpec {
  int m = 2;
  int C = 2;
  int k = 5;
  int M = 15;
  Vector mean;
  Matrix class_mean_covariance;
  Matrix within_class_covariance;
  std::uint64_t seed = 0;
  std::optional<std::vector<Vector>> fixed_class_means;
  std::optional<std::vector<ClassMixture>> multimodal;  // one entry per class

  void validate() const;
};

/// Caches covariance factors so repeated sampling from one spec is cheap.
class TaskSampler {
 public:
  explicit TaskSampler(SyntheticSpec spec);

  Task sample(std::uint64_t seed) const;
  std::vector<Vector> sample_class_means(Rng& rng) const;
  /// `count` points of class c around the given class mean.
  Matrix sample_points(int c, const Vector& class_mean, Eigen::Index count, Rng& rng) const;

  const SyntheticSpec& spec() const { return spec_; }

 private:
  SyntheticSpec spec_;
  Matrix mean_factor_;
  Matrix within_factor_;
};

/// Deterministic in (spec, seed).
Task sample_task(const SyntheticSpec& spec, std::uint64_t seed);

/// Labeled feature records loaded from CSV `label,f0,...,f{m-1}`.
struct FeatureDataset {
  Matrix features;
  std::vector<int> labels;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  /// Sorted distinct labels with their record ids (ascending).
  std::vector<std::pair<int, std::vector<std::size_t>>> class_index() const;
  void validate() const;
};

FeatureDataset read_dataset_csv(std::istream& in);
FeatureDataset load_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const FeatureDataset& ds);

/// Draws `classes` class means from the spec, then `per_class` points each.
FeatureDataset make_synthetic_dataset(const SyntheticSpec& spec, int classes, int per_class,
                                      std::uint64_t seed);

struct SampledEpisode {
  Task task;
  std::vector<int> classes;               // dataset label of task class c
  std::vector<std::size_t> support_ids;   // dataset record per support row
  std::vector<std::size_t> query_ids;     // dataset record per query row
};

/// Uniformly picks C eligible classes (>= k + M records) without replacement,
/// then k + M records per class without replacement.
SampledEpisode sample_episode(const FeatureDataset& ds, int C, int k, int M, std::uint64_t seed);

struct MixupConfig {
  double lambda = 0.0;
  Vector target;  // x_mix
};

/// (1 - lambda) x + lambda x_mix.
Vector mixup(const Vector& x, const MixupConfig& cfg);
Matrix mixup_rows(const Matrix& x, const MixupConfig& cfg);

struct CovRatioConfig {
  std::vector<double> lambda_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<ExtractorConfig> extractors;
  int C = 10;
  int k = 5;
  int episodes = 50;
  /// Applied after mixup; mixup acts on the raw records.
  Embedder embedder = Embedder::identity(1);
  /// x_mix; the dataset mean when unset.
  std::optional<Vector> mix_target;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct CovRatioRow {
  double lambda = 0.0;
  std::string extractor;
  double trace_ratio = 0.0;  // mean over episodes
  double standard_error = 0.0;
};

/// Mean trace ratio Tr(Sigma_F^{-1} Sigma_{F,c}) per (lambda, extractor),
/// averaged over classes and over the same episodes at every lambda.
std::vector<CovRatioRow> cov_ratio_sweep(const FeatureDataset& ds, const CovRatioConfig& cfg);

/// Covariance ratio of one embedded support set under one extractor.
double support_trace_ratio(const LabeledSet& support, const ExtractorConfig& extractor);

// Presets used by the CLI, tests and benchmarks.

/// Classes separated along low-variance axes, within-class spread dominated by
/// high-variance axes.
SyntheticSpec anisotropic_spec(int m, int C, int k, int M);

/// Two classes in 2D: class 0 split into clusters at (-4, 0) and (4, 0),
/// class 1 centered between them at the origin.
SyntheticSpec sandwich_spec(int k, int M);

/// Anisotropic spec seen through a fixed random rotation, so class structure is
/// linearly entangled across all input coordinates.
SyntheticSpec entangled_spec(int m, int C, int k, int M, std::uint64_t rotation_seed);

/// Class means N(0, I), within-class standard deviations spaced geometrically
/// from 1.5 down to 0.15 across the m axes.
SyntheticSpec mixup_spec(int m, int C, int k, int M);

}  // namespace lfdproto
