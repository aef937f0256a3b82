#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "lfdproto/linalg.hpp"
#include "lfdproto/projection.hpp"
#include "lfdproto/scatter.hpp"

namespace lfdproto {

/// One few-shot episode: C classes with k support and M query points each.
struct Task {
  LabeledSet support;
  LabeledSet query;

  /// Shared C and m, exactly k support and M query points per class.
  void validate() const;

  int classes() const { return support.class_count; }
  Eigen::Index shots() const { return support.per_class_count(); }
  Eigen::Index queries_per_class() const { return query.per_class_count(); }
};

struct PrototypeSet {
  std::vector<Vector> vectors;  // one per class, in that class's projected space
  ProjectionSet projections;
};

/// Per-class mean of projected support vectors.
PrototypeSet prototypes(const LabeledSet& support, const ProjectionSet& projections);

double sq_dist(const Vector& u, const Vector& v);

enum class LossVariant {
  kPaper,    // d_c + log sum_{s != c} exp(-d_s)
  kSoftmax,  // d_c + log sum_{s} exp(-d_s), i.e. -log softmax
};

std::string_view loss_name(LossVariant v);
LossVariant parse_loss(std::string_view name);

/// Loss from the vector of squared distances to all prototypes.
double loss_from_distances(std::span<const double> distances, int true_class, LossVariant variant);

/// d/d(distance_s) of loss_from_distances.
std::vector<double> loss_distance_gradient(std::span<const double> distances, int true_class,
                                           LossVariant variant);

/// d(q, true) + log sum_{others} exp(-d(q, other)), max-shifted.
double loss_g(const Vector& query_proj, const Vector& proto_true, std::span<const Vector> protos_other);

struct Classification {
  int label = 0;
  double alpha = 0.0;  // runner-up distance minus chosen distance, >= 0
};

/// argmin over distances, ties to the lowest class id.
Classification classify_distances(std::span<const double> distances);

/// Nearest prototype for an already projected query (shared projection).
Classification classify(const Vector& query_proj, const PrototypeSet& protos);

/// Squared distance from a raw query to every prototype; in PerClass mode the
/// query is projected with each class's own projection.
std::vector<double> query_distances(const Vector& query, const PrototypeSet& protos);

struct EpisodeConfig {
  ExtractorConfig extractor;
  LossVariant loss = LossVariant::kPaper;
};

struct EpisodeResult {
  std::vector<int> predictions;  // one per query row
  std::vector<double> alpha_values;
  std::vector<double> losses;
  double mean_loss = 0.0;
  double accuracy = 0.0;
  double task_loss = 0.0;  // mean 0-1 loss; accuracy + task_loss == 1
};

/// Projections and prototypes come from the support set only.
EpisodeResult run_episode(const Task& t, const EpisodeConfig& cfg);

/// Same as above with externally supplied projections.
EpisodeResult run_episode(const Task& t, const ProjectionSet& projections, LossVariant loss);

/// (1/N) sum of per-task mean losses.
double empirical_loss(std::span<const Task> tasks, const EpisodeConfig& cfg);

}  // namespace lfdproto
