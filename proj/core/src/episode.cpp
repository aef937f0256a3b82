#include "lfdproto/episode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lfdproto/error.hpp"

namespace lfdproto {

void Task::validate() const {
  support.validate();
  query.validate();
  require(support.class_count == query.class_count, Errc::kDimensionMismatch,
          "support and query disagree on the class count");
  require(support.dim() == query.dim(), Errc::kDimensionMismatch,
          "support and query disagree on the feature dimension");
  support.per_class_count();
  query.per_class_count();
}

PrototypeSet prototypes(const LabeledSet& support, const ProjectionSet& projections) {
  support.validate();
  require(!projections.projections.empty(), Errc::kInvalidArgument, "no projections supplied");
  PrototypeSet out{{}, projections};
  out.vectors.reserve(static_cast<std::size_t>(support.class_count));
  const ClassMeans means = class_means(support);
  for (int c = 0; c < support.class_count; ++c) {
    const Projection& f = projections.for_class(c);
    require(f.input_dim() == support.dim(), Errc::kDimensionMismatch,
            "projection input dimension does not match the support");
    // Projection is linear, so the mean of projections is the projection of the mean.
    out.vectors.push_back(project(f, means.per_class[static_cast<std::size_t>(c)]));
  }
  return out;
}

double sq_dist(const Vector& u, const Vector& v) {
  require(u.size() == v.size(), Errc::kDimensionMismatch, "sq_dist operands differ in dimension");
  return (u - v).squaredNorm();
}

std::string_view loss_name(LossVariant v) { return v == LossVariant::kPaper ? "paper" : "softmax"; }

LossVariant parse_loss(std::string_view name) {
  if (name == "paper") return LossVariant::kPaper;
  if (name == "softmax" || name == "standard_softmax") return LossVariant::kSoftmax;
  fail(Errc::kInvalidArgument, "unknown loss variant '" + std::string(name) + "'");
}

namespace {

// log sum_{s in included} exp(-d_s), shifted by the smallest included distance.
double log_sum_exp_neg(std::span<const double> d, int skip) {
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < d.size(); ++s) {
    if (static_cast<int>(s) != skip) lowest = std::min(lowest, d[s]);
  }
  double acc = 0.0;
  for (std::size_t s = 0; s < d.size(); ++s) {
    if (static_cast<int>(s) != skip) acc += std::exp(-(d[s] - lowest));
  }
  return -lowest + std::log(acc);
}

void check_loss_args(std::span<const double> distances, int true_class, LossVariant variant) {
  require(true_class >= 0 && static_cast<std::size_t>(true_class) < distances.size(),
          Errc::kInvalidArgument, "true class out of range");
  require(variant == LossVariant::kSoftmax || distances.size() >= 2, Errc::kEmptyOthers,
          "loss needs at least one other prototype");
}

}  // namespace

double loss_from_distances(std::span<const double> distances, int true_class, LossVariant variant) {
  check_loss_args(distances, true_class, variant);
  const int skip = variant == LossVariant::kPaper ? true_class : -1;
  return distances[static_cast<std::size_t>(true_class)] + log_sum_exp_neg(distances, skip);
}

std::vector<double> loss_distance_gradient(std::span<const double> distances, int true_class,
                                           LossVariant variant) {
  check_loss_args(distances, true_class, variant);
  const int skip = variant == LossVariant::kPaper ? true_class : -1;
  const double lse = log_sum_exp_neg(distances, skip);
  std::vector<double> grad(distances.size(), 0.0);
  for (std::size_t s = 0; s < distances.size(); ++s) {
    if (static_cast<int>(s) == skip) continue;
    grad[s] = -std::exp(-distances[s] - lse);
  }
  grad[static_cast<std::size_t>(true_class)] += 1.0;
  return grad;
}

double loss_g(const Vector& query_proj, const Vector& proto_true, std::span<const Vector> protos_other) {
  require(!protos_other.empty(), Errc::kEmptyOthers, "loss_g needs at least one other prototype");
  std::vector<double> d;
  d.reserve(protos_other.size() + 1);
  d.push_back(sq_dist(query_proj, proto_true));
  for (const Vector& p : protos_other) d.push_back(sq_dist(query_proj, p));
  return loss_from_distances(d, 0, LossVariant::kPaper);
}

Classification classify_distances(std::span<const double> distances) {
  require(!distances.empty(), Errc::kInvalidArgument, "classify needs at least one prototype");
  Classification out;
  for (std::size_t c = 1; c < distances.size(); ++c) {
    if (distances[c] < distances[static_cast<std::size_t>(out.label)]) out.label = static_cast<int>(c);
  }
  double runner_up = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < distances.size(); ++c) {
    if (static_cast<int>(c) != out.label) runner_up = std::min(runner_up, distances[c]);
  }
  out.alpha = std::isfinite(runner_up) ? runner_up - distances[static_cast<std::size_t>(out.label)] : 0.0;
  return out;
}

Classification classify(const Vector& query_proj, const PrototypeSet& protos) {
  std::vector<double> d;
  d.reserve(protos.vectors.size());
  for (const Vector& p : protos.vectors) d.push_back(sq_dist(query_proj, p));
  return classify_distances(d);
}

std::vector<double> query_distances(const Vector& query, const PrototypeSet& protos) {
  std::vector<double> d(protos.vectors.size());
  if (protos.projections.mode == ProjectionMode::kShared) {
    const Vector z = project(protos.projections.projections.front(), query);
    for (std::size_t c = 0; c < d.size(); ++c) d[c] = sq_dist(z, protos.vectors[c]);
  } else {
    for (std::size_t c = 0; c < d.size(); ++c) {
      d[c] = sq_dist(project(protos.projections.for_class(static_cast<int>(c)), query), protos.vectors[c]);
    }
  }
  return d;
}

EpisodeResult run_episode(const Task& t, const EpisodeConfig& cfg) {
  t.validate();
  return run_episode(t, build_projections(t.support, cfg.extractor), cfg.loss);
}

EpisodeResult run_episode(const Task& t, const ProjectionSet& projections, LossVariant loss_variant) {
  t.validate();
  const PrototypeSet protos = prototypes(t.support, projections);

  EpisodeResult out;
  const auto n = static_cast<std::size_t>(t.query.size());
  out.predictions.reserve(n);
  out.alpha_values.reserve(n);
  out.losses.reserve(n);
  std::size_t errors = 0;
  double loss_sum = 0.0;
  for (Eigen::Index i = 0; i < t.query.size(); ++i) {
    const int truth = t.query.labels[static_cast<std::size_t>(i)];
    const std::vector<double> d = query_distances(t.query.points.row(i).transpose(), protos);
    const Classification cls = classify_distances(d);
    const double loss = loss_from_distances(d, truth, loss_variant);
    out.predictions.push_back(cls.label);
    out.alpha_values.push_back(cls.alpha);
    out.losses.push_back(loss);
    loss_sum += loss;
    if (cls.label != truth) ++errors;
  }
  out.mean_loss = loss_sum / static_cast<double>(n);
  out.task_loss = static_cast<double>(errors) / static_cast<double>(n);
  out.accuracy = 1.0 - out.task_loss;
  return out;
}

double empirical_loss(std::span<const Task> tasks, const EpisodeConfig& cfg) {
  require(!tasks.empty(), Errc::kEmptyTaskList, "empirical_loss needs at least one task");
  double sum = 0.0;
  for (const Task& t : tasks) sum += run_episode(t, cfg).mean_loss;
  return sum / static_cast<double>(tasks.size());
}

}  // namespace lfdproto
