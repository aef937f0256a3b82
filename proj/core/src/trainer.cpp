#include "lfdproto/trainer.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "lfdproto/error.hpp"
#include "lfdproto/rng.hpp"

namespace lfdproto {
namespace {

struct TaskGrad {
  double loss = 0.0;
  Vector grad;
};

TaskGrad task_loss_and_grad(const Embedder& e, const Task& t, const EpisodeConfig& cfg,
                            const ProjectionSet* frozen) {
  const Task z = embed_task(e, t);
  const ProjectionSet projections = frozen ? *frozen : build_projections(z.support, cfg.extractor);
  const PrototypeSet protos = prototypes(z.support, projections);
  const ClassMeans means = class_means(z.support);
  const int C = z.classes();
  const auto k = static_cast<double>(z.shots());
  const Eigen::Index nq = z.query.size();

  // d(distance_c)/d(embedding) = 2 F_c F_c^T (e_q - m_c); a support point of
  // class c receives the negative of that divided by k.
  std::vector<Matrix> metric;
  metric.reserve(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) {
    const Matrix& f = projections.for_class(c).matrix;
    metric.push_back(2.0 * f * f.transpose());
  }

  Matrix grad_query = Matrix::Zero(nq, z.query.dim());
  Matrix grad_class_mean = Matrix::Zero(C, z.query.dim());
  double loss_sum = 0.0;
  for (Eigen::Index i = 0; i < nq; ++i) {
    const int truth = z.query.labels[static_cast<std::size_t>(i)];
    const Vector q = z.query.points.row(i).transpose();
    const std::vector<double> d = query_distances(q, protos);
    loss_sum += loss_from_distances(d, truth, cfg.loss);
    const std::vector<double> g = loss_distance_gradient(d, truth, cfg.loss);
    for (int c = 0; c < C; ++c) {
      const double gc = g[static_cast<std::size_t>(c)];
      if (gc == 0.0) continue;
      const Vector v = gc * (metric[static_cast<std::size_t>(c)] * (q - means.per_class[static_cast<std::size_t>(c)]));
      grad_query.row(i) += v.transpose();
      grad_class_mean.row(c) -= v.transpose();
    }
  }

  const double scale = 1.0 / static_cast<double>(nq);
  TaskGrad out;
  out.loss = loss_sum * scale;
  out.grad = Vector::Zero(e.parameter_count());
  if (out.grad.size() == 0) return out;
  for (Eigen::Index i = 0; i < nq; ++i)
    accumulate_param_gradient(e, t.query.points.row(i).transpose(), scale * grad_query.row(i).transpose(),
                              out.grad);
  for (Eigen::Index i = 0; i < t.support.size(); ++i) {
    const int c = t.support.labels[static_cast<std::size_t>(i)];
    accumulate_param_gradient(e, t.support.points.row(i).transpose(),
                              (scale / k) * grad_class_mean.row(c).transpose(), out.grad);
  }
  return out;
}

nlohmann::json vector_to_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector json_to_vector(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

void TrainConfig::validate() const {
  require(iterations >= 1, Errc::kInvalidArgument, "iterations must be >= 1");
  require(tasks_per_update >= 1, Errc::kInvalidArgument, "tasks_per_update must be >= 1");
  require(std::isfinite(step_size) && step_size >= 0.0, Errc::kInvalidArgument, "step size must be >= 0");
  require(momentum >= 0.0 && momentum < 1.0, Errc::kInvalidArgument, "momentum must be in [0, 1)");
  require(validation_episodes >= 0, Errc::kInvalidArgument, "validation_episodes must be >= 0");
  require(validation_every >= 1, Errc::kInvalidArgument, "validation_every must be >= 1");
}

Task embed_task(const Embedder& e, const Task& t) {
  Task out = t;
  out.support.points = forward_rows(e, t.support.points);
  out.query.points = forward_rows(e, t.query.points);
  return out;
}

std::vector<ProjectionSet> freeze_projections(const Embedder& e, std::span<const Task> tasks,
                                              const ExtractorConfig& extractor) {
  std::vector<ProjectionSet> out;
  out.reserve(tasks.size());
  for (const Task& t : tasks) {
    LabeledSet support = t.support;
    support.points = forward_rows(e, t.support.points);
    out.push_back(build_projections(support, extractor));
  }
  return out;
}

LossGrad loss_and_grad(const Embedder& e, std::span<const Task> tasks, const EpisodeConfig& cfg,
                       const std::vector<ProjectionSet>* frozen, int workers) {
  require(!tasks.empty(), Errc::kEmptyTaskList, "loss_and_grad needs at least one task");
  require(!frozen || frozen->size() == tasks.size(), Errc::kDimensionMismatch,
          "one frozen projection set per task is required");
  e.validate();
  for (const Task& t : tasks) {
    t.validate();
    require(t.support.dim() == e.input_dim, Errc::kDimensionMismatch,
            "task dimension does not match the embedder input");
  }

  std::vector<TaskGrad> parts(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t j) {
    parts[j] = task_loss_and_grad(e, tasks[j], cfg, frozen ? &(*frozen)[j] : nullptr);
  });

  LossGrad out;
  out.grad = Vector::Zero(e.parameter_count());
  for (const TaskGrad& p : parts) {
    out.loss += p.loss;
    out.grad += p.grad;
  }
  const double n = static_cast<double>(tasks.size());
  out.loss /= n;
  out.grad /= n;
  return out;
}

double validation_accuracy(const Embedder& e, const TaskSource& source, const TrainConfig& cfg) {
  require(cfg.validation_episodes >= 1, Errc::kInvalidArgument, "no validation episodes configured");
  std::vector<double> acc(static_cast<std::size_t>(cfg.validation_episodes));
  parallel_for(acc.size(), cfg.workers, [&](std::size_t v) {
    const Task t = source(substream_seed(cfg.seed, "validation", v));
    acc[v] = run_episode(embed_task(e, t), cfg.episode).accuracy;
  });
  double sum = 0.0;
  for (double a : acc) sum += a;
  return sum / static_cast<double>(acc.size());
}

TrainResult train(const TrainState& start, const TaskSource& source, const TrainConfig& cfg) {
  cfg.validate();
  start.embedder.validate();
  require(start.iteration >= 0 && start.iteration <= cfg.iterations, Errc::kInvalidArgument,
          "checkpoint iteration is outside the configured run");

  TrainResult result;
  result.state = start;
  result.state.seed = cfg.seed;
  Embedder& e = result.state.embedder;
  Vector& velocity = result.state.velocity;
  if (cfg.momentum > 0.0 && velocity.size() != e.parameter_count()) velocity = Vector::Zero(e.parameter_count());

  const auto per = static_cast<std::uint64_t>(cfg.tasks_per_update);
  for (int it = start.iteration; it < cfg.iterations; ++it) {
    std::vector<Task> batch(static_cast<std::size_t>(cfg.tasks_per_update));
    for (std::size_t j = 0; j < batch.size(); ++j)
      batch[j] = source(substream_seed(cfg.seed, "train", static_cast<std::uint64_t>(it) * per + j));

    const LossGrad lg = loss_and_grad(e, batch, cfg.episode, nullptr, cfg.workers);
    if (!std::isfinite(lg.loss) || !all_finite(lg.grad))
      fail(Errc::kDivergenceDetected, "non-finite loss at iteration " + std::to_string(it));
    result.loss_trace.push_back(lg.loss);

    if (cfg.momentum > 0.0) {
      velocity = cfg.momentum * velocity - cfg.step_size * lg.grad;
      e.params += velocity;
    } else {
      e.params -= cfg.step_size * lg.grad;
    }
    if (!all_finite(e.params)) fail(Errc::kDivergenceDetected, "parameters diverged at iteration " + std::to_string(it));
    result.state.iteration = it + 1;

    if (cfg.validation_episodes > 0 && (result.state.iteration % cfg.validation_every == 0 ||
                                        result.state.iteration == cfg.iterations))
      result.validation.push_back({result.state.iteration, validation_accuracy(e, source, cfg)});
  }
  return result;
}

void write_checkpoint(std::ostream& out, const TrainState& state) {
  nlohmann::json j;
  j["kind"] = std::string(embedder_name(state.embedder.kind));
  j["dims"] = {{"input", state.embedder.input_dim},
               {"hidden", state.embedder.hidden_dim},
               {"output", state.embedder.output_dim}};
  j["theta"] = vector_to_json(state.embedder.params);
  j["seed"] = state.seed;
  j["iteration"] = state.iteration;
  if (state.velocity.size() > 0) j["velocity"] = vector_to_json(state.velocity);
  out << j.dump(2) << '\n';
  require(out.good(), Errc::kIo, "failed to write checkpoint");
}

TrainState read_checkpoint(std::istream& in) {
  TrainState s;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    s.embedder.kind = parse_embedder(j.at("kind").get<std::string>());
    s.embedder.input_dim = j.at("dims").at("input").get<int>();
    s.embedder.hidden_dim = j.at("dims").at("hidden").get<int>();
    s.embedder.output_dim = j.at("dims").at("output").get<int>();
    s.embedder.params = json_to_vector(j.at("theta"));
    s.seed = j.at("seed").get<std::uint64_t>();
    s.iteration = j.at("iteration").get<int>();
    if (j.contains("velocity")) s.velocity = json_to_vector(j.at("velocity"));
  } catch (const nlohmann::json::exception& ex) {
    fail(Errc::kIo, std::string("malformed checkpoint: ") + ex.what());
  }
  s.embedder.validate();
  require(s.velocity.size() == 0 || s.velocity.size() == s.embedder.parameter_count(), Errc::kIo,
          "checkpoint velocity has the wrong length");
  return s;
}

void save_checkpoint(const std::string& path, const TrainState& state) {
  std::ofstream out(path);
  require(out.good(), Errc::kIo, "cannot open '" + path + "' for writing");
  write_checkpoint(out, state);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::kIo, "cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace lfdproto
