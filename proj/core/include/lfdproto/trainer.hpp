#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfdproto/embedder.hpp"
#include "lfdproto/episode.hpp"

namespace lfdproto {

/// Produces the raw-input task for a given seed.
using TaskSource = std::function<Task(std::uint64_t seed)>;

struct TrainConfig {
  int iterations = 100;
  int tasks_per_update = 1;
  double step_size = 1e-2;
  double momentum = 0.0;  // 0 is plain gradient descent
  std::uint64_t seed = 0;
  EpisodeConfig episode;
  int validation_episodes = 0;
  int validation_every = 10;  // iterations between validation passes
  int workers = 1;

  void validate() const;
};

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

/// Embeds support and query rows of a raw-input task.
Task embed_task(const Embedder& e, const Task& t);

/// Projections computed from each task's embedded support under `e`.
std::vector<ProjectionSet> freeze_projections(const Embedder& e, std::span<const Task> tasks,
                                              const ExtractorConfig& extractor);

/// Mean over tasks of the mean per-query episodic loss, and its gradient with
/// respect to the embedder parameters. The projections are held constant:
/// either the supplied `frozen` ones or those computed from the current
/// embedding.
LossGrad loss_and_grad(const Embedder& e, std::span<const Task> tasks, const EpisodeConfig& cfg,
                       const std::vector<ProjectionSet>* frozen = nullptr, int workers = 1);

struct ValidationPoint {
  int iteration = 0;
  double accuracy = 0.0;
};

struct TrainState {
  Embedder embedder;
  Vector velocity;     // empty unless momentum is used
  int iteration = 0;   // completed iterations
  std::uint64_t seed = 0;
};

struct TrainResult {
  TrainState state;
  std::vector<double> loss_trace;  // batch loss before each update
  std::vector<ValidationPoint> validation;
};

/// Mean accuracy over the held-out tasks derived from `seed`.
double validation_accuracy(const Embedder& e, const TaskSource& source, const TrainConfig& cfg);

/// Gradient descent from `start` (iteration 0 or a resumed checkpoint) up to
/// cfg.iterations. The batch at iteration i is drawn from substreams of
/// cfg.seed keyed by (i, j), so a resumed run continues the same stream.
TrainResult train(const TrainState& start, const TaskSource& source, const TrainConfig& cfg);

void write_checkpoint(std::ostream& out, const TrainState& state);
TrainState read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(const std::string& path);

}  // namespace lfdproto
