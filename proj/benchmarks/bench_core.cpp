#include <benchmark/benchmark.h>

#include <lfdproto/datagen.hpp>
#include <lfdproto/episode.hpp>
#include <lfdproto/linalg.hpp>
#include <lfdproto/scatter.hpp>
#include <lfdproto/trainer.hpp>

using namespace lfdproto;

namespace {

Matrix random_spd(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  return g * g.transpose() + 0.1 * Matrix::Identity(n, n);
}

void BM_GeneralizedEig(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Matrix a = random_spd(n, rng), b = random_spd(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve_generalized_eig(a, b));
}
BENCHMARK(BM_GeneralizedEig)->RangeMultiplier(2)->Range(4, 128);

void BM_LfdaScatter(benchmark::State& state) {
  const int C = static_cast<int>(state.range(0));
  const Task t = sample_task(anisotropic_spec(64, C, 5, 1), 2);
  for (auto _ : state) {
    const AffinityMatrix a = affinity(t.support);
    benchmark::DoNotOptimize(lfda_scatter(t.support, a));
  }
}
BENCHMARK(BM_LfdaScatter)->DenseRange(5, 20, 5);

void BM_Episode(benchmark::State& state) {
  const auto kind = static_cast<ExtractorKind>(state.range(0));
  const Task t = sample_task(anisotropic_spec(64, 5, 5, 15), 3);
  EpisodeConfig cfg;
  cfg.extractor.kind = kind;
  for (auto _ : state) benchmark::DoNotOptimize(run_episode(t, cfg));
  state.SetLabel(std::string(extractor_name(kind)));
}
BENCHMARK(BM_Episode)->DenseRange(0, 3);

void BM_LossAndGrad(benchmark::State& state) {
  const SyntheticSpec spec = entangled_spec(16, 5, 5, 15, 4);
  std::vector<Task> tasks;
  for (int i = 0; i < 4; ++i) tasks.push_back(sample_task(spec, static_cast<std::uint64_t>(i)));
  const Embedder e = Embedder::random(EmbedderKind::kOneHiddenLayer, 16, 32, 8, 5);
  EpisodeConfig cfg;
  cfg.extractor.kind = ExtractorKind::kLfdaShared;
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(e, tasks, cfg));
}
BENCHMARK(BM_LossAndGrad);

}  // namespace

BENCHMARK_MAIN();
