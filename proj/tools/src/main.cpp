#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <lfdproto/datagen.hpp>
#include <lfdproto/episode.hpp>
#include <lfdproto/error.hpp>
#include <lfdproto/rng.hpp>
#include <lfdproto/theory.hpp>
#include <lfdproto/trainer.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace lfdproto;

namespace {

struct Common {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out = ".";
  std::string extractor = "lfda-perclass";
  std::string loss = "paper";
  int dim = 0;
  double bandwidth = 1.0;
  bool local_scaling = false;
  int local_neighbor = 7;
};

struct DataSource {
  std::string dataset;
  std::string preset;
  int m = 4;
  int ways = 5;
  int shots = 5;
  int queries = 15;
};

struct EmbedderOptions {
  std::string kind = "identity";
  int hidden = 16;
  int output = 0;  // 0 keeps the input dimension
};

void add_common(CLI::App* cmd, Common& c, const std::string& extractor = "lfda-perclass", int dim = 0) {
  c.extractor = extractor;
  c.dim = dim;
  cmd->add_option("--seed", c.seed, "Root seed")->capture_default_str();
  cmd->add_option("--workers", c.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--extractor", c.extractor, "identity, fda, lfda-shared or lfda-perclass")
      ->capture_default_str()
      ->check(CLI::IsMember({"identity", "fda", "lfda-shared", "lfda-perclass", "lfda", "protonet"}));
  cmd->add_option("--loss", c.loss, "paper or softmax")
      ->capture_default_str()
      ->check(CLI::IsMember({"paper", "softmax"}));
  cmd->add_option("--dim", c.dim, "Projection dimension, 0 for the extractor default")->capture_default_str();
  cmd->add_option("--bandwidth", c.bandwidth, "Affinity kernel bandwidth")->capture_default_str();
  cmd->add_flag("--local-scaling", c.local_scaling, "Per-point bandwidth from same-class neighbours");
  cmd->add_option("--local-neighbor", c.local_neighbor, "Neighbour rank used by local scaling")->capture_default_str();
}

void add_data(CLI::App* cmd, DataSource& d, const std::string& default_preset) {
  cmd->add_option("--dataset", d.dataset, "Feature CSV (label,f0,f1,...)");
  cmd->add_option("--preset", d.preset, "anisotropic, mixup, sandwich or entangled")
      ->default_str(default_preset)
      ->check(CLI::IsMember({"", "anisotropic", "mixup", "sandwich", "entangled"}));
  cmd->add_option("--m", d.m, "Feature dimension of a preset")->capture_default_str();
  cmd->add_option("--ways", d.ways, "Classes per episode (C)")->capture_default_str();
  cmd->add_option("--shots", d.shots, "Support points per class (k)")->capture_default_str();
  cmd->add_option("--queries", d.queries, "Query points per class (M)")->capture_default_str();
}

void add_embedder(CLI::App* cmd, EmbedderOptions& e, const std::string& default_kind) {
  e.kind = default_kind;
  cmd->add_option("--embedder", e.kind, "identity, linear or one-hidden-layer")
      ->capture_default_str()
      ->check(CLI::IsMember({"identity", "linear", "one-hidden-layer"}));
  cmd->add_option("--hidden", e.hidden, "Hidden width of one-hidden-layer")->capture_default_str();
  cmd->add_option("--embed-dim", e.output, "Embedding dimension, 0 keeps the input dimension")->capture_default_str();
}

ExtractorConfig extractor_of(const Common& c) {
  ExtractorConfig x;
  x.kind = parse_extractor(c.extractor);
  x.dim = c.dim;
  x.bandwidth = c.bandwidth;
  x.local_scaling = c.local_scaling;
  x.local_neighbor = c.local_neighbor;
  return x;
}

SyntheticSpec preset_spec(const DataSource& d, std::uint64_t seed) {
  if (d.preset == "anisotropic") return anisotropic_spec(d.m, d.ways, d.shots, d.queries);
  if (d.preset == "mixup") return mixup_spec(d.m, d.ways, d.shots, d.queries);
  if (d.preset == "sandwich") return sandwich_spec(d.shots, d.queries);
  if (d.preset == "entangled") return entangled_spec(d.m, d.ways, d.shots, d.queries, substream_seed(seed, "rotation"));
  fail(Errc::kInvalidArgument, "unknown preset '" + d.preset + "'");
}

// Episode generator over either a stored dataset or a synthetic preset.
TaskSource task_source(const DataSource& d, std::uint64_t seed) {
  if (!d.dataset.empty()) {
    auto ds = std::make_shared<FeatureDataset>(load_dataset_csv(d.dataset));
    return [ds, d](std::uint64_t s) { return sample_episode(*ds, d.ways, d.shots, d.queries, s).task; };
  }
  auto sampler = std::make_shared<TaskSampler>(preset_spec(d, seed));
  return [sampler](std::uint64_t s) { return sampler->sample(s); };
}

Embedder initial_embedder(const EmbedderOptions& e, int input_dim, std::uint64_t seed) {
  const EmbedderKind kind = parse_embedder(e.kind);
  if (kind == EmbedderKind::kIdentity) return Embedder::identity(input_dim);
  const int out = e.output > 0 ? e.output : input_dim;
  return Embedder::random(kind, input_dim, e.hidden, out, substream_seed(seed, "init"));
}

int data_dim(const DataSource& d) {
  if (!d.dataset.empty()) return static_cast<int>(load_dataset_csv(d.dataset).dim());
  return d.preset == "sandwich" ? 2 : d.m;
}

// Writes through a temporary file so a failed run never leaves a partial result.
void write_atomically(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), Errc::kIo, "cannot write " + tmp.string());
    out << content;
    out.flush();
    require(static_cast<bool>(out), Errc::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string commented(const std::string& config) {
  std::ostringstream out;
  std::istringstream in(config);
  out << "# config:\n";
  for (std::string line; std::getline(in, line);) out << "# " << line << '\n';
  return out.str();
}

struct MeanCi {
  double mean = 0.0;
  double ci95 = 0.0;
};

MeanCi mean_ci(const std::vector<double>& v) {
  MeanCi r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return r;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.ci95 = 1.96 * std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return r;
}

// Exactly one data source; the echoed config names only the one in use.
void resolve_source(DataSource& d, CLI::App* cmd) {
  CLI::Option* preset = cmd->get_option("--preset");
  require(d.dataset.empty() || d.preset.empty(), Errc::kInvalidArgument, "give either --dataset or --preset, not both");
  if (!d.dataset.empty()) {
    preset->default_str("");
  } else if (d.preset.empty()) {
    d.preset = preset->get_default_str();
  }
}

int run_episode_cmd(const Common& c, const DataSource& d, int episodes, const std::string& config) {
  const TaskSource source = task_source(d, c.seed);
  EpisodeConfig cfg;
  cfg.extractor = extractor_of(c);
  cfg.loss = parse_loss(c.loss);
  require(episodes >= 1, Errc::kInvalidArgument, "--episodes must be >= 1");

  std::vector<EpisodeResult> results(static_cast<std::size_t>(episodes));
  std::vector<std::uint64_t> seeds(results.size());
  parallel_for(results.size(), c.workers, [&](std::size_t e) {
    seeds[e] = substream_seed(c.seed, "episode", e);
    results[e] = run_episode(source(seeds[e]), cfg);
  });

  std::ostringstream out;
  std::vector<double> acc, loss;
  for (std::size_t e = 0; e < results.size(); ++e) {
    acc.push_back(results[e].accuracy);
    loss.push_back(results[e].mean_loss);
    json rec{{"record", "episode"},
             {"episode_id", e},
             {"extractor", extractor_name(cfg.extractor.kind)},
             {"k", d.shots},
             {"C", d.ways},
             {"M", d.queries},
             {"accuracy", results[e].accuracy},
             {"mean_loss", results[e].mean_loss},
             {"seed", seeds[e]}};
    out << rec.dump() << '\n';
  }
  const MeanCi a = mean_ci(acc), l = mean_ci(loss);
  json summary{{"record", "summary"},
               {"episodes", episodes},
               {"extractor", extractor_name(cfg.extractor.kind)},
               {"accuracy_mean", a.mean},
               {"accuracy_ci95", a.ci95},
               {"mean_loss_mean", l.mean},
               {"mean_loss_ci95", l.ci95},
               {"seed", c.seed},
               {"config", config}};
  out << summary.dump() << '\n';
  write_atomically(fs::path(c.out) / "episodes.jsonl", out.str());
  std::printf("accuracy %.4f +- %.4f over %d episodes\n", a.mean, a.ci95, episodes);
  return 0;
}

struct TrainOptions {
  int iterations = 100;
  int tasks_per_update = 1;
  double step_size = 1e-2;
  double momentum = 0.0;
  int validation_episodes = 0;
  int validation_every = 10;
  std::string resume;
};

int run_train_cmd(const Common& c, const DataSource& d, const EmbedderOptions& eo, const TrainOptions& t,
                  const std::string& config) {
  TrainConfig cfg;
  cfg.iterations = t.iterations;
  cfg.tasks_per_update = t.tasks_per_update;
  cfg.step_size = t.step_size;
  cfg.momentum = t.momentum;
  cfg.seed = c.seed;
  cfg.episode.extractor = extractor_of(c);
  cfg.episode.loss = parse_loss(c.loss);
  cfg.validation_episodes = t.validation_episodes;
  cfg.validation_every = t.validation_every;
  cfg.workers = c.workers;

  TrainState start;
  if (!t.resume.empty()) {
    start = load_checkpoint(t.resume);
    require(start.seed == c.seed, Errc::kInvalidArgument, "checkpoint seed differs from --seed");
  } else {
    start.embedder = initial_embedder(eo, data_dim(d), c.seed);
    start.seed = c.seed;
  }
  const TrainResult r = train(start, task_source(d, c.seed), cfg);

  std::ostringstream trace;
  trace << commented(config) << "iteration,loss\n";
  trace.precision(17);
  for (std::size_t i = 0; i < r.loss_trace.size(); ++i)
    trace << start.iteration + static_cast<int>(i) + 1 << ',' << r.loss_trace[i] << '\n';

  std::ostringstream ckpt;
  write_checkpoint(ckpt, r.state);
  json j = json::parse(ckpt.str());
  j["config"] = config;

  write_atomically(fs::path(c.out) / "loss_trace.csv", trace.str());
  if (!r.validation.empty()) {
    std::ostringstream val;
    val << commented(config) << "iteration,accuracy\n";
    val.precision(17);
    for (const ValidationPoint& v : r.validation) val << v.iteration << ',' << v.accuracy << '\n';
    write_atomically(fs::path(c.out) / "validation.csv", val.str());
  }
  write_atomically(fs::path(c.out) / "checkpoint.json", j.dump(2) + '\n');
  if (!r.loss_trace.empty()) std::printf("final loss %.6f after %d iterations\n", r.loss_trace.back(), r.state.iteration);
  return 0;
}

struct BoundOptions {
  std::string model = "random";
  int configs = 1;
  int trials = 2000;
  int pairs = 200;
  int replicates = 50;
  int max_dim = 8;
  int m = 2;
  int shots = 5;
  int queries = 10;
  std::string fourth_moment = "closed-form";
  int fourth_samples = 100000;
};

GaussianTaskModel bound_model(const BoundOptions& b, std::uint64_t seed, int i) {
  if (b.model == "random") return random_model(substream_seed(seed, "model", static_cast<std::uint64_t>(i)), b.max_dim);
  GaussianTaskModel m;
  m.k = b.shots;
  m.M = b.queries;
  m.C = 2;
  if (b.model == "vacuous") {
    m.mean = Vector::Zero(b.m);
    m.class_mean_covariance = Matrix::Zero(b.m, b.m);
    m.within_class_covariance = Matrix::Identity(b.m, b.m);
    return m;
  }
  const SyntheticSpec s = anisotropic_spec(b.m, 2, b.shots, b.queries);
  m.mean = s.mean;
  m.class_mean_covariance = s.class_mean_covariance;
  m.within_class_covariance = s.within_class_covariance;
  return m;
}

json report_json(const BoundReport& r, const GaussianTaskModel& m) {
  return json{{"record", "bound"},
              {"extractor", r.extractor},
              {"m", m.dim()},
              {"k", m.k},
              {"M", m.M},
              {"projection_dim", r.projection_dim},
              {"bound_rhs", r.bound_rhs},
              {"bound_rhs_alternate", r.bound_rhs_alternate},
              {"bound_rhs_identity", r.bound_rhs_identity},
              {"multiclass_raw", r.multiclass.raw},
              {"multiclass_clipped", r.multiclass.clipped},
              {"numerator", r.terms.numerator},
              {"within_term", r.terms.within_term},
              {"cross_term", r.terms.cross_term},
              {"fourth_moment", r.terms.fourth_moment},
              {"mc_risk", r.mc_risk},
              {"mc_stderr", r.mc_stderr},
              {"violated", r.violated},
              {"lemma1_error", r.lemma1_error},
              {"lemma2_conditional_gap", r.lemma2.conditional_gap},
              {"lemma2_conditional_stderr", r.lemma2.conditional_stderr},
              {"lemma2_unconditional_gap", r.lemma2.unconditional_gap},
              {"lemma2_unconditional_stderr", r.lemma2.unconditional_stderr},
              {"lemma3_bound", r.lemma3.bound},
              {"lemma3_empirical", r.lemma3.empirical},
              {"lemma3_slack", r.lemma3.slack},
              {"lemma3_stderr", r.lemma3.standard_error},
              {"trace_ratio_identity", std::isfinite(r.trace_ratio_identity) ? json(r.trace_ratio_identity) : json(nullptr)},
              {"trace_ratio_extractor",
               std::isfinite(r.trace_ratio_extractor) ? json(r.trace_ratio_extractor) : json(nullptr)},
              {"trials", r.trials},
              {"seed", r.seed}};
}

int run_bound_cmd(const Common& c, const BoundOptions& b, const std::string& config) {
  require(b.configs >= 1, Errc::kInvalidArgument, "--configs must be >= 1");
  VerifyOptions opts;
  opts.trials = b.trials;
  opts.sampling = {b.pairs, b.replicates};
  opts.fourth_moment.method =
      b.fourth_moment == "monte-carlo" ? FourthMomentMethod::kMonteCarlo : FourthMomentMethod::kClosedForm;
  opts.fourth_moment.samples = b.fourth_samples;
  opts.fourth_moment.seed = substream_seed(c.seed, "fourth-moment");
  opts.workers = c.workers;
  const ExtractorConfig x = extractor_of(c);

  std::ostringstream out;
  int violations = 0;
  for (int i = 0; i < b.configs; ++i) {
    const GaussianTaskModel m = bound_model(b, c.seed, i);
    const BoundReport r = verify_bound(m, x, substream_seed(c.seed, "verify", static_cast<std::uint64_t>(i)), opts);
    violations += r.violated;
    json rec = report_json(r, m);
    rec["config_id"] = i;
    out << rec.dump() << '\n';
  }
  out << json{{"record", "summary"},
              {"configs", b.configs},
              {"violations", violations},
              {"seed", c.seed},
              {"config", config}}
             .dump()
      << '\n';
  write_atomically(fs::path(c.out) / "bound.jsonl", out.str());
  std::printf("%d violation(s) over %d config(s)\n", violations, b.configs);
  return 0;
}

struct CovOptions {
  std::vector<double> lambdas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int episodes = 50;
  int classes = 20;
  int per_class = 40;
};

int run_cov_cmd(const Common& c, const DataSource& d, const EmbedderOptions& eo, const CovOptions& o,
                const std::string& config) {
  const FeatureDataset ds = d.dataset.empty()
                                ? make_synthetic_dataset(preset_spec(d, c.seed), o.classes, o.per_class,
                                                         substream_seed(c.seed, "dataset"))
                                : load_dataset_csv(d.dataset);
  CovRatioConfig cfg;
  cfg.lambda_grid = o.lambdas;
  cfg.C = d.ways;
  cfg.k = d.shots;
  cfg.episodes = o.episodes;
  cfg.seed = c.seed;
  cfg.workers = c.workers;
  cfg.embedder = initial_embedder(eo, static_cast<int>(ds.dim()), c.seed);
  ExtractorConfig id;
  id.kind = ExtractorKind::kIdentity;
  cfg.extractors = {id};
  const ExtractorConfig x = extractor_of(c);
  if (x.kind != ExtractorKind::kIdentity) cfg.extractors.push_back(x);

  std::ostringstream out;
  out << commented(config) << "lambda,extractor,trace_ratio,standard_error\n";
  out.precision(17);
  for (const CovRatioRow& r : cov_ratio_sweep(ds, cfg))
    out << r.lambda << ',' << r.extractor << ',' << r.trace_ratio << ',' << r.standard_error << '\n';
  write_atomically(fs::path(c.out) / "cov_ratio.csv", out.str());
  std::printf("%zu lambda values x %zu extractors\n", o.lambdas.size(), cfg.extractors.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot classification with local Fisher discriminant projections"};
  app.set_config("--config", "", "INI file with one section per command; flags override it");
  app.require_subcommand(1);

  Common episode_common, train_common, bound_common, cov_common;
  DataSource episode_data, train_data, cov_data;
  cov_data.m = 8;
  cov_data.ways = 10;
  EmbedderOptions train_embedder, cov_embedder;
  int episodes = 100;
  TrainOptions train_opts;
  BoundOptions bound_opts;
  CovOptions cov_opts;

  auto* episode = app.add_subcommand("episode", "Run a batch of episodes and log per-episode results");
  add_common(episode, episode_common);
  add_data(episode, episode_data, "anisotropic");
  episode->add_option("--episodes", episodes, "Number of episodes")->capture_default_str();

  auto* trainer = app.add_subcommand("train", "Episodic training of the embedder");
  add_common(trainer, train_common);
  add_data(trainer, train_data, "entangled");
  add_embedder(trainer, train_embedder, "linear");
  trainer->add_option("--iterations", train_opts.iterations, "Total iterations")->capture_default_str();
  trainer->add_option("--tasks-per-update", train_opts.tasks_per_update, "Tasks per gradient step")
      ->capture_default_str();
  trainer->add_option("--step-size", train_opts.step_size, "Learning rate")->capture_default_str();
  trainer->add_option("--momentum", train_opts.momentum, "Heavy-ball momentum")->capture_default_str();
  trainer->add_option("--validation-episodes", train_opts.validation_episodes, "Held-out episodes per check")
      ->capture_default_str();
  trainer->add_option("--validation-every", train_opts.validation_every, "Iterations between checks")
      ->capture_default_str();
  trainer->add_option("--resume", train_opts.resume, "Checkpoint to continue from");

  auto* bound = app.add_subcommand("bound-verify", "Monte Carlo check of the expected-risk bound");
  add_common(bound, bound_common, "lfda-shared");
  bound->add_option("--model", bound_opts.model, "random, vacuous or anisotropic")
      ->capture_default_str()
      ->check(CLI::IsMember({"random", "vacuous", "anisotropic"}));
  bound->add_option("--configs", bound_opts.configs, "Number of models (random model only varies)")
      ->capture_default_str();
  bound->add_option("--trials", bound_opts.trials, "Monte Carlo episodes per model")->capture_default_str();
  bound->add_option("--pairs", bound_opts.pairs, "Class-mean draws for the lemma checks")->capture_default_str();
  bound->add_option("--replicates", bound_opts.replicates, "Episodes per class-mean draw")->capture_default_str();
  bound->add_option("--max-dim", bound_opts.max_dim, "Largest dimension of random models")->capture_default_str();
  bound->add_option("--m", bound_opts.m, "Dimension of the vacuous and anisotropic models")->capture_default_str();
  bound->add_option("--shots", bound_opts.shots, "Support points per class (k)")->capture_default_str();
  bound->add_option("--queries", bound_opts.queries, "Query points per class (M)")->capture_default_str();
  bound->add_option("--fourth-moment", bound_opts.fourth_moment, "closed-form or monte-carlo")
      ->capture_default_str()
      ->check(CLI::IsMember({"closed-form", "monte-carlo"}));
  bound->add_option("--fourth-moment-samples", bound_opts.fourth_samples, "Samples for the Monte Carlo moment")
      ->capture_default_str();

  auto* cov = app.add_subcommand("cov-ratio", "Covariance-ratio sweep under mixup");
  add_common(cov, cov_common, "lfda-shared", 2);
  add_data(cov, cov_data, "mixup");
  cov_embedder.output = 4;
  add_embedder(cov, cov_embedder, "one-hidden-layer");
  cov->add_option("--lambdas", cov_opts.lambdas, "Mixup ratios in [0, 1)")->capture_default_str();
  cov->add_option("--episodes", cov_opts.episodes, "Episodes per lambda")->capture_default_str();
  cov->add_option("--classes", cov_opts.classes, "Classes in a generated dataset")->capture_default_str();
  cov->add_option("--per-class", cov_opts.per_class, "Records per class in a generated dataset")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (cmd == episode) resolve_source(episode_data, cmd);
    if (cmd == trainer) resolve_source(train_data, cmd);
    if (cmd == cov) resolve_source(cov_data, cmd);
    const std::string config = "[" + cmd->get_name() + "]\n" + cmd->config_to_str(true, false);
    if (cmd == episode) {
      return run_episode_cmd(episode_common, episode_data, episodes, config);
    }
    if (cmd == trainer) {
      return run_train_cmd(train_common, train_data, train_embedder, train_opts, config);
    }
    if (cmd == bound) return run_bound_cmd(bound_common, bound_opts, config);
    return run_cov_cmd(cov_common, cov_data, cov_embedder, cov_opts, config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
