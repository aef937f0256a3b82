#include "lfdproto/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "lfdproto/error.hpp"
#include "lfdproto/rng.hpp"

namespace lfdproto {
namespace {

constexpr double kPsdTolerance = 1e-9;
constexpr double kWeightTolerance = 1e-9;

void check_psd(const Matrix& a, Eigen::Index m, const char* what) {
  require(a.rows() == m && a.cols() == m, Errc::kInvalidSpec, std::string(what) + " must be m x m");
  require(all_finite(a), Errc::kInvalidSpec, std::string(what) + " has non-finite entries");
  require((a - a.transpose()).norm() <= 1e-10 * std::max(1.0, a.norm()), Errc::kInvalidSpec,
          std::string(what) + " is not symmetric");
  const Vector ev = sym_eig(a).eigenvalues;
  require(ev(ev.size() - 1) >= -kPsdTolerance * std::max(1.0, std::abs(ev(0))), Errc::kInvalidSpec,
          std::string(what) + " is not positive semidefinite");
}

Vector standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

std::size_t pick_component(const std::vector<double>& weights, Rng& rng) {
  if (weights.size() == 1) return 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

// First `count` entries of a uniformly random permutation of `ids`.
std::vector<std::size_t> choose_without_replacement(std::vector<std::size_t> ids, std::size_t count,
                                                    Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(count);
  return ids;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_double(const std::string& text, std::size_t line_no) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  require(ec == std::errc() && ptr == t.data() + t.size() && !t.empty(), Errc::kIo,
          "line " + std::to_string(line_no) + ": cannot parse number '" + t + "'");
  return value;
}

int parse_label(const std::string& text, std::size_t line_no) {
  const std::string t = trim(text);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  require(ec == std::errc() && ptr == t.data() + t.size() && !t.empty() && value >= 0 &&
              value <= std::numeric_limits<int>::max(),
          Errc::kIo, "line " + std::to_string(line_no) + ": label must be a non-negative integer");
  return static_cast<int>(value);
}

Vector geomspace(double first, double last, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    v(i) = first * std::pow(last / first, t);
  }
  return v;
}

LabeledSet subset(const Matrix& features, const std::vector<std::size_t>& ids,
                  const std::vector<int>& labels, int class_count) {
  LabeledSet s;
  s.points.resize(static_cast<Eigen::Index>(ids.size()), features.cols());
  for (std::size_t i = 0; i < ids.size(); ++i)
    s.points.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(ids[i]));
  s.labels = labels;
  s.class_count = class_count;
  return s;
}

}  // namespace

void SyntheticSpec::validate() const {
  require(m >= 1 && m <= kMaxDimension, Errc::kInvalidSpec, "m must be in [1, 4096]");
  require(C >= 2, Errc::kInvalidSpec, "C must be >= 2");
  require(k >= 1, Errc::kInvalidSpec, "k must be >= 1");
  require(M >= 1, Errc::kInvalidSpec, "M must be >= 1");
  require(mean.size() == m, Errc::kInvalidSpec, "mean must have m entries");
  require(all_finite(mean), Errc::kInvalidSpec, "mean has non-finite entries");
  check_psd(class_mean_covariance, m, "class_mean_covariance");
  check_psd(within_class_covariance, m, "within_class_covariance");
  if (fixed_class_means) {
    require(static_cast<int>(fixed_class_means->size()) == C, Errc::kInvalidSpec,
            "fixed_class_means needs one vector per class");
    for (const Vector& v : *fixed_class_means)
      require(v.size() == m && all_finite(v), Errc::kInvalidSpec, "fixed class mean must be finite in R^m");
  }
  if (multimodal) {
    require(static_cast<int>(multimodal->size()) == C, Errc::kInvalidSpec,
            "multimodal needs one mixture per class");
    for (const ClassMixture& mix : *multimodal) {
      require(!mix.offsets.empty() && mix.offsets.size() == mix.weights.size(), Errc::kInvalidSpec,
              "mixture needs matching, non-empty offsets and weights");
      double total = 0.0;
      for (double w : mix.weights) {
        require(std::isfinite(w) && w >= 0.0, Errc::kInvalidSpec, "mixture weights must be >= 0");
        total += w;
      }
      require(std::abs(total - 1.0) <= kWeightTolerance, Errc::kInvalidSpec,
              "mixture weights must sum to 1");
      for (const Vector& o : mix.offsets)
        require(o.size() == m && all_finite(o), Errc::kInvalidSpec, "mixture offset must be finite in R^m");
    }
  }
}

TaskSampler::TaskSampler(SyntheticSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  mean_factor_ = psd_factor(spec_.class_mean_covariance);
  within_factor_ = psd_factor(spec_.within_class_covariance);
}

std::vector<Vector> TaskSampler::sample_class_means(Rng& rng) const {
  std::vector<Vector> means;
  means.reserve(static_cast<std::size_t>(spec_.C));
  for (int c = 0; c < spec_.C; ++c) {
    if (spec_.fixed_class_means)
      means.push_back((*spec_.fixed_class_means)[static_cast<std::size_t>(c)]);
    else
      means.push_back(spec_.mean + mean_factor_ * standard_normal(spec_.m, rng));
  }
  return means;
}

Matrix TaskSampler::sample_points(int c, const Vector& class_mean, Eigen::Index count, Rng& rng) const {
  Matrix out(count, spec_.m);
  for (Eigen::Index i = 0; i < count; ++i) {
    Vector x = class_mean;
    if (spec_.multimodal) {
      const ClassMixture& mix = (*spec_.multimodal)[static_cast<std::size_t>(c)];
      x += mix.offsets[pick_component(mix.weights, rng)];
    }
    x += within_factor_ * standard_normal(spec_.m, rng);
    out.row(i) = x.transpose();
  }
  return out;
}

Task TaskSampler::sample(std::uint64_t seed) const {
  Rng rng = make_rng(seed, "task");
  const std::vector<Vector> means = sample_class_means(rng);
  Task t;
  t.support.points.resize(static_cast<Eigen::Index>(spec_.C) * spec_.k, spec_.m);
  t.query.points.resize(static_cast<Eigen::Index>(spec_.C) * spec_.M, spec_.m);
  t.support.class_count = t.query.class_count = spec_.C;
  for (int c = 0; c < spec_.C; ++c) {
    const auto& mu = means[static_cast<std::size_t>(c)];
    t.support.points.middleRows(static_cast<Eigen::Index>(c) * spec_.k, spec_.k) =
        sample_points(c, mu, spec_.k, rng);
    t.query.points.middleRows(static_cast<Eigen::Index>(c) * spec_.M, spec_.M) =
        sample_points(c, mu, spec_.M, rng);
    t.support.labels.insert(t.support.labels.end(), static_cast<std::size_t>(spec_.k), c);
    t.query.labels.insert(t.query.labels.end(), static_cast<std::size_t>(spec_.M), c);
  }
  return t;
}

Task sample_task(const SyntheticSpec& spec, std::uint64_t seed) { return TaskSampler(spec).sample(seed); }

std::vector<std::pair<int, std::vector<std::size_t>>> FeatureDataset::class_index() const {
  std::map<int, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]].push_back(i);
  return {index.begin(), index.end()};
}

void FeatureDataset::validate() const {
  require(static_cast<Eigen::Index>(labels.size()) == features.rows(), Errc::kDimensionMismatch,
          "dataset needs one label per record");
  require(features.cols() >= 1, Errc::kDimensionMismatch, "dataset features must have dimension >= 1");
  require(all_finite(features), Errc::kNotFinite, "dataset features must be finite");
  for (int l : labels) require(l >= 0, Errc::kInvalidArgument, "labels must be non-negative");
}

FeatureDataset read_dataset_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::kIo, "dataset is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  require(header.size() >= 2 && trim(header[0]) == "label", Errc::kIo,
          "dataset header must be label,f0,...,f{m-1}");
  for (std::size_t j = 1; j < header.size(); ++j)
    require(trim(header[j]) == "f" + std::to_string(j - 1), Errc::kIo,
            "dataset header column " + std::to_string(j) + " must be f" + std::to_string(j - 1));
  const std::size_t m = header.size() - 1;

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    require(fields.size() == m + 1, Errc::kIo,
            "line " + std::to_string(line_no) + ": expected " + std::to_string(m + 1) + " columns");
    labels.push_back(parse_label(fields[0], line_no));
    for (std::size_t j = 1; j <= m; ++j) values.push_back(parse_double(fields[j], line_no));
  }

  FeatureDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < m; ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * m + j];
  ds.labels = std::move(labels);
  ds.validate();
  return ds;
}

FeatureDataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::kIo, "cannot open dataset '" + path + "'");
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const FeatureDataset& ds) {
  ds.validate();
  out << "label";
  for (Eigen::Index j = 0; j < ds.dim(); ++j) out << ",f" << j;
  out << '\n';
  out.precision(17);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    out << ds.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < ds.dim(); ++j) out << ',' << ds.features(i, j);
    out << '\n';
  }
}

FeatureDataset make_synthetic_dataset(const SyntheticSpec& spec, int classes, int per_class,
                                      std::uint64_t seed) {
  require(classes >= 1 && per_class >= 1, Errc::kInvalidArgument,
          "synthetic dataset needs classes >= 1 and per_class >= 1");
  SyntheticSpec base = spec;
  base.validate();
  // The spec describes C task classes; a dataset may hold more, so the
  // per-class extras (fixed means, mixtures) cycle over the dataset classes.
  Rng rng = make_rng(seed, "dataset");
  const Matrix mean_factor = psd_factor(base.class_mean_covariance);
  FeatureDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(classes) * per_class, base.m);
  TaskSampler sampler(base);
  for (int c = 0; c < classes; ++c) {
    const int slot = c % base.C;
    Vector mu = base.fixed_class_means ? (*base.fixed_class_means)[static_cast<std::size_t>(slot)]
                                       : Vector(base.mean + mean_factor * standard_normal(base.m, rng));
    ds.features.middleRows(static_cast<Eigen::Index>(c) * per_class, per_class) =
        sampler.sample_points(slot, mu, per_class, rng);
    ds.labels.insert(ds.labels.end(), static_cast<std::size_t>(per_class), c);
  }
  return ds;
}

SampledEpisode sample_episode(const FeatureDataset& ds, int C, int k, int M, std::uint64_t seed) {
  require(C >= 1 && k >= 1 && M >= 1, Errc::kInvalidArgument, "episode needs C, k, M >= 1");
  ds.validate();
  const auto index = ds.class_index();
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < index.size(); ++i)
    if (index[i].second.size() >= static_cast<std::size_t>(k + M)) eligible.push_back(i);
  require(eligible.size() >= static_cast<std::size_t>(C), Errc::kInsufficientData,
          "dataset has " + std::to_string(eligible.size()) + " classes with >= " +
              std::to_string(k + M) + " records, need " + std::to_string(C));

  Rng rng = make_rng(seed, "episode");
  const std::vector<std::size_t> chosen = choose_without_replacement(eligible, static_cast<std::size_t>(C), rng);

  SampledEpisode ep;
  std::vector<int> support_labels, query_labels;
  for (int c = 0; c < C; ++c) {
    const auto& [label, ids] = index[chosen[static_cast<std::size_t>(c)]];
    ep.classes.push_back(label);
    const std::vector<std::size_t> picked = choose_without_replacement(ids, static_cast<std::size_t>(k + M), rng);
    ep.support_ids.insert(ep.support_ids.end(), picked.begin(), picked.begin() + k);
    ep.query_ids.insert(ep.query_ids.end(), picked.begin() + k, picked.end());
    support_labels.insert(support_labels.end(), static_cast<std::size_t>(k), c);
    query_labels.insert(query_labels.end(), static_cast<std::size_t>(M), c);
  }
  ep.task.support = subset(ds.features, ep.support_ids, support_labels, C);
  ep.task.query = subset(ds.features, ep.query_ids, query_labels, C);
  return ep;
}

Vector mixup(const Vector& x, const MixupConfig& cfg) {
  require(cfg.lambda >= 0.0 && cfg.lambda < 1.0, Errc::kInvalidArgument, "mixup lambda must be in [0, 1)");
  require(x.size() == cfg.target.size(), Errc::kDimensionMismatch, "mixup target dimension mismatch");
  return (1.0 - cfg.lambda) * x + cfg.lambda * cfg.target;
}

Matrix mixup_rows(const Matrix& x, const MixupConfig& cfg) {
  require(cfg.lambda >= 0.0 && cfg.lambda < 1.0, Errc::kInvalidArgument, "mixup lambda must be in [0, 1)");
  require(x.cols() == cfg.target.size(), Errc::kDimensionMismatch, "mixup target dimension mismatch");
  Matrix out = (1.0 - cfg.lambda) * x;
  out.rowwise() += cfg.lambda * cfg.target.transpose();
  return out;
}

double support_trace_ratio(const LabeledSet& support, const ExtractorConfig& extractor) {
  const ProjectionSet set = build_projections(support, extractor);
  double total = 0.0;
  for (int c = 0; c < support.class_count; ++c) {
    const ProjectedCovariances pc = projected_covariances(support, set.for_class(c));
    const Matrix eye = Matrix::Identity(pc.between.rows(), pc.between.cols());
    total += trace_ratio(eye, pc.within[static_cast<std::size_t>(c)], pc.between);
  }
  return total / support.class_count;
}

std::vector<CovRatioRow> cov_ratio_sweep(const FeatureDataset& ds, const CovRatioConfig& cfg) {
  ds.validate();
  require(!cfg.lambda_grid.empty(), Errc::kInvalidArgument, "lambda grid is empty");
  for (double l : cfg.lambda_grid)
    require(l >= 0.0 && l < 1.0, Errc::kInvalidArgument, "lambda grid must lie in [0, 1)");
  require(!cfg.extractors.empty(), Errc::kInvalidArgument, "cov_ratio_sweep needs at least one extractor");
  require(cfg.episodes >= 1, Errc::kInvalidArgument, "cov_ratio_sweep needs episodes >= 1");
  cfg.embedder.validate();
  require(cfg.embedder.input_dim == ds.dim(), Errc::kDimensionMismatch,
          "embedder input dimension must match the dataset");

  MixupConfig mix;
  mix.target = cfg.mix_target ? *cfg.mix_target : Vector(ds.features.colwise().mean().transpose());
  require(mix.target.size() == ds.dim(), Errc::kDimensionMismatch, "mix target dimension mismatch");

  // The same episodes (record ids) are reused at every lambda.
  std::vector<SampledEpisode> episodes;
  episodes.reserve(static_cast<std::size_t>(cfg.episodes));
  for (int e = 0; e < cfg.episodes; ++e)
    episodes.push_back(sample_episode(ds, cfg.C, cfg.k, 1, substream_seed(cfg.seed, "cov-ratio", e)));

  const std::size_t n_lambda = cfg.lambda_grid.size();
  const std::size_t n_ext = cfg.extractors.size();
  const std::size_t n_ep = episodes.size();
  std::vector<double> ratios(n_lambda * n_ep * n_ext);

  std::vector<Matrix> embedded(n_lambda);
  for (std::size_t l = 0; l < n_lambda; ++l) {
    mix.lambda = cfg.lambda_grid[l];
    embedded[l] = forward_rows(cfg.embedder, mixup_rows(ds.features, mix));
  }

  parallel_for(n_lambda * n_ep, cfg.workers, [&](std::size_t job) {
    const std::size_t l = job / n_ep;
    const std::size_t e = job % n_ep;
    const SampledEpisode& ep = episodes[e];
    const LabeledSet support = subset(embedded[l], ep.support_ids, ep.task.support.labels, cfg.C);
    for (std::size_t x = 0; x < n_ext; ++x)
      ratios[(l * n_ep + e) * n_ext + x] = support_trace_ratio(support, cfg.extractors[x]);
  });

  std::vector<CovRatioRow> rows;
  for (std::size_t l = 0; l < n_lambda; ++l) {
    for (std::size_t x = 0; x < n_ext; ++x) {
      double sum = 0.0, sum_sq = 0.0;
      for (std::size_t e = 0; e < n_ep; ++e) {
        const double r = ratios[(l * n_ep + e) * n_ext + x];
        sum += r;
        sum_sq += r * r;
      }
      const double n = static_cast<double>(n_ep);
      const double mean = sum / n;
      const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) : 0.0;
      rows.push_back(CovRatioRow{cfg.lambda_grid[l], std::string(extractor_name(cfg.extractors[x].kind)), mean,
                                 std::sqrt(var / n)});
    }
  }
  return rows;
}

SyntheticSpec anisotropic_spec(int m, int C, int k, int M) {
  require(m >= 1, Errc::kInvalidSpec, "m must be >= 1");
  SyntheticSpec s;
  s.m = m;
  s.C = C;
  s.k = k;
  s.M = M;
  s.mean = Vector::Zero(m);
  s.within_class_covariance = geomspace(4.0, 0.04, m).asDiagonal();
  s.class_mean_covariance = geomspace(0.04, 1.0, m).asDiagonal();
  return s;
}

SyntheticSpec mixup_spec(int m, int C, int k, int M) {
  SyntheticSpec s = anisotropic_spec(m, C, k, M);
  s.class_mean_covariance = Matrix::Identity(m, m);
  s.within_class_covariance = geomspace(1.5, 0.15, m).array().square().matrix().asDiagonal();
  return s;
}

SyntheticSpec sandwich_spec(int k, int M) {
  SyntheticSpec s;
  s.m = 2;
  s.C = 2;
  s.k = k;
  s.M = M;
  s.mean = Vector::Zero(2);
  s.class_mean_covariance = Matrix::Zero(2, 2);
  s.within_class_covariance = 0.25 * Matrix::Identity(2, 2);
  s.fixed_class_means = std::vector<Vector>{Vector::Zero(2), Vector::Zero(2)};
  s.multimodal = std::vector<ClassMixture>{
      ClassMixture{{Eigen::Vector2d(-4.0, 0.0), Eigen::Vector2d(4.0, 0.0)}, {0.5, 0.5}},
      ClassMixture{{Vector::Zero(2)}, {1.0}},
  };
  return s;
}

SyntheticSpec entangled_spec(int m, int C, int k, int M, std::uint64_t rotation_seed) {
  SyntheticSpec s = anisotropic_spec(m, C, k, M);
  Rng rng = make_rng(rotation_seed, "rotation");
  Matrix g(m, m);
  for (int j = 0; j < m; ++j) g.col(j) = standard_normal(m, rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  s.within_class_covariance = q * s.within_class_covariance * q.transpose();
  s.class_mean_covariance = q * s.class_mean_covariance * q.transpose();
  s.within_class_covariance = 0.5 * (s.within_class_covariance + s.within_class_covariance.transpose()).eval();
  s.class_mean_covariance = 0.5 * (s.class_mean_covariance + s.class_mean_covariance.transpose()).eval();
  return s;
}

}  // namespace lfdproto
