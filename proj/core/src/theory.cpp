#include "lfdproto/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "lfdproto/error.hpp"
#include "lfdproto/rng.hpp"

namespace lfdproto {
namespace {

void check_binary(const GaussianTaskModel& model, const char* what) {
  model.validate();
  require(model.C == 2, Errc::kInvalidArgument, std::string(what) + " needs a two-class model");
}

void check_projection(const GaussianTaskModel& model, const Matrix& f) {
  require(f.rows() == model.dim() && f.cols() >= 1, Errc::kDimensionMismatch,
          "projection must be m x n with n >= 1");
  require(all_finite(f), Errc::kNotFinite, "projection has non-finite entries");
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// alpha[p * replicates + r] for a query of class a against classes (a, b);
// distance[p] is d^T f f^T d for pair p.
struct AlphaSamples {
  std::vector<double> alpha;
  std::vector<double> distance;
};

AlphaSamples sample_alpha(const GaussianTaskModel& model, const Matrix& f, const AlphaSampling& sampling,
                          std::uint64_t seed, int workers) {
  require(sampling.pairs >= 2 && sampling.replicates >= 2, Errc::kInvalidArgument,
          "alpha sampling needs at least 2 pairs and 2 replicates");
  const TaskSampler sampler(model.to_spec());
  const auto pairs = static_cast<std::size_t>(sampling.pairs);
  const auto reps = static_cast<std::size_t>(sampling.replicates);
  AlphaSamples out;
  out.alpha.resize(pairs * reps);
  out.distance.resize(pairs);
  parallel_for(pairs, workers, [&](std::size_t p) {
    Rng rng = make_rng(seed, "alpha", p);
    const std::vector<Vector> means = sampler.sample_class_means(rng);
    out.distance[p] = (f.transpose() * (means[0] - means[1])).squaredNorm();
    for (std::size_t r = 0; r < reps; ++r) {
      const Vector pa = f.transpose() * sampler.sample_points(0, means[0], model.k, rng).colwise().mean().transpose();
      const Vector pb = f.transpose() * sampler.sample_points(1, means[1], model.k, rng).colwise().mean().transpose();
      const Vector z = f.transpose() * sampler.sample_points(0, means[0], 1, rng).row(0).transpose();
      out.alpha[p * reps + r] = (z - pb).squaredNorm() - (z - pa).squaredNorm();
    }
  });
  return out;
}

Matrix random_psd(Eigen::Index m, double scale, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> log_spread(-1.0, 1.0);
  Matrix a(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) a(i, j) = normal(rng);
  Vector s(m);
  for (Eigen::Index j = 0; j < m; ++j) s(j) = std::exp(log_spread(rng));
  a = a * s.asDiagonal();
  Matrix out = scale * a * a.transpose() / static_cast<double>(m);
  return 0.5 * (out + out.transpose());
}

}  // namespace

void GaussianTaskModel::validate() const { to_spec().validate(); }

SyntheticSpec GaussianTaskModel::to_spec() const {
  SyntheticSpec s;
  s.m = static_cast<int>(mean.size());
  s.C = C;
  s.k = k;
  s.M = M;
  s.mean = mean;
  s.class_mean_covariance = class_mean_covariance;
  s.within_class_covariance = within_class_covariance;
  s.fixed_class_means = fixed_class_means;
  return s;
}

Matrix mean_difference_second_moment(const GaussianTaskModel& model) {
  model.validate();
  if (!model.fixed_class_means) return 2.0 * model.class_mean_covariance;
  const auto& mu = *model.fixed_class_means;
  Matrix out = Matrix::Zero(model.dim(), model.dim());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < mu.size(); ++j)
      if (i != j) out.noalias() += (mu[i] - mu[j]) * (mu[i] - mu[j]).transpose();
  return out / static_cast<double>(mu.size() * (mu.size() - 1));
}

double mean_difference_fourth_moment(const GaussianTaskModel& model, const Matrix& f,
                                     const FourthMomentOptions& opts) {
  model.validate();
  check_projection(model, f);
  if (model.fixed_class_means) {
    const auto& mu = *model.fixed_class_means;
    double sum = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t j = 0; j < mu.size(); ++j)
        if (i != j) sum += std::pow((f.transpose() * (mu[i] - mu[j])).squaredNorm(), 2);
    return sum / static_cast<double>(mu.size() * (mu.size() - 1));
  }
  if (opts.method == FourthMomentMethod::kClosedForm) {
    const Matrix g = f.transpose() * (2.0 * model.class_mean_covariance) * f;
    const double tr = g.trace();
    return tr * tr + 2.0 * (g * g).trace();
  }
  require(opts.samples >= 1, Errc::kInvalidArgument, "fourth moment needs samples >= 1");
  const Matrix factor = f.transpose() * psd_factor(2.0 * model.class_mean_covariance);
  Rng rng = make_rng(opts.seed, "fourth-moment");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(factor.cols());
  double sum = 0.0;
  for (int s = 0; s < opts.samples; ++s) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    sum += std::pow((factor * z).squaredNorm(), 2);
  }
  return sum / opts.samples;
}

BoundTerms bound_terms(const GaussianTaskModel& model, const Matrix& f, const FourthMomentOptions& opts) {
  model.validate();
  check_projection(model, f);
  const double inv_k = 1.0 / model.k;
  BoundTerms t;
  t.sigma_f = f.transpose() * (0.5 * mean_difference_second_moment(model)) * f;
  t.sigma_fc = f.transpose() * model.within_class_covariance * f;
  const double tr_f = t.sigma_f.trace();
  const double cross = (t.sigma_f * t.sigma_fc).trace();
  t.numerator = 4.0 * tr_f * tr_f;
  t.within_term = 8.0 * (1.0 + inv_k) * (1.0 + inv_k) * (t.sigma_fc * t.sigma_fc).trace();
  t.cross_term = 16.0 * (1.0 + inv_k * cross);
  t.cross_term_alternate = 16.0 * (1.0 + inv_k) * cross;
  t.fourth_moment = mean_difference_fourth_moment(model, f, opts);
  const double den = t.within_term + t.cross_term + t.fourth_moment;
  const double den_alt = t.within_term + t.cross_term_alternate + t.fourth_moment;
  t.rhs = den > 0.0 ? 1.0 - t.numerator / den : std::numeric_limits<double>::quiet_NaN();
  t.rhs_alternate = den_alt > 0.0 ? 1.0 - t.numerator / den_alt : std::numeric_limits<double>::quiet_NaN();
  return t;
}

double risk_bound_binary(const GaussianTaskModel& model, const Matrix& f, BoundForm form,
                         const FourthMomentOptions& opts) {
  const BoundTerms t = bound_terms(model, f, opts);
  const double rhs = form == BoundForm::kAsPrinted ? t.rhs : t.rhs_alternate;
  require(std::isfinite(rhs), Errc::kDegenerateDenominator, "risk bound denominator is not positive");
  return rhs;
}

MulticlassBound risk_bound_multiclass(const GaussianTaskModel& model, const Matrix& f, BoundForm form,
                                      const FourthMomentOptions& opts) {
  MulticlassBound out;
  out.raw = static_cast<double>(model.C - 1) * risk_bound_binary(model, f, form, opts);
  out.clipped = std::clamp(out.raw, 0.0, 1.0);
  return out;
}

double lemma3_variance_bound(const GaussianTaskModel& model, const Matrix& f) {
  model.validate();
  check_projection(model, f);
  const double a = 1.0 + 1.0 / model.k;
  const Matrix sigma_f = f.transpose() * (0.5 * mean_difference_second_moment(model)) * f;
  const Matrix sigma_fc = f.transpose() * model.within_class_covariance * f;
  return 8.0 * a * (sigma_fc * (a * sigma_fc + 2.0 * sigma_f)).trace();
}

RiskEstimate monte_carlo_risk(const GaussianTaskModel& model, const ExtractorConfig& extractor, int trials,
                              std::uint64_t seed, int workers, const ProjectionSet* fixed) {
  model.validate();
  require(trials >= 1, Errc::kInvalidArgument, "monte_carlo_risk needs trials >= 1");
  const TaskSampler sampler(model.to_spec());
  std::vector<double> risks(static_cast<std::size_t>(trials));
  parallel_for(risks.size(), workers, [&](std::size_t t) {
    const Task task = sampler.sample(substream_seed(seed, "risk", t));
    const ProjectionSet projections = fixed ? *fixed : build_projections(task.support, extractor);
    risks[t] = run_episode(task, projections, LossVariant::kSoftmax).task_loss;
  });
  RiskEstimate out;
  out.trials = trials;
  out.risk = mean_of(risks);
  out.standard_error = stderr_of(risks, out.risk);
  return out;
}

bool Lemma2Result::within(double sigmas) const {
  const auto ok = [sigmas](double gap, double se) {
    return se > 0.0 ? std::abs(gap) <= sigmas * se : std::abs(gap) <= 1e-9;
  };
  return ok(conditional_gap, conditional_stderr) && ok(unconditional_gap, unconditional_stderr);
}

Lemma2Result verify_lemma2(const GaussianTaskModel& model, const Matrix& f, const AlphaSampling& sampling,
                           std::uint64_t seed, int workers) {
  check_binary(model, "verify_lemma2");
  check_projection(model, f);
  const AlphaSamples s = sample_alpha(model, f, sampling, seed, workers);
  const auto reps = static_cast<std::size_t>(sampling.replicates);

  std::vector<double> residual(s.alpha.size());
  std::vector<double> pair_means(s.distance.size());
  for (std::size_t p = 0; p < s.distance.size(); ++p) {
    double sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      residual[p * reps + r] = s.alpha[p * reps + r] - s.distance[p];
      sum += s.alpha[p * reps + r];
    }
    pair_means[p] = sum / static_cast<double>(reps);
  }
  const double expected = 2.0 * (f.transpose() * (0.5 * mean_difference_second_moment(model)) * f).trace();

  Lemma2Result out;
  out.conditional_gap = mean_of(residual);
  out.conditional_stderr = stderr_of(residual, out.conditional_gap);
  const double mean_alpha = mean_of(pair_means);
  out.unconditional_gap = mean_alpha - expected;
  out.unconditional_stderr = stderr_of(pair_means, mean_alpha);
  return out;
}

Lemma3Result verify_lemma3(const GaussianTaskModel& model, const Matrix& f, const AlphaSampling& sampling,
                           std::uint64_t seed, int workers) {
  check_binary(model, "verify_lemma3");
  check_projection(model, f);
  const AlphaSamples s = sample_alpha(model, f, sampling, seed, workers);
  const auto reps = static_cast<std::size_t>(sampling.replicates);
  std::vector<double> variances(s.distance.size());
  for (std::size_t p = 0; p < s.distance.size(); ++p) {
    double mean = 0.0;
    for (std::size_t r = 0; r < reps; ++r) mean += s.alpha[p * reps + r];
    mean /= static_cast<double>(reps);
    double ss = 0.0;
    for (std::size_t r = 0; r < reps; ++r) ss += std::pow(s.alpha[p * reps + r] - mean, 2);
    variances[p] = ss / static_cast<double>(reps - 1);
  }
  Lemma3Result out;
  out.bound = lemma3_variance_bound(model, f);
  out.empirical = mean_of(variances);
  out.standard_error = stderr_of(variances, out.empirical);
  out.slack = out.bound - out.empirical;
  return out;
}

Projection pilot_projection(const GaussianTaskModel& model, const ExtractorConfig& extractor, std::uint64_t seed) {
  require(extractor.kind != ExtractorKind::kLfdaPerClass, Errc::kInvalidArgument,
          "the risk bound needs a shared projection");
  const Task pilot = sample_task(model.to_spec(), seed);
  return build_projections(pilot.support, extractor).projections.front();
}

double model_trace_ratio(const GaussianTaskModel& model, const Matrix& f) {
  check_projection(model, f);
  const Matrix between = 0.5 * mean_difference_second_moment(model);
  if ((f.transpose() * between * f).trace() <= 0.0) return std::numeric_limits<double>::infinity();
  return trace_ratio(f, model.within_class_covariance, between);
}

BoundReport verify_bound(const GaussianTaskModel& model, const ExtractorConfig& extractor, std::uint64_t seed,
                         const VerifyOptions& opts) {
  check_binary(model, "verify_bound");
  const Projection proj = pilot_projection(model, extractor, substream_seed(seed, "pilot"));
  const Matrix& f = proj.matrix;

  BoundReport r;
  r.extractor = std::string(extractor_name(extractor.kind));
  r.projection_dim = static_cast<int>(f.cols());
  r.seed = seed;
  r.trials = opts.trials;
  r.terms = bound_terms(model, f, opts.fourth_moment);
  r.bound_rhs = r.terms.rhs;
  r.bound_rhs_alternate = r.terms.rhs_alternate;
  r.multiclass = risk_bound_multiclass(model, f, BoundForm::kAsPrinted, opts.fourth_moment);
  r.bound_rhs_identity = risk_bound_binary(model, Matrix::Identity(model.dim(), model.dim()),
                                           BoundForm::kAsPrinted, opts.fourth_moment);

  const ProjectionSet fixed{{proj}, ProjectionMode::kShared};
  const RiskEstimate risk =
      monte_carlo_risk(model, extractor, opts.trials, substream_seed(seed, "risk"), opts.workers, &fixed);
  r.mc_risk = risk.risk;
  r.mc_stderr = risk.standard_error;
  r.violated = r.mc_risk > r.bound_rhs + 3.0 * r.mc_stderr;

  const TaskSampler sampler(model.to_spec());
  for (std::uint64_t e = 0; e < 16; ++e) {
    const Task t = sampler.sample(substream_seed(seed, "lemma1", e));
    const ClassMeans means = class_means(t.support);
    const Matrix z = project_rows(proj, t.support.points);
    for (int c = 0; c < t.classes(); ++c) {
      Vector projected_mean = Vector::Zero(z.cols());
      const auto idx = t.support.class_indices(c);
      for (Eigen::Index i : idx) projected_mean += z.row(i).transpose();
      projected_mean /= static_cast<double>(idx.size());
      const Vector mean_projected = project(proj, means.per_class[static_cast<std::size_t>(c)]);
      const double scale = std::max(1.0, mean_projected.norm());
      r.lemma1_error = std::max(r.lemma1_error, (projected_mean - mean_projected).norm() / scale);
    }
  }

  r.lemma2 = verify_lemma2(model, f, opts.sampling, substream_seed(seed, "lemma2"), opts.workers);
  r.lemma3 = verify_lemma3(model, f, opts.sampling, substream_seed(seed, "lemma3"), opts.workers);
  r.trace_ratio_identity = model_trace_ratio(model, Matrix::Identity(model.dim(), model.dim()));
  r.trace_ratio_extractor = model_trace_ratio(model, f);
  return r;
}

GaussianTaskModel random_model(std::uint64_t seed, int max_dim) {
  require(max_dim >= 1, Errc::kInvalidArgument, "max_dim must be >= 1");
  Rng rng = make_rng(seed, "random-model");
  std::uniform_int_distribution<int> dim(1, max_dim);
  std::uniform_int_distribution<int> shot(0, 2);
  std::uniform_real_distribution<double> log_scale(-1.5, 1.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr std::array<int, 3> kShots{1, 5, 10};

  GaussianTaskModel model;
  const int m = dim(rng);
  model.k = kShots[static_cast<std::size_t>(shot(rng))];
  model.C = 2;
  model.M = 10;
  model.mean = Vector(m);
  for (int i = 0; i < m; ++i) model.mean(i) = normal(rng);
  model.class_mean_covariance = random_psd(m, std::exp(log_scale(rng)), rng);
  model.within_class_covariance = random_psd(m, std::exp(log_scale(rng)), rng);
  return model;
}

}  // namespace lfdproto
