#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lfdproto/datagen.hpp"
#include "lfdproto/linalg.hpp"
#include "lfdproto/projection.hpp"

namespace lfdproto {

/// Gaussian class-conditional model with a shared within-class covariance.
/// Class means are drawn from N(mean, class_mean_covariance) unless
/// fixed_class_means is set.
struct GaussianTaskModel {
  Vector mean;
  Matrix class_mean_covariance;
  Matrix within_class_covariance;
  int k = 5;
  int C = 2;
  int M = 15;
  std::optional<std::vector<Vector>> fixed_class_means;

  Eigen::Index dim() const { return mean.size(); }
  void validate() const;
  SyntheticSpec to_spec() const;
};

enum class BoundForm {
  kAsPrinted,  // ... + 16 (1 + (1/k) Tr(S_F S_Fc)) + ...
  kAlternate,  // ... + 16 (1 + 1/k) Tr(S_F S_Fc) + ...
};

enum class FourthMomentMethod { kClosedForm, kMonteCarlo };

struct FourthMomentOptions {
  FourthMomentMethod method = FourthMomentMethod::kClosedForm;
  int samples = 100000;
  std::uint64_t seed = 0;
};

/// Ingredients of the binary risk bound for a fixed projection f (m x n).
struct BoundTerms {
  Matrix sigma_f;          // f^T (E[d d^T] / 2) f, d = mu_a - mu_b
  Matrix sigma_fc;         // f^T Sigma_c f
  double numerator = 0.0;  // 4 Tr(sigma_f)^2
  double within_term = 0.0;    // 8 (1 + 1/k)^2 Tr(sigma_fc^2)
  double cross_term = 0.0;     // 16 (1 + (1/k) Tr(sigma_f sigma_fc))
  double cross_term_alternate = 0.0;  // 16 (1 + 1/k) Tr(sigma_f sigma_fc)
  double fourth_moment = 0.0;  // E[(d^T f f^T d)^2]
  double rhs = 0.0;
  double rhs_alternate = 0.0;
};

/// Second moment E[d d^T] of the difference of two distinct class means.
Matrix mean_difference_second_moment(const GaussianTaskModel& model);

/// E[(d^T f f^T d)^2]; closed form (Tr G)^2 + 2 Tr(G^2) with G = f^T (2 Sigma_pop) f
/// for Gaussian means, exact average over class pairs for fixed means.
double mean_difference_fourth_moment(const GaussianTaskModel& model, const Matrix& f,
                                     const FourthMomentOptions& opts = {});

BoundTerms bound_terms(const GaussianTaskModel& model, const Matrix& f, const FourthMomentOptions& opts = {});

/// 1 - 4 Tr(S_F)^2 / [8(1+1/k)^2 Tr(S_Fc^2) + cross + E[(d^T F F^T d)^2]].
/// Throws DegenerateDenominator when the bracket is not positive.
double risk_bound_binary(const GaussianTaskModel& model, const Matrix& f, BoundForm form = BoundForm::kAsPrinted,
                         const FourthMomentOptions& opts = {});

struct MulticlassBound {
  double raw = 0.0;      // sum of the C - 1 pairwise terms
  double clipped = 0.0;  // raw clipped to [0, 1]
};

MulticlassBound risk_bound_multiclass(const GaussianTaskModel& model, const Matrix& f,
                                      BoundForm form = BoundForm::kAsPrinted, const FourthMomentOptions& opts = {});

/// Upper bound on Var[alpha | a, b]: 8(1+1/k) Tr(S_Fc((1+1/k) S_Fc + 2 S_F)).
double lemma3_variance_bound(const GaussianTaskModel& model, const Matrix& f);

struct RiskEstimate {
  double risk = 0.0;
  double standard_error = 0.0;
  int trials = 0;
};

/// Mean 0-1 risk over `trials` sampled episodes. With `fixed` the projection
/// is held constant, otherwise each episode computes its own from its support.
RiskEstimate monte_carlo_risk(const GaussianTaskModel& model, const ExtractorConfig& extractor, int trials,
                              std::uint64_t seed, int workers = 1, const ProjectionSet* fixed = nullptr);

struct Lemma2Result {
  double conditional_gap = 0.0;  // mean of alpha - d^T f f^T d
  double conditional_stderr = 0.0;
  double unconditional_gap = 0.0;  // mean of alpha - 2 Tr(S_F)
  double unconditional_stderr = 0.0;

  bool within(double sigmas) const;
};

struct Lemma3Result {
  double bound = 0.0;
  double empirical = 0.0;  // E over (a, b) of the sample Var[alpha | a, b]
  double standard_error = 0.0;
  double slack = 0.0;      // bound - empirical

  bool holds(double sigmas) const { return slack >= -sigmas * standard_error; }
};

struct AlphaSampling {
  int pairs = 200;       // class-mean draws
  int replicates = 50;   // episodes per draw
};

Lemma2Result verify_lemma2(const GaussianTaskModel& model, const Matrix& f, const AlphaSampling& sampling,
                           std::uint64_t seed, int workers = 1);
Lemma3Result verify_lemma3(const GaussianTaskModel& model, const Matrix& f, const AlphaSampling& sampling,
                           std::uint64_t seed, int workers = 1);

struct BoundReport {
  std::string extractor;
  int projection_dim = 0;
  BoundTerms terms;
  double bound_rhs = 0.0;
  double bound_rhs_alternate = 0.0;
  MulticlassBound multiclass;
  double bound_rhs_identity = 0.0;
  double mc_risk = 0.0;
  double mc_stderr = 0.0;
  bool violated = false;  // mc_risk > bound_rhs + 3 stderr
  double lemma1_error = 0.0;
  Lemma2Result lemma2;
  Lemma3Result lemma3;
  double trace_ratio_identity = 0.0;   // Tr(S^{-1} S_c) in the embedding space
  double trace_ratio_extractor = 0.0;  // Tr(S_F^{-1} S_Fc)
  int trials = 0;
  std::uint64_t seed = 0;
};

struct VerifyOptions {
  int trials = 2000;
  AlphaSampling sampling;
  FourthMomentOptions fourth_moment;
  int workers = 1;
};

/// Fixes the projection from a pilot support drawn independently of the
/// evaluation episodes, then evaluates the bound, its Monte Carlo risk and
/// the lemma checks.
BoundReport verify_bound(const GaussianTaskModel& model, const ExtractorConfig& extractor, std::uint64_t seed,
                         const VerifyOptions& opts = {});

/// Projection computed from a pilot support of the model.
Projection pilot_projection(const GaussianTaskModel& model, const ExtractorConfig& extractor, std::uint64_t seed);

/// Tr((f^T s f)^{-1} f^T s_c f) for model covariances.
double model_trace_ratio(const GaussianTaskModel& model, const Matrix& f);

/// Random binary model: m in [1, max_dim], k in {1, 5, 10}, random PSD covariances.
GaussianTaskModel random_model(std::uint64_t seed, int max_dim = 8);

}  // namespace lfdproto
