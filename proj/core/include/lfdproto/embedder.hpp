#pragma once

#include <cstdint>
#include <string_view>

#include "lfdproto/linalg.hpp"

namespace lfdproto {

enum class EmbedderKind { kIdentity, kLinear, kOneHiddenLayer };

std::string_view embedder_name(EmbedderKind kind);
EmbedderKind parse_embedder(std::string_view name);

/// Small parametric embedding f_theta: R^input_dim -> R^output_dim.
///
/// Parameter layout (row-major weights):
///   Linear:          W (out x in), b (out)
///   OneHiddenLayer:  W1 (hidden x in), b1 (hidden), W2 (out x hidden), b2 (out)
/// The hidden nonlinearity is tanh.
struct Embedder {
  EmbedderKind kind = EmbedderKind::kIdentity;
  int input_dim = 1;
  int hidden_dim = 0;
  int output_dim = 1;
  Vector params;

  static Embedder identity(int dim);
  /// Linear map initialised to W = I, b = 0 (requires in == out).
  static Embedder linear_identity(int dim);
  static Embedder random(EmbedderKind kind, int input_dim, int hidden_dim, int output_dim,
                         std::uint64_t seed);

  Eigen::Index parameter_count() const;
  void validate() const;
};

Eigen::Index parameter_count(EmbedderKind kind, int input_dim, int hidden_dim, int output_dim);

Vector forward(const Embedder& e, const Vector& x);

/// Embeds every row of `x`.
Matrix forward_rows(const Embedder& e, const Matrix& x);

/// grad_params += (d output / d theta)^T grad_output, evaluated at x.
void accumulate_param_gradient(const Embedder& e, const Vector& x, const Vector& grad_output,
                               Vector& grad_params);

}  // namespace lfdproto
