#include "lfdproto/embedder.hpp"

#include <cmath>
#include <random>
#include <string>

#include "lfdproto/error.hpp"
#include "lfdproto/rng.hpp"

namespace lfdproto {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajor>;
using Weights = Eigen::Map<RowMajor>;

}  // namespace

std::string_view embedder_name(EmbedderKind kind) {
  switch (kind) {
    case EmbedderKind::kIdentity: return "identity";
    case EmbedderKind::kLinear: return "linear";
    case EmbedderKind::kOneHiddenLayer: return "one-hidden-layer";
  }
  return "identity";
}

EmbedderKind parse_embedder(std::string_view name) {
  if (name == "identity") return EmbedderKind::kIdentity;
  if (name == "linear") return EmbedderKind::kLinear;
  if (name == "one-hidden-layer" || name == "mlp") return EmbedderKind::kOneHiddenLayer;
  fail(Errc::kInvalidArgument, "unknown embedder '" + std::string(name) + "'");
}

Eigen::Index parameter_count(EmbedderKind kind, int input_dim, int hidden_dim, int output_dim) {
  switch (kind) {
    case EmbedderKind::kIdentity: return 0;
    case EmbedderKind::kLinear: return Eigen::Index{output_dim} * input_dim + output_dim;
    case EmbedderKind::kOneHiddenLayer:
      return Eigen::Index{hidden_dim} * input_dim + hidden_dim + Eigen::Index{output_dim} * hidden_dim +
             output_dim;
  }
  return 0;
}

Eigen::Index Embedder::parameter_count() const {
  return lfdproto::parameter_count(kind, input_dim, hidden_dim, output_dim);
}

void Embedder::validate() const {
  require(input_dim >= 1 && output_dim >= 1, Errc::kInvalidArgument, "embedder dimensions must be >= 1");
  require(kind != EmbedderKind::kIdentity || input_dim == output_dim, Errc::kInvalidArgument,
          "identity embedder needs input_dim == output_dim");
  require(kind != EmbedderKind::kOneHiddenLayer || hidden_dim >= 1, Errc::kInvalidArgument,
          "one-hidden-layer embedder needs hidden_dim >= 1");
  require(params.size() == parameter_count(), Errc::kInvalidArgument,
          "embedder parameter count does not match its kind");
  require(params.allFinite(), Errc::kNotFinite, "embedder parameters are not finite");
}

Embedder Embedder::identity(int dim) { return Embedder{EmbedderKind::kIdentity, dim, 0, dim, Vector()}; }

Embedder Embedder::linear_identity(int dim) {
  Embedder e{EmbedderKind::kLinear, dim, 0, dim, Vector::Zero(lfdproto::parameter_count(EmbedderKind::kLinear, dim, 0, dim))};
  Weights(e.params.data(), dim, dim).setIdentity();
  return e;
}

Embedder Embedder::random(EmbedderKind kind, int input_dim, int hidden_dim, int output_dim,
                          std::uint64_t seed) {
  if (kind == EmbedderKind::kIdentity) return identity(input_dim);
  Embedder e{kind, input_dim, kind == EmbedderKind::kOneHiddenLayer ? hidden_dim : 0, output_dim, Vector()};
  e.params = Vector::Zero(e.parameter_count());
  Rng rng = make_rng(seed, "embedder-init");
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](Eigen::Index offset, Eigen::Index count, double scale) {
    for (Eigen::Index i = 0; i < count; ++i) e.params(offset + i) = scale * normal(rng);
  };
  if (kind == EmbedderKind::kLinear) {
    fill(0, Eigen::Index{output_dim} * input_dim, 1.0 / std::sqrt(static_cast<double>(input_dim)));
  } else {
    const Eigen::Index w1 = Eigen::Index{hidden_dim} * input_dim;
    fill(0, w1, 1.0 / std::sqrt(static_cast<double>(input_dim)));
    fill(w1, hidden_dim, 0.1);
    fill(w1 + hidden_dim, Eigen::Index{output_dim} * hidden_dim, 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
  }
  return e;
}

Vector forward(const Embedder& e, const Vector& x) {
  require(x.size() == e.input_dim, Errc::kDimensionMismatch, "embedder input dimension mismatch");
  switch (e.kind) {
    case EmbedderKind::kIdentity: return x;
    case EmbedderKind::kLinear: {
      const ConstWeights w(e.params.data(), e.output_dim, e.input_dim);
      return w * x + e.params.segment(Eigen::Index{e.output_dim} * e.input_dim, e.output_dim);
    }
    case EmbedderKind::kOneHiddenLayer: {
      const Eigen::Index w1 = Eigen::Index{e.hidden_dim} * e.input_dim;
      const ConstWeights first(e.params.data(), e.hidden_dim, e.input_dim);
      const ConstWeights second(e.params.data() + w1 + e.hidden_dim, e.output_dim, e.hidden_dim);
      const Vector hidden = (first * x + e.params.segment(w1, e.hidden_dim)).array().tanh().matrix();
      return second * hidden + e.params.tail(e.output_dim);
    }
  }
  return x;
}

Matrix forward_rows(const Embedder& e, const Matrix& x) {
  require(x.cols() == e.input_dim, Errc::kDimensionMismatch, "embedder input dimension mismatch");
  if (e.kind == EmbedderKind::kIdentity) return x;
  Matrix out(x.rows(), e.output_dim);
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = forward(e, x.row(i).transpose()).transpose();
  return out;
}

void accumulate_param_gradient(const Embedder& e, const Vector& x, const Vector& grad_output,
                               Vector& grad_params) {
  require(grad_output.size() == e.output_dim, Errc::kDimensionMismatch, "output gradient dimension mismatch");
  require(grad_params.size() == e.parameter_count(), Errc::kDimensionMismatch,
          "parameter gradient dimension mismatch");
  switch (e.kind) {
    case EmbedderKind::kIdentity: return;
    case EmbedderKind::kLinear: {
      Weights gw(grad_params.data(), e.output_dim, e.input_dim);
      gw.noalias() += grad_output * x.transpose();
      grad_params.segment(Eigen::Index{e.output_dim} * e.input_dim, e.output_dim) += grad_output;
      return;
    }
    case EmbedderKind::kOneHiddenLayer: {
      const Eigen::Index w1 = Eigen::Index{e.hidden_dim} * e.input_dim;
      const Eigen::Index w2_offset = w1 + e.hidden_dim;
      const ConstWeights first(e.params.data(), e.hidden_dim, e.input_dim);
      const ConstWeights second(e.params.data() + w2_offset, e.output_dim, e.hidden_dim);
      const Vector hidden = (first * x + e.params.segment(w1, e.hidden_dim)).array().tanh().matrix();

      Weights g2(grad_params.data() + w2_offset, e.output_dim, e.hidden_dim);
      g2.noalias() += grad_output * hidden.transpose();
      grad_params.tail(e.output_dim) += grad_output;

      const Vector grad_pre =
          ((second.transpose() * grad_output).array() * (1.0 - hidden.array().square())).matrix();
      Weights g1(grad_params.data(), e.hidden_dim, e.input_dim);
      g1.noalias() += grad_pre * x.transpose();
      grad_params.segment(w1, e.hidden_dim) += grad_pre;
      return;
    }
  }
}

}  // namespace lfdproto
