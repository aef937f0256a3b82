#pragma once

#include <lfdproto/linalg.hpp>
#include <lfdproto/rng.hpp>
#include <lfdproto/scatter.hpp>

#include "oracles.hpp"

namespace testutil {

inline lfdproto::Matrix random_matrix(Eigen::Index r, Eigen::Index c, lfdproto::Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  lfdproto::Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(rng);
  return m;
}

inline lfdproto::Matrix random_spd(Eigen::Index n, lfdproto::Rng& rng) {
  const lfdproto::Matrix g = random_matrix(n, n, rng);
  lfdproto::Matrix s = g * g.transpose() + 0.1 * lfdproto::Matrix::Identity(n, n);
  return 0.5 * (s + s.transpose());
}

inline lfdproto::Matrix random_symmetric(Eigen::Index n, lfdproto::Rng& rng) {
  const lfdproto::Matrix g = random_matrix(n, n, rng);
  return 0.5 * (g + g.transpose());
}

inline oracle::Mat to_rows(const lfdproto::Matrix& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

inline lfdproto::Matrix from_rows(const oracle::Mat& m) {
  lfdproto::Matrix out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.front().size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
  return out;
}

// Balanced labeled set: `k` Gaussian points around each of the given means.
inline lfdproto::LabeledSet gaussian_set(const std::vector<lfdproto::Vector>& means, const lfdproto::Vector& sd, int k,
                                         lfdproto::Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  lfdproto::LabeledSet s;
  const auto m = means.front().size();
  s.class_count = static_cast<int>(means.size());
  s.points.resize(static_cast<Eigen::Index>(means.size()) * k, m);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < means.size(); ++c)
    for (int i = 0; i < k; ++i, ++row) {
      for (Eigen::Index j = 0; j < m; ++j) s.points(row, j) = means[c](j) + sd(j) * normal(rng);
      s.labels.push_back(static_cast<int>(c));
    }
  return s;
}

inline lfdproto::LabeledSet set_1d(const std::vector<double>& xs, const std::vector<int>& labels, int classes) {
  lfdproto::LabeledSet s;
  s.points.resize(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) s.points(static_cast<Eigen::Index>(i), 0) = xs[i];
  s.labels = labels;
  s.class_count = classes;
  return s;
}

}  // namespace testutil
