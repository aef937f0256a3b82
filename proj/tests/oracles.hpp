#pragma once

// Reference implementations written without the library's solvers, used as
// independent checks in the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline double det2(const Mat& a) { return a[0][0] * a[1][1] - a[0][1] * a[1][0]; }

inline double det3(const Mat& a) {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

inline double det_shifted(const Mat& a, const Mat& b, double lambda) {
  const std::size_t n = a.size();
  Mat m(n, Vec(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i][j] = a[i][j] - lambda * b[i][j];
  return n == 2 ? det2(m) : det3(m);
}

// Real roots of c0 + c1 x + c2 x^2 (c2 != 0), descending.
inline Vec quadratic_roots(double c0, double c1, double c2) {
  const double disc = std::max(0.0, c1 * c1 - 4.0 * c2 * c0);
  const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
  Vec r;
  if (q == 0.0) {
    r = {0.0, 0.0};
  } else {
    r = {q / c2, c0 / q};
  }
  std::sort(r.rbegin(), r.rend());
  return r;
}

// Real roots of c0 + c1 x + c2 x^2 + c3 x^3 known to have three real roots,
// by the trigonometric method, polished with Newton steps; descending.
inline Vec cubic_roots(double c0, double c1, double c2, double c3) {
  const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  Vec r(3);
  if (std::abs(p) < 1e-300) {
    r = {std::cbrt(-q) - a / 3.0, std::cbrt(-q) - a / 3.0, std::cbrt(-q) - a / 3.0};
  } else {
    const double m = 2.0 * std::sqrt(std::max(0.0, -p / 3.0));
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int i = 0; i < 3; ++i) r[static_cast<std::size_t>(i)] = m * std::cos(theta - 2.0 * std::numbers::pi * i / 3.0) - a / 3.0;
  }
  for (double& x : r) {
    for (int it = 0; it < 3; ++it) {
      const double f = ((c3 * x + c2) * x + c1) * x + c0;
      const double df = (3.0 * c3 * x + 2.0 * c2) * x + c1;
      if (df == 0.0) break;
      const double step = f / df;
      if (!std::isfinite(step) || std::abs(step) > 1e-6 * (1.0 + std::abs(x))) break;
      x -= step;
    }
  }
  std::sort(r.rbegin(), r.rend());
  return r;
}

// Roots of det(a - lambda b) = 0 for 2x2 or 3x3 inputs, descending. The
// polynomial coefficients are recovered by interpolating the determinant.
inline Vec generalized_eigenvalues(const Mat& a, const Mat& b) {
  const std::size_t n = a.size();
  if (n == 2) {
    const double p0 = det_shifted(a, b, 0.0), p1 = det_shifted(a, b, 1.0), pm = det_shifted(a, b, -1.0);
    const double c0 = p0, c2 = 0.5 * (p1 + pm) - p0, c1 = 0.5 * (p1 - pm);
    return quadratic_roots(c0, c1, c2);
  }
  const double p0 = det_shifted(a, b, 0.0), p1 = det_shifted(a, b, 1.0), pm = det_shifted(a, b, -1.0),
               p2 = det_shifted(a, b, 2.0);
  const double c0 = p0;
  const double c2 = 0.5 * (p1 + pm) - p0;
  // p1 - pm = 2 c1 + 2 c3; p2 = c0 + 2 c1 + 4 c2 + 8 c3
  const double s = 0.5 * (p1 - pm);  // c1 + c3
  const double c3 = (p2 - c0 - 4.0 * c2 - 2.0 * s) / 6.0;
  const double c1 = s - c3;
  return cubic_roots(c0, c1, c2, c3);
}

inline Mat identity(std::size_t n) {
  Mat m(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

// (1/2) sum over ordered pairs of w(i, j) (x_i - x_j)(x_i - x_j)^T.
inline Mat pair_scatter(const std::vector<Vec>& x, const std::function<double(std::size_t, std::size_t)>& w) {
  const std::size_t m = x.front().size();
  Mat s(m, Vec(m, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double wij = w(i, j);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) s[r][c] += 0.5 * wij * (x[i][r] - x[j][r]) * (x[i][c] - x[j][c]);
    }
  return s;
}

// Plain prototypical-network decision: class means of the support, nearest
// squared Euclidean distance, ties to the lowest class id.
inline std::vector<int> protonet_predict(const std::vector<Vec>& support, const std::vector<int>& support_labels,
                                         int classes, const std::vector<Vec>& queries) {
  const std::size_t m = support.front().size();
  std::vector<Vec> proto(static_cast<std::size_t>(classes), Vec(m, 0.0));
  std::vector<int> count(static_cast<std::size_t>(classes), 0);
  for (std::size_t i = 0; i < support.size(); ++i) {
    const auto c = static_cast<std::size_t>(support_labels[i]);
    for (std::size_t j = 0; j < m; ++j) proto[c][j] += support[i][j];
    ++count[c];
  }
  for (std::size_t c = 0; c < proto.size(); ++c)
    for (double& v : proto[c]) v /= count[c];
  std::vector<int> out;
  for (const Vec& q : queries) {
    int best = 0;
    double best_d = 0.0;
    for (int c = 0; c < classes; ++c) {
      double d = 0.0;
      for (std::size_t j = 0; j < m; ++j) d += (q[j] - proto[static_cast<std::size_t>(c)][j]) * (q[j] - proto[static_cast<std::size_t>(c)][j]);
      if (c == 0 || d < best_d) {
        best = c;
        best_d = d;
      }
    }
    out.push_back(best);
  }
  return out;
}

// Central finite differences of f at theta with step h.
inline Vec central_difference(const std::function<double(const Vec&)>& f, Vec theta, double h) {
  Vec g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double t0 = theta[i];
    theta[i] = t0 + h;
    const double up = f(theta);
    theta[i] = t0 - h;
    const double down = f(theta);
    theta[i] = t0;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Standard normal CDF.
inline double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Two-sided sign test p-value for `wins` successes among `n` non-tied pairs.
inline double sign_test_p(int wins, int n) {
  const int extreme = std::max(wins, n - wins);
  double tail = 0.0;
  for (int i = extreme; i <= n; ++i) tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
  return std::min(1.0, 2.0 * tail);
}

}  // namespace oracle
