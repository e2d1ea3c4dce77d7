#pragma once

#include <random>

#include "hypmass/models.hpp"

namespace testing {

using hypmass::Mat;
using hypmass::Vec;

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(12345);
  return gen;
}

inline double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }

inline Vec gaussian(int n) {
  std::normal_distribution<double> d;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng());
  return v;
}

inline Vec unit(int n) {
  Vec v = gaussian(n);
  return v / v.norm();
}

inline Vec ball_point(int n, double max_radius = 0.9) {
  return unit(n) * max_radius * std::pow(uniform(0.0, 1.0), 1.0 / n);
}

/// Hyperboloid point with x_1 = s.
inline Vec equidistant_point(int n, double s, double spread = 1.5) {
  Vec x(n + 1);
  const Vec w = spread * gaussian(n - 1);
  x(1) = s;
  x.tail(n - 1) = w;
  x(0) = std::sqrt(1.0 + s * s + w.squaredNorm());
  return x;
}

/// Half-space point with V_h = chi.
inline Vec horosphere_point(int n, double chi, double spread = 1.5) {
  Vec z(n);
  z(0) = 1.0 / chi;
  z.tail(n - 1) = spread * gaussian(n - 1);
  return z;
}

inline Mat orthogonal(int m) {
  Mat a(m, m);
  for (int j = 0; j < m; ++j) a.col(j) = gaussian(m);
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ() * Mat::Identity(m, m);
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testing
