#ifndef SHAPEDYN_TEST_SUPPORT_HPP
#define SHAPEDYN_TEST_SUPPORT_HPP

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "shapedyn/curve.hpp"

namespace shapedyn::testing {

using ContourD = Contour<double>;
using Points = Points2<double>;

inline ContourD ellipse(Eigen::Index n, double ax, double ay, double cx = 0, double cy = 0, double phase = 0) {
  ContourD c{Points(2, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = 2 * std::numbers::pi * double(k) / double(n) + phase;
    c.points.col(k) << cx + ax * std::cos(t), cy + ay * std::sin(t);
  }
  return c;
}

inline ContourD circle(Eigen::Index n, double r = 1, double cx = 0, double cy = 0) { return ellipse(n, r, r, cx, cy); }

// Smooth star-shaped blob r(t) = 1 + a3 cos 3t + a5 sin 5t.
inline ContourD blob(Eigen::Index n, double a3 = 0.2, double a5 = 0.1, double phase = 0) {
  ContourD c{Points(2, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = 2 * std::numbers::pi * double(k) / double(n) + phase;
    const double r = 1 + a3 * std::cos(3 * t) + a5 * std::sin(5 * t);
    c.points.col(k) << r * std::cos(t), r * std::sin(t);
  }
  return c;
}

inline ContourD rigid(const ContourD& c, double angle, double tx, double ty) {
  Eigen::Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  ContourD out{r * c.points};
  out.points.row(0).array() += tx;
  out.points.row(1).array() += ty;
  return out;
}

// Star-shaped contours whose Fourier radius coefficients (modes 2..6) follow
// an AR(1) walk, with a slow rigid drift on top.
inline std::vector<ContourD> wobbling_sequence(std::size_t frames, std::uint64_t seed, Eigen::Index n = 200,
                                               double step = 0.02) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  Eigen::VectorXd a(10);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = 0.06 * g(rng);
  std::vector<ContourD> out;
  double angle = 0, tx = 0, ty = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    ContourD c{Points(2, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
      const double t = 2 * std::numbers::pi * double(k) / double(n);
      double r = 1;
      for (int m = 2; m <= 6; ++m) r += a(2 * (m - 2)) * std::cos(m * t) + a(2 * (m - 2) + 1) * std::sin(m * t);
      c.points.col(k) << r * std::cos(t), r * std::sin(t);
    }
    out.push_back(rigid(c, angle, tx, ty));
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = 0.9 * a(i) + step * g(rng);
    angle += 0.05;
    tx += 0.1;
    ty -= 0.03;
  }
  return out;
}

}  // namespace shapedyn::testing

#endif
