#ifndef SHAPEDYN_CURVE_HPP
#define SHAPEDYN_CURVE_HPP

// Discrete planar closed curves and their square-root velocity functions.
//
// A closed curve is stored as a 2 x N matrix of points sampled at the uniform
// parameter grid t_k = k / N; the segment from the last point back to the
// first is implicit.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "shapedyn/error.hpp"

namespace shapedyn {

template <typename Scalar>
using Points2 = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
struct Contour {
  Points2<Scalar> points;

  Eigen::Index size() const { return points.cols(); }
};

template <typename Scalar>
struct Srvf {
  Points2<Scalar> values;

  Eigen::Index size() const { return values.cols(); }
};

// Result of integrating an SRVF back to a curve. The curve is not forced to
// close; `closure_gap` is |y(1) - y(0)|.
template <typename Scalar>
struct ReconstructedCurve {
  Contour<Scalar> contour;
  Scalar closure_gap;
};

inline constexpr int kDefaultSamplePoints = 100;

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> segment_lengths(const Points2<Scalar>& pts) {
  const Eigen::Index n = pts.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> len(n);
  for (Eigen::Index k = 0; k < n; ++k) len(k) = (pts.col((k + 1) % n) - pts.col(k)).norm();
  return len;
}

}  // namespace detail

/// Length of the closed polyline through the contour points.
template <typename Scalar>
Scalar perimeter(const Contour<Scalar>& c) {
  if (c.size() < 2) return Scalar(0);
  return detail::segment_lengths(c.points).sum();
}

/// Mean of the contour vertices.
template <typename Scalar>
Point2<Scalar> centroid(const Contour<Scalar>& c) {
  return c.points.rowwise().mean();
}

/// Resamples the closed polyline at `n` points equally spaced in arc length,
/// starting at the first input point and keeping the traversal direction.
template <typename Scalar>
Contour<Scalar> resample_uniform(const Contour<Scalar>& contour, Eigen::Index n) {
  const auto& pts = contour.points;
  const Eigen::Index m = pts.cols();
  if (n < 3) throw Error("curve_geometry", "resample_uniform", "target size must be at least 3");

  Eigen::Index distinct = 0;
  for (Eigen::Index i = 0; i < m && distinct < 3; ++i) {
    bool seen = false;
    for (Eigen::Index j = 0; j < i && !seen; ++j) seen = (pts.col(i) - pts.col(j)).norm() == Scalar(0);
    if (!seen) ++distinct;
  }
  if (distinct < 3) throw Error("curve_geometry", "resample_uniform", "contour has fewer than 3 distinct points");

  const auto len = detail::segment_lengths(pts);
  const Scalar total = len.sum();
  if (!(total >= Scalar(1e-12))) throw Error("curve_geometry", "resample_uniform", "degenerate contour (zero length)");

  Contour<Scalar> out{Points2<Scalar>(2, n)};
  Eigen::Index seg = 0;
  Scalar seg_start = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar s = total * Scalar(k) / Scalar(n);
    while (seg < m - 1 && seg_start + len(seg) <= s) {
      seg_start += len(seg);
      ++seg;
    }
    const Scalar frac = len(seg) > Scalar(0) ? std::clamp((s - seg_start) / len(seg), Scalar(0), Scalar(1)) : Scalar(0);
    out.points.col(k) = (Scalar(1) - frac) * pts.col(seg) + frac * pts.col((seg + 1) % m);
  }
  return out;
}

/// Translates the centroid to the origin and scales the perimeter to one.
template <typename Scalar>
Contour<Scalar> center_and_scale(const Contour<Scalar>& contour) {
  const Scalar len = perimeter(contour);
  if (!(len > Scalar(1e-12))) throw Error("curve_geometry", "center_and_scale", "zero perimeter");
  Contour<Scalar> out{(contour.points.colwise() - centroid(contour)) / len};
  return out;
}

/// q(t) = y'(t) / sqrt(|y'(t)|) with y' from cyclic central differences.
template <typename Scalar>
Srvf<Scalar> to_srvf(const Contour<Scalar>& contour) {
  const Eigen::Index n = contour.size();
  if (n < 3) throw Error("curve_geometry", "to_srvf", "need at least 3 points");
  Srvf<Scalar> q{Points2<Scalar>(2, n)};
  const Scalar half_n = Scalar(n) / Scalar(2);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Point2<Scalar> v = (contour.points.col((k + 1) % n) - contour.points.col((k + n - 1) % n)) * half_n;
    const Scalar speed = v.norm();
    if (speed < Scalar(1e-10))
      throw Error("curve_geometry", "to_srvf", "coincident samples around index " + std::to_string(k));
    q.values.col(k) = v / std::sqrt(speed);
  }
  return q;
}

/// Integrates q|q| with the cumulative trapezoidal rule starting at `basepoint`.
template <typename Scalar>
ReconstructedCurve<Scalar> from_srvf(const Srvf<Scalar>& srvf, const Point2<Scalar>& basepoint) {
  const Eigen::Index n = srvf.size();
  if (n < 1) throw Error("curve_geometry", "from_srvf", "empty SRVF");
  if (!srvf.values.allFinite()) throw Error("curve_geometry", "from_srvf", "non-finite SRVF values");
  Points2<Scalar> vel(2, n);
  for (Eigen::Index k = 0; k < n; ++k) vel.col(k) = srvf.values.col(k) * srvf.values.col(k).norm();

  ReconstructedCurve<Scalar> out{Contour<Scalar>{Points2<Scalar>(2, n)}, Scalar(0)};
  const Scalar h = Scalar(1) / Scalar(2 * n);
  out.contour.points.col(0) = basepoint;
  for (Eigen::Index k = 0; k + 1 < n; ++k)
    out.contour.points.col(k + 1) = out.contour.points.col(k) + h * (vel.col(k) + vel.col(k + 1));
  const Point2<Scalar> end = out.contour.points.col(n - 1) + h * (vel.col(n - 1) + vel.col(0));
  out.closure_gap = (end - basepoint).norm();
  return out;
}

/// Symmetric Hausdorff distance between two point sets.
template <typename Scalar>
Scalar hausdorff_distance(const Points2<Scalar>& a, const Points2<Scalar>& b) {
  auto directed = [](const Points2<Scalar>& from, const Points2<Scalar>& to) {
    Scalar worst = 0;
    for (Eigen::Index i = 0; i < from.cols(); ++i)
      worst = std::max(worst, (to.colwise() - from.col(i)).colwise().norm().minCoeff());
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

/// Resample, center and scale in one step; the standard ingestion path.
template <typename Scalar>
Contour<Scalar> normalize_contour(const Contour<Scalar>& raw, Eigen::Index n) {
  return center_and_scale(resample_uniform(raw, n));
}

}  // namespace shapedyn

#endif  // SHAPEDYN_CURVE_HPP
