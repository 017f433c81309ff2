#ifndef SHAPEDYN_SHAPE_SPACE_HPP
#define SHAPEDYN_SHAPE_SPACE_HPP

// Geometry of the SRVF pre-shape sphere.
//
// Distances, geodesics, log/exp maps and parallel transport are evaluated on
// the unit L2 sphere after pairwise alignment of the second argument to the
// first (rotation, start point and reparameterization). This approximates the
// quotient shape space: no path-straightening is done.
//
// All inner products are the discrete L2 product <a, b> = sum_k a_k . b_k / N.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "shapedyn/curve.hpp"
#include "shapedyn/error.hpp"

namespace shapedyn {

template <typename Scalar>
using TangentField = Points2<Scalar>;

template <typename Scalar>
using Rotation2 = Eigen::Matrix<Scalar, 2, 2>;

template <typename Derived1, typename Derived2>
typename Derived1::Scalar inner(const Eigen::MatrixBase<Derived1>& a, const Eigen::MatrixBase<Derived2>& b) {
  return a.cwiseProduct(b).sum() / static_cast<typename Derived1::Scalar>(a.cols());
}

template <typename Derived>
typename Derived::Scalar l2_norm(const Eigen::MatrixBase<Derived>& a) {
  return std::sqrt(inner(a, a));
}

/// Unit-norm SRVF; a point on the discretized Hilbert sphere.
template <typename Scalar>
class PreShape {
 public:
  PreShape() = default;

  explicit PreShape(Points2<Scalar> q) : q_(std::move(q)) {
    const Scalar norm = l2_norm(q_);
    if (!std::isfinite(norm) || norm < Scalar(1e-14))
      throw Error("shape_space", "PreShape", "cannot normalize a zero or non-finite field");
    q_ /= norm;
  }

  static PreShape from_srvf(const Srvf<Scalar>& srvf) { return PreShape(srvf.values); }

  /// Pre-shape of a raw contour: resample, normalize, SRVF.
  static PreShape from_contour(const Contour<Scalar>& raw, Eigen::Index n) {
    return from_srvf(to_srvf(normalize_contour(raw, n)));
  }

  const Points2<Scalar>& values() const { return q_; }
  Eigen::Index size() const { return q_.cols(); }

 private:
  Points2<Scalar> q_;
};

template <typename Scalar>
Rotation2<Scalar> rotation_matrix(Scalar angle) {
  Rotation2<Scalar> r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

/// Rotation angle in (-pi, pi].
template <typename Scalar>
Scalar rotation_angle(const Rotation2<Scalar>& r) {
  Scalar a = std::atan2(r(1, 0), r(0, 0));
  if (a <= -std::numbers::pi_v<Scalar>) a += 2 * std::numbers::pi_v<Scalar>;
  return a;
}

/// argmin over SO(2) of |a - R b|^2 (Procrustes with det = +1). Returns the
/// identity when the cross-covariance vanishes.
template <typename Scalar>
Rotation2<Scalar> optimal_rotation(const Points2<Scalar>& a, const Points2<Scalar>& b) {
  const Eigen::Matrix<Scalar, 2, 2> cross = a * b.transpose();
  Eigen::JacobiSVD<Eigen::Matrix<Scalar, 2, 2>> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(0) <= std::numeric_limits<Scalar>::min()) return Rotation2<Scalar>::Identity();
  Eigen::Matrix<Scalar, 2, 2> fix = Eigen::Matrix<Scalar, 2, 2>::Identity();
  fix(1, 1) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? Scalar(-1) : Scalar(1);
  return svd.matrixU() * fix * svd.matrixV().transpose();
}

template <typename Scalar>
struct RotationAlignment {
  Rotation2<Scalar> rotation;
  PreShape<Scalar> aligned;  // rotation * q2
};

template <typename Scalar>
RotationAlignment<Scalar> align_rotation(const PreShape<Scalar>& q1, const PreShape<Scalar>& q2) {
  if (q1.size() != q2.size()) throw Error("shape_space", "align_rotation", "grid size mismatch");
  const Rotation2<Scalar> r = optimal_rotation(q1.values(), q2.values());
  return {r, PreShape<Scalar>(r * q2.values())};
}

/// out_k = q_{(k + shift) mod N}: the curve restarted `shift` samples later.
template <typename Scalar>
Points2<Scalar> cyclic_shift(const Points2<Scalar>& q, Eigen::Index shift) {
  const Eigen::Index n = q.cols();
  Points2<Scalar> out(2, n);
  const Eigen::Index s = ((shift % n) + n) % n;
  for (Eigen::Index k = 0; k < n; ++k) out.col(k) = q.col((k + s) % n);
  return out;
}

namespace detail {

template <typename Scalar>
Point2<Scalar> periodic_interp(const Points2<Scalar>& q, Scalar u) {
  const Eigen::Index n = q.cols();
  Scalar base = std::floor(u);
  const Scalar frac = u - base;
  Eigen::Index i0 = static_cast<Eigen::Index>(base) % n;
  if (i0 < 0) i0 += n;
  return (Scalar(1) - frac) * q.col(i0) + frac * q.col((i0 + 1) % n);
}

}  // namespace detail

/// Reparameterization action (q o gamma) sqrt(gamma'). `gamma` holds N + 1
/// grid values gamma(k / N), k = 0..N; gamma' is the forward difference, so
/// piecewise-linear warps on the grid are applied exactly.
template <typename Scalar>
Points2<Scalar> apply_warp(const Points2<Scalar>& q, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& gamma) {
  const Eigen::Index n = q.cols();
  if (gamma.size() != n + 1) throw Error("shape_space", "apply_warp", "warp must have N + 1 grid values");
  Points2<Scalar> out(2, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar slope = (gamma(k + 1) - gamma(k)) * Scalar(n);
    out.col(k) = detail::periodic_interp(q, gamma(k) * Scalar(n)) * std::sqrt(std::max(slope, Scalar(0)));
  }
  return out;
}

template <typename Scalar>
struct WarpResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gamma;  // N + 1 values, gamma(0) = 0, gamma(1) = 1
  Scalar residual;                                 // |q1 - (q2 o gamma) sqrt(gamma')|^2
};

/// Admissible DP steps (di, dj); every slope dj / di lies in [1/3, 3].
inline constexpr std::array<std::pair<int, int>, 7> kWarpSteps{
    {{1, 1}, {1, 2}, {2, 1}, {1, 3}, {3, 1}, {2, 3}, {3, 2}}};

/// Optimal monotone piecewise-linear warp on the (N+1) x (N+1) lattice by
/// dynamic programming. Both endpoints are pinned; ties go to the earliest
/// step in kWarpSteps.
template <typename Scalar>
WarpResult<Scalar> optimal_warp(const Points2<Scalar>& q1, const Points2<Scalar>& q2) {
  const Eigen::Index n = q1.cols();
  if (q2.cols() != n) throw Error("shape_space", "optimal_warp", "grid size mismatch");
  const Eigen::Index side = n + 1;
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();

  // Interpolation offsets depend only on the step type and the sample index
  // within the step.
  struct Tap {
    int offset;
    Scalar frac;
  };
  std::array<std::array<Tap, 3>, kWarpSteps.size()> taps{};
  std::array<Scalar, kWarpSteps.size()> root_slope{};
  for (std::size_t s = 0; s < kWarpSteps.size(); ++s) {
    const auto [di, dj] = kWarpSteps[s];
    root_slope[s] = std::sqrt(Scalar(dj) / Scalar(di));
    for (int r = 0; r < di; ++r) taps[s][r] = {r * dj / di, Scalar(r * dj % di) / Scalar(di)};
  }

  std::vector<Scalar> energy(static_cast<std::size_t>(side * side), inf);
  std::vector<signed char> from(static_cast<std::size_t>(side * side), -1);
  auto at = [side](Eigen::Index i, Eigen::Index j) { return static_cast<std::size_t>(i * side + j); };
  energy[at(0, 0)] = 0;

  const Scalar* a = q1.data();
  const Scalar* b = q2.data();
  for (Eigen::Index i = 1; i <= n; ++i) {
    for (Eigen::Index j = 1; j <= n; ++j) {
      Scalar best = inf;
      signed char arg = -1;
      for (std::size_t s = 0; s < kWarpSteps.size(); ++s) {
        const auto [di, dj] = kWarpSteps[s];
        const Eigen::Index k = i - di, l = j - dj;
        if (k < 0 || l < 0) continue;
        const Scalar prev = energy[at(k, l)];
        if (prev == inf) continue;
        Scalar cost = 0;
        for (int r = 0; r < di; ++r) {
          const Eigen::Index i0 = l + taps[s][r].offset;
          const Eigen::Index i1 = (i0 + 1) % n;
          const Scalar f = taps[s][r].frac;
          const Scalar bx = ((Scalar(1) - f) * b[2 * i0] + f * b[2 * i1]) * root_slope[s];
          const Scalar by = ((Scalar(1) - f) * b[2 * i0 + 1] + f * b[2 * i1 + 1]) * root_slope[s];
          const Scalar dx = a[2 * (k + r)] - bx;
          const Scalar dy = a[2 * (k + r) + 1] - by;
          cost += dx * dx + dy * dy;
        }
        if (prev + cost < best) {
          best = prev + cost;
          arg = static_cast<signed char>(s);
        }
      }
      energy[at(i, j)] = best;
      from[at(i, j)] = arg;
    }
  }

  WarpResult<Scalar> out{Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(side), energy[at(n, n)] / Scalar(n)};
  Eigen::Index i = n, j = n;
  out.gamma(n) = Scalar(1);
  while (i > 0) {
    const auto [di, dj] = kWarpSteps[static_cast<std::size_t>(from[at(i, j)])];
    for (int r = 0; r < di; ++r)
      out.gamma(i - di + r) = (Scalar(j - dj) + Scalar(r) * Scalar(dj) / Scalar(di)) / Scalar(n);
    i -= di;
    j -= dj;
  }
  return out;
}

template <typename Scalar>
struct Alignment {
  Rotation2<Scalar> rotation = Rotation2<Scalar>::Identity();
  Eigen::Index seed = 0;                           // start-point offset of q2 relative to q1
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> warp;  // N + 1 grid values of gamma
};

struct AlignOptions {
  // Cyclic start points tried with a full DP solve: every `seed_stride`-th one.
  Eigen::Index seed_stride = 5;
  // Re-examine the seeds between strides around the best one.
  bool refine_seeds = true;
  // Alternating rotation / warp rounds per seed.
  int rounds = 2;
  // When > 0, rank all N seeds by their rotation-only fit and run the DP only
  // on the best `prescreen` of them.
  Eigen::Index prescreen = 0;
  // Half-width (in samples) of the moving average applied to each DP warp.
  // Lattice warps are staircases whose sqrt(gamma') jumps between discrete
  // slopes; averaging removes that jitter while keeping gamma monotone.
  Eigen::Index warp_smoothing = 3;
};

template <typename Scalar>
struct AlignmentResult {
  Alignment<Scalar> alignment;
  PreShape<Scalar> aligned;  // fully aligned q2, unit norm
  Scalar similarity;         // <q1, aligned>
};

/// Applies a stored alignment (shift, warp, rotation) to any field on the
/// same grid, e.g. a tangent vector riding along with the aligned shape.
template <typename Scalar>
Points2<Scalar> apply_alignment(const Points2<Scalar>& field, const Alignment<Scalar>& alignment) {
  Points2<Scalar> shifted = cyclic_shift(field, -alignment.seed);
  if (alignment.warp.size() > 0) shifted = apply_warp(shifted, alignment.warp);
  return alignment.rotation * shifted;
}

/// Symmetric moving average of gamma with the window shrinking at both ends,
/// so endpoints stay pinned and strict monotonicity is preserved.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> smooth_warp(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& gamma,
                                                     Eigen::Index half_width) {
  if (half_width <= 0) return gamma;
  const Eigen::Index last = gamma.size() - 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(gamma.size());
  for (Eigen::Index i = 0; i <= last; ++i) {
    const Eigen::Index h = std::min({half_width, i, last - i});
    out(i) = gamma.segment(i - h, 2 * h + 1).mean();
  }
  return out;
}

namespace detail {

template <typename Scalar>
AlignmentResult<Scalar> align_from_seed(const Points2<Scalar>& q1, const Points2<Scalar>& q2, Eigen::Index seed,
                                        int rounds, Eigen::Index smoothing) {
  const Eigen::Index n = q1.cols();
  const Points2<Scalar> shifted = cyclic_shift(q2, -seed);
  Alignment<Scalar> al;
  al.seed = ((seed % n) + n) % n;
  al.rotation = optimal_rotation(q1, shifted);
  al.warp = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::LinSpaced(n + 1, Scalar(0), Scalar(1));
  Points2<Scalar> warped = shifted;
  for (int round = 0; round < rounds; ++round) {
    al.warp = smooth_warp<Scalar>(optimal_warp(q1, Points2<Scalar>(al.rotation * shifted)).gamma, smoothing);
    warped = apply_warp(shifted, al.warp);
    al.rotation = optimal_rotation(q1, warped);
  }
  PreShape<Scalar> aligned(al.rotation * warped);
  const Scalar sim = inner(q1, aligned.values());
  return {std::move(al), std::move(aligned), sim};
}

template <typename Scalar>
Scalar rotation_only_similarity(const Points2<Scalar>& q1, const Points2<Scalar>& q2, Eigen::Index seed) {
  const Eigen::Index n = q1.cols();
  Scalar c00 = 0, c01 = 0, c10 = 0, c11 = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index m = ((k - seed) % n + n) % n;
    c00 += q1(0, k) * q2(0, m);
    c01 += q1(0, k) * q2(1, m);
    c10 += q1(1, k) * q2(0, m);
    c11 += q1(1, k) * q2(1, m);
  }
  return std::hypot(c00 + c11, c10 - c01) / Scalar(n);
}

}  // namespace detail

/// Aligns q2 to q1 over start point, rotation and reparameterization.
template <typename Scalar>
AlignmentResult<Scalar> align_reparam(const PreShape<Scalar>& q1, const PreShape<Scalar>& q2,
                                      const AlignOptions& options = {}) {
  const Eigen::Index n = q1.size();
  if (q2.size() != n) throw Error("shape_space", "align_reparam", "grid size mismatch");
  const auto& a = q1.values();
  const auto& b = q2.values();

  std::vector<Eigen::Index> seeds;
  if (options.prescreen > 0) {
    std::vector<std::pair<Scalar, Eigen::Index>> ranked;
    ranked.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index s = 0; s < n; ++s) ranked.emplace_back(-detail::rotation_only_similarity(a, b, s), s);
    const auto keep = static_cast<std::size_t>(std::min(options.prescreen, n));
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end());
    for (std::size_t i = 0; i < keep; ++i) seeds.push_back(ranked[i].second);
  } else {
    const Eigen::Index stride = std::max<Eigen::Index>(1, options.seed_stride);
    for (Eigen::Index s = 0; s < n; s += stride) seeds.push_back(s);
  }

  auto better = [](const AlignmentResult<Scalar>& x, const AlignmentResult<Scalar>& y) {
    return x.similarity > y.similarity || (x.similarity == y.similarity && x.alignment.seed < y.alignment.seed);
  };

  AlignmentResult<Scalar> best = detail::align_from_seed(a, b, seeds.front(), options.rounds, options.warp_smoothing);
  for (std::size_t i = 1; i < seeds.size(); ++i) {
    auto trial = detail::align_from_seed(a, b, seeds[i], options.rounds, options.warp_smoothing);
    if (better(trial, best)) best = std::move(trial);
  }

  if (options.prescreen == 0 && options.refine_seeds && options.seed_stride > 1) {
    const Eigen::Index center = best.alignment.seed;
    for (Eigen::Index off = 1; off < options.seed_stride; ++off) {
      for (Eigen::Index s : {center - off, center + off}) {
        auto trial = detail::align_from_seed(a, b, ((s % n) + n) % n, options.rounds, options.warp_smoothing);
        if (better(trial, best)) best = std::move(trial);
      }
    }
  }
  return best;
}

template <typename Scalar>
Scalar clamped_arccos(Scalar c) {
  return std::acos(std::clamp(c, Scalar(-1), Scalar(1)));
}

/// Great-circle distance on the sphere without any alignment.
template <typename Scalar>
Scalar sphere_distance(const PreShape<Scalar>& q1, const PreShape<Scalar>& q2) {
  return clamped_arccos(inner(q1.values(), q2.values()));
}

/// Elastic shape distance: arc length to the fully aligned q2, in [0, pi].
template <typename Scalar>
Scalar shape_distance(const PreShape<Scalar>& q1, const PreShape<Scalar>& q2, const AlignOptions& options = {}) {
  if (q1.size() != q2.size()) throw Error("shape_space", "shape_distance", "grid size mismatch");
  return clamped_arccos(align_reparam(q1, q2, options).similarity);
}

template <typename Scalar>
PreShape<Scalar> exp_map(const PreShape<Scalar>& q, const TangentField<Scalar>& v) {
  const Scalar len = l2_norm(v);
  if (len < Scalar(1e-10)) return q;
  return PreShape<Scalar>(std::cos(len) * q.values() + (std::sin(len) / len) * v);
}

inline constexpr double kAntipodalMargin = 1e-6;

/// Inverse exponential map between two points already in correspondence.
template <typename Scalar>
TangentField<Scalar> sphere_log(const PreShape<Scalar>& q1, const PreShape<Scalar>& q2) {
  if (q1.size() != q2.size()) throw Error("shape_space", "log_map", "grid size mismatch");
  const Scalar c = std::clamp(inner(q1.values(), q2.values()), Scalar(-1), Scalar(1));
  const Scalar theta = std::acos(c);
  if (theta > std::numbers::pi_v<Scalar> - Scalar(kAntipodalMargin))
    throw Error("shape_space", "log_map", "antipodal pair");
  const Scalar scale = theta < Scalar(1e-8) ? Scalar(1) : theta / std::sin(theta);
  return scale * (q2.values() - c * q1.values());
}

/// Shooting vector from q1 to the shape of q2 (q2 is aligned to q1 first).
template <typename Scalar>
TangentField<Scalar> log_map(const PreShape<Scalar>& q1, const PreShape<Scalar>& q2, const AlignOptions& options = {}) {
  if (q1.size() != q2.size()) throw Error("shape_space", "log_map", "grid size mismatch");
  return sphere_log(q1, align_reparam(q1, q2, options).aligned);
}

/// Parallel transport of v from `from` to `to` along the minimal great circle.
template <typename Scalar>
TangentField<Scalar> parallel_transport(const TangentField<Scalar>& v, const PreShape<Scalar>& from,
                                        const PreShape<Scalar>& to) {
  if (v.cols() != from.size() || from.size() != to.size())
    throw Error("shape_space", "parallel_transport", "grid size mismatch");
  const Scalar denom = Scalar(1) + inner(from.values(), to.values());
  if (denom < Scalar(1e-12)) throw Error("shape_space", "parallel_transport", "antipodal endpoints");
  return v - (inner(v, to.values()) / denom) * (from.values() + to.values());
}

/// Removes the component of v normal to the sphere at q.
template <typename Scalar>
TangentField<Scalar> project_tangent(const TangentField<Scalar>& v, const PreShape<Scalar>& q) {
  return v - inner(v, q.values()) * q.values();
}

/// k equally spaced points on the geodesic from q1 to the aligned q2.
template <typename Scalar>
std::vector<PreShape<Scalar>> geodesic_path(const PreShape<Scalar>& q1, const PreShape<Scalar>& q2, int k,
                                            const AlignOptions& options = {}) {
  if (k < 2) throw Error("shape_space", "geodesic_path", "need at least 2 points");
  const TangentField<Scalar> v = log_map(q1, q2, options);
  std::vector<PreShape<Scalar>> path;
  path.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) path.push_back(exp_map(q1, TangentField<Scalar>((Scalar(i) / Scalar(k - 1)) * v)));
  return path;
}

}  // namespace shapedyn

#endif  // SHAPEDYN_SHAPE_SPACE_HPP
