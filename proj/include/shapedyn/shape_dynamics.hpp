#ifndef SHAPEDYN_SHAPE_DYNAMICS_HPP
#define SHAPEDYN_SHAPE_DYNAMICS_HPP

// Shape sequences as time series: transported square-root velocity fields
// (TSRVF), their cumulative sums, reconstruction by covariant integration, and
// PCA flattening into a d-dimensional Euclidean series.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "shapedyn/curve.hpp"
#include "shapedyn/shape_space.hpp"

namespace shapedyn {

using Shape = PreShape<double>;
using Field = TangentField<double>;

struct ShapeSequence {
  std::string id;
  std::vector<Shape> frames;                  // each aligned to its predecessor
  std::vector<Contour<double>> raw_contours;  // as ingested, for kinematics
  // step_distances[t - 1]: shape distance between frames t - 1 and t, from
  // the alignment that produced frame t. Re-running the DP on already aligned
  // frames can shave off a little more, so recomputed distances differ slightly.
  std::vector<double> step_distances;
};

/// Resamples and normalizes every contour, converts to pre-shapes and aligns
/// each frame to the previous one.
ShapeSequence build_shape_sequence(std::string id, std::vector<Contour<double>> raw, Eigen::Index n_points,
                                   const AlignOptions& align = {});

/// fields[t - 1] holds F(t), t = 1..T-1, all tangent at `base`.
struct TsrvfSequence {
  Shape base;
  std::vector<Field> fields;

  std::size_t length() const { return fields.size(); }
};

/// F(t) = shooting vector from frame t-1 to frame t, carried back to frame 0
/// by chained single-step transports. Frames must already be in
/// correspondence (as produced by build_shape_sequence).
TsrvfSequence compute_tsrvf(std::span<const Shape> frames);
inline TsrvfSequence compute_tsrvf(const ShapeSequence& seq) { return compute_tsrvf(seq.frames); }

/// Cumulative sums H(t) = F(1) + ... + F(t).
TsrvfSequence integrate_tsrvf(const TsrvfSequence& tsrvf);

/// Inverse of compute_tsrvf: transport each field forward along the rebuilt
/// path and shoot. Returns T = fields + 1 frames starting at the base.
std::vector<Shape> reconstruct_sequence(const TsrvfSequence& tsrvf);

/// Moves every field along the geodesic from the current base to `target`.
/// No alignment; both points must already be in correspondence.
TsrvfSequence transport_fields(const TsrvfSequence& tsrvf, const Shape& target);

/// Re-expresses a TSRVF at another base: align the sequence base to
/// `reference`, carry the fields through the same alignment, then transport
/// along the single connecting geodesic.
TsrvfSequence transport_to_reference(const TsrvfSequence& tsrvf, const Shape& reference,
                                     const AlignOptions& align = {});

struct PcaBasis {
  Field mean;
  std::vector<Field> components;  // L2-orthonormal, tangent at base
  Eigen::VectorXd eigenvalues;    // nonincreasing, one per component
  double total_variance = 0;      // trace of the pooled covariance
  Shape base;

  int dim() const { return static_cast<int>(components.size()); }
  Eigen::Index grid_size() const { return base.size(); }
};

/// Pooled, mean-centered PCA of all fields of all sequences (time labels
/// ignored). Every sequence must share the same base.
PcaBasis fit_pca(std::span<const TsrvfSequence> tsrvfs, int d);

struct EuclideanSeries {
  Eigen::MatrixXd values;  // one row per field, d columns
  std::string source_id;
};

EuclideanSeries project(const TsrvfSequence& tsrvf, const PcaBasis& basis);

/// Fields mean + sum_i x(t, i) component_i, projected onto the tangent space.
TsrvfSequence lift(const Eigen::MatrixXd& x, const PcaBasis& basis);

/// Frame-wise elastic shape distance between two equally long sequences.
Eigen::VectorXd frame_distances(std::span<const Shape> a, std::span<const Shape> b, const AlignOptions& align = {});

}  // namespace shapedyn

#endif  // SHAPEDYN_SHAPE_DYNAMICS_HPP
