#ifndef SHAPEDYN_FEATURES_HPP
#define SHAPEDYN_FEATURES_HPP

// Motility features of a contour sequence: kinematics (centroid steps,
// perimeter changes, mean h-step rotations) and VAR-parameter shape features,
// with the distances used to build distance-vector features.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shapedyn/curve.hpp"
#include "shapedyn/var_model.hpp"

namespace shapedyn {

inline constexpr int kRotationSteps = 5;

struct KinematicsFeature {
  Eigen::MatrixXd upsilon;  // (T - 1) x 2 centroid displacements
  Eigen::VectorXd eta;      // T - 1 perimeter changes
  Eigen::VectorXd xi;       // mean h-step rotation angles, h = 1..5
  bool degenerate = false;  // some block had zero norm at normalization

  /// [upsilon row-major, eta, xi]: 2(T - 1) + (T - 1) + 5 entries.
  Eigen::VectorXd omega() const;
};

/// Raw-coordinate kinematics. Rotation angles come from Procrustes alignment
/// of the SRVFs of frames t and t + h (resampled at `n_points`) and are the
/// rotation carrying frame t onto frame t + h.
KinematicsFeature kinematics_features(std::span<const Contour<double>> raw, Eigen::Index n_points = kDefaultSamplePoints);

/// Each of xi, upsilon, eta divided by its own norm. A zero block stays zero
/// and sets `degenerate`.
KinematicsFeature normalize_kinematics(const KinematicsFeature& f);

/// Zero-pads upsilon and eta to `steps` rows.
KinematicsFeature pad_kinematics(const KinematicsFeature& f, Eigen::Index steps);

/// Block-wise Euclidean distance. Shorter step blocks are treated as
/// zero-padded, so features from sequences of different length compare.
double kinematics_distance(const KinematicsFeature& i, const KinematicsFeature& j);

struct ShapeFeature {
  VarModel model;         // raw fit
  Eigen::MatrixXd beta;   // [c, A_1, ..., A_p], d x (1 + d p), unit Frobenius norm
  Eigen::MatrixXd abar;   // (1/p) sum A_i, unit norm
  Eigen::MatrixXd sigma;  // unit norm
  bool degenerate = false;

  int p() const { return model.p; }
  Eigen::Index dim() const { return model.dim(); }
};

ShapeFeature shape_feature(const VarModel& model);
inline ShapeFeature shape_feature(const Eigen::MatrixXd& x, int p) { return shape_feature(fit_var(x, p)); }

/// sqrt(|beta_i - beta_j|^2 + |sigma_i - sigma_j|^2) for equal lags, with the
/// mean coefficient matrix in place of beta when the lags differ (or when
/// `force_mean` is set).
double shape_param_distance(const ShapeFeature& i, const ShapeFeature& j, bool force_mean = false);

/// One shape feature per lag 1..max_lag, each block normalized on its own.
std::vector<ShapeFeature> all_lag_shape_feature(const Eigen::MatrixXd& x, int max_lag = 5);

/// Distance between concatenated per-lag features: the root of the summed
/// squared per-lag distances.
double all_lag_distance(std::span<const ShapeFeature> i, std::span<const ShapeFeature> j);

/// Features of one sequence. `shape` holds either a single feature (fixed or
/// selected lag) or one per lag (all-lag mode).
struct SequenceFeatures {
  std::string id;
  std::vector<ShapeFeature> shape;
  KinematicsFeature kinematics;  // normalized
};

double shape_distance(const SequenceFeatures& i, const SequenceFeatures& j);

enum class FeatureKind { shape, kinematics, combined };

FeatureKind parse_feature_kind(std::string_view name);
std::string to_string(FeatureKind kind);

struct FeatureWeights {
  double shape = 1;
  double kinematics = 1;
};

struct DistanceFeatureVector {
  Eigen::VectorXd values;
  FeatureKind kind = FeatureKind::shape;
};

/// Distances from `query` to every training item, in training order.
/// Combined = w_shape V_S + w_kinematics V_K.
DistanceFeatureVector build_distance_features(std::span<const SequenceFeatures> train, const SequenceFeatures& query,
                                              FeatureKind kind, const FeatureWeights& weights = {});

/// Rows are build_distance_features of each query.
Eigen::MatrixXd distance_matrix(std::span<const SequenceFeatures> train, std::span<const SequenceFeatures> queries,
                                FeatureKind kind, const FeatureWeights& weights = {});

}  // namespace shapedyn

#endif  // SHAPEDYN_FEATURES_HPP
