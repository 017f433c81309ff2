#include "shapedyn/features.hpp"

#include "shapedyn/diagnostics.hpp"
#include "shapedyn/error.hpp"
#include "shapedyn/shape_space.hpp"

namespace shapedyn {

namespace {

constexpr const char* kModule = "motility_features";

// Scales `m` to unit Frobenius norm; returns false (leaving zeros) when the
// norm vanishes.
template <typename M>
bool unit_block(M& m) {
  const double n = m.norm();
  if (!(n > 0)) {
    m.setZero();
    return false;
  }
  m /= n;
  return true;
}

// Squared distance between two vectors or matrices whose leading rows agree,
// the shorter one read as zero-padded.
double padded_sq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::Index common = std::min(a.rows(), b.rows());
  return (a.topRows(common) - b.topRows(common)).squaredNorm() + a.bottomRows(a.rows() - common).squaredNorm() +
         b.bottomRows(b.rows() - common).squaredNorm();
}

}  // namespace

Eigen::VectorXd KinematicsFeature::omega() const {
  const Eigen::Index s = eta.size();
  Eigen::VectorXd out(3 * s + xi.size());
  for (Eigen::Index t = 0; t < s; ++t) out.segment(2 * t, 2) = upsilon.row(t).transpose();
  out.segment(2 * s, s) = eta;
  out.tail(xi.size()) = xi;
  return out;
}

KinematicsFeature kinematics_features(std::span<const Contour<double>> raw, Eigen::Index n_points) {
  const auto T = static_cast<Eigen::Index>(raw.size());
  if (T < kRotationSteps + 2)
    throw Error(kModule, "kinematics_features",
                "need at least " + std::to_string(kRotationSteps + 2) + " frames, got " + std::to_string(T));

  std::vector<PreShape<double>> q;
  Eigen::MatrixXd centers(T, 2);
  Eigen::VectorXd perim(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& c = raw[static_cast<std::size_t>(t)];
    try {
      q.push_back(PreShape<double>::from_contour(c, n_points));
    } catch (const Error& e) {
      throw Error(kModule, "kinematics_features", "frame " + std::to_string(t) + ": " + e.detail());
    }
    centers.row(t) = centroid(c).transpose();
    perim(t) = perimeter(c);
  }

  KinematicsFeature f;
  f.upsilon = centers.bottomRows(T - 1) - centers.topRows(T - 1);
  f.eta = perim.tail(T - 1) - perim.head(T - 1);
  f.xi.resize(kRotationSteps);
  for (int h = 1; h <= kRotationSteps; ++h) {
    double sum = 0;
    for (Eigen::Index t = 0; t + h < T; ++t)
      sum += rotation_angle(align_rotation(q[static_cast<std::size_t>(t + h)], q[static_cast<std::size_t>(t)]).rotation);
    f.xi(h - 1) = sum / double(T - h);
  }
  return f;
}

KinematicsFeature normalize_kinematics(const KinematicsFeature& f) {
  KinematicsFeature out = f;
  const bool ok = unit_block(out.xi) & unit_block(out.upsilon) & unit_block(out.eta);
  out.degenerate = f.degenerate || !ok;
  if (!ok) warn(kModule, "zero-norm kinematics block left as zeros (static sequence?)");
  return out;
}

KinematicsFeature pad_kinematics(const KinematicsFeature& f, Eigen::Index steps) {
  if (steps < f.eta.size()) throw Error(kModule, "pad_kinematics", "cannot pad to fewer steps than present");
  KinematicsFeature out = f;
  out.upsilon = Eigen::MatrixXd::Zero(steps, 2);
  out.upsilon.topRows(f.upsilon.rows()) = f.upsilon;
  out.eta = Eigen::VectorXd::Zero(steps);
  out.eta.head(f.eta.size()) = f.eta;
  return out;
}

double kinematics_distance(const KinematicsFeature& i, const KinematicsFeature& j) {
  return std::sqrt((i.xi - j.xi).squaredNorm() + padded_sq(i.upsilon, j.upsilon) + padded_sq(i.eta, j.eta));
}

ShapeFeature shape_feature(const VarModel& model) {
  const Eigen::Index d = model.dim();
  ShapeFeature f;
  f.model = model;
  f.beta.resize(d, 1 + d * model.p);
  f.beta.col(0) = model.c;
  f.abar = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < model.p; ++j) {
    f.beta.middleCols(1 + d * j, d) = model.A[static_cast<std::size_t>(j)];
    f.abar += model.A[static_cast<std::size_t>(j)];
  }
  f.abar /= double(model.p);
  f.sigma = model.sigma;
  const bool ok = unit_block(f.beta) & unit_block(f.abar) & unit_block(f.sigma);
  f.degenerate = !ok;
  if (!ok) warn(kModule, "zero-norm VAR parameter block left as zeros");
  return f;
}

double shape_param_distance(const ShapeFeature& i, const ShapeFeature& j, bool force_mean) {
  if (i.dim() != j.dim())
    throw Error(kModule, "shape_param_distance",
                "dimension mismatch (" + std::to_string(i.dim()) + " vs " + std::to_string(j.dim()) + ")");
  const double s = (i.sigma - j.sigma).squaredNorm();
  if (i.p() == j.p() && !force_mean) return std::sqrt((i.beta - j.beta).squaredNorm() + s);
  return std::sqrt((i.abar - j.abar).squaredNorm() + s);
}

std::vector<ShapeFeature> all_lag_shape_feature(const Eigen::MatrixXd& x, int max_lag) {
  if (max_lag < 1) throw Error(kModule, "all_lag_shape_feature", "max_lag must be at least 1");
  std::vector<ShapeFeature> out;
  for (int p = 1; p <= max_lag; ++p) out.push_back(shape_feature(x, p));
  return out;
}

double all_lag_distance(std::span<const ShapeFeature> i, std::span<const ShapeFeature> j) {
  if (i.size() != j.size()) throw Error(kModule, "all_lag_distance", "different numbers of lags");
  double sum = 0;
  for (std::size_t k = 0; k < i.size(); ++k) {
    if (i[k].p() != j[k].p()) throw Error(kModule, "all_lag_distance", "lag lists differ");
    const double d = shape_param_distance(i[k], j[k]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

double shape_distance(const SequenceFeatures& i, const SequenceFeatures& j) {
  if (i.shape.empty() || j.shape.empty()) throw Error(kModule, "shape_distance", "missing shape feature");
  if (i.shape.size() == 1 && j.shape.size() == 1) return shape_param_distance(i.shape.front(), j.shape.front());
  return all_lag_distance(i.shape, j.shape);
}

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "shape") return FeatureKind::shape;
  if (name == "kinematics") return FeatureKind::kinematics;
  if (name == "combined") return FeatureKind::combined;
  throw Error(kModule, "parse_feature_kind", "unknown feature kind '" + std::string(name) + "'");
}

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::shape: return "shape";
    case FeatureKind::kinematics: return "kinematics";
    case FeatureKind::combined: return "combined";
  }
  return "?";
}

DistanceFeatureVector build_distance_features(std::span<const SequenceFeatures> train, const SequenceFeatures& query,
                                              FeatureKind kind, const FeatureWeights& weights) {
  if (train.empty()) throw Error(kModule, "build_distance_features", "empty training set");
  DistanceFeatureVector out{Eigen::VectorXd(static_cast<Eigen::Index>(train.size())), kind};
  for (std::size_t k = 0; k < train.size(); ++k) {
    double v = 0;
    switch (kind) {
      case FeatureKind::shape: v = shape_distance(query, train[k]); break;
      case FeatureKind::kinematics: v = kinematics_distance(query.kinematics, train[k].kinematics); break;
      case FeatureKind::combined:
        v = weights.shape * shape_distance(query, train[k]) +
            weights.kinematics * kinematics_distance(query.kinematics, train[k].kinematics);
        break;
    }
    out.values(static_cast<Eigen::Index>(k)) = v;
  }
  return out;
}

Eigen::MatrixXd distance_matrix(std::span<const SequenceFeatures> train, std::span<const SequenceFeatures> queries,
                                FeatureKind kind, const FeatureWeights& weights) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(queries.size()), static_cast<Eigen::Index>(train.size()));
  for (std::size_t r = 0; r < queries.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = build_distance_features(train, queries[r], kind, weights).values.transpose();
  return out;
}

}  // namespace shapedyn
