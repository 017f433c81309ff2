#include "shapedyn/shape_dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace shapedyn {

namespace {

constexpr const char* kModule = "shape_dynamics";

bool same_point(const Shape& a, const Shape& b) {
  return a.size() == b.size() && inner(a.values(), b.values()) > 1 - 1e-8;
}

Eigen::VectorXd flatten(const Field& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.data(), f.size()) / std::sqrt(double(f.cols()));
}

Field unflatten(const Eigen::VectorXd& v, Eigen::Index n) {
  return Eigen::Map<const Field>(v.data(), 2, n) * std::sqrt(double(n));
}

}  // namespace

ShapeSequence build_shape_sequence(std::string id, std::vector<Contour<double>> raw, Eigen::Index n_points,
                                   const AlignOptions& align) {
  ShapeSequence seq{std::move(id), {}, std::move(raw)};
  seq.frames.reserve(seq.raw_contours.size());
  for (std::size_t t = 0; t < seq.raw_contours.size(); ++t) {
    Shape q;
    try {
      q = Shape::from_contour(seq.raw_contours[t], n_points);
    } catch (const Error& e) {
      throw Error(kModule, "build_shape_sequence", "frame " + std::to_string(t) + ": " + e.what());
    }
    if (!seq.frames.empty()) {
      auto al = align_reparam(seq.frames.back(), q, align);
      seq.step_distances.push_back(sphere_distance(seq.frames.back(), al.aligned));
      q = std::move(al.aligned);
    }
    seq.frames.push_back(std::move(q));
  }
  return seq;
}

TsrvfSequence compute_tsrvf(std::span<const Shape> frames) {
  if (frames.size() < 2) throw Error(kModule, "compute_tsrvf", "need at least 2 frames");
  TsrvfSequence out{frames.front(), {}};
  out.fields.reserve(frames.size() - 1);
  for (std::size_t t = 1; t < frames.size(); ++t) {
    Field v;
    try {
      v = sphere_log(frames[t - 1], frames[t]);
      for (std::size_t s = t - 1; s > 0; --s) v = parallel_transport(v, frames[s], frames[s - 1]);
    } catch (const Error&) {
      throw Error(kModule, "compute_tsrvf", "antipodal step at frame " + std::to_string(t));
    }
    out.fields.push_back(project_tangent(v, frames.front()));
  }
  return out;
}

TsrvfSequence integrate_tsrvf(const TsrvfSequence& tsrvf) {
  TsrvfSequence out{tsrvf.base, {}};
  out.fields.reserve(tsrvf.fields.size());
  for (const auto& f : tsrvf.fields) out.fields.push_back(out.fields.empty() ? f : Field(out.fields.back() + f));
  return out;
}

std::vector<Shape> reconstruct_sequence(const TsrvfSequence& tsrvf) {
  std::vector<Shape> frames{tsrvf.base};
  frames.reserve(tsrvf.fields.size() + 1);
  for (std::size_t t = 1; t <= tsrvf.fields.size(); ++t) {
    Field v = tsrvf.fields[t - 1];
    if (v.cols() != tsrvf.base.size()) throw Error(kModule, "reconstruct_sequence", "grid size mismatch");
    try {
      for (std::size_t s = 1; s < t; ++s) v = parallel_transport(v, frames[s - 1], frames[s]);
    } catch (const Error&) {
      throw Error(kModule, "reconstruct_sequence", "antipodal step at frame " + std::to_string(t));
    }
    frames.push_back(exp_map(frames[t - 1], project_tangent(v, frames[t - 1])));
  }
  return frames;
}

TsrvfSequence transport_fields(const TsrvfSequence& tsrvf, const Shape& target) {
  if (tsrvf.base.size() != target.size()) throw Error(kModule, "transport_fields", "grid size mismatch");
  TsrvfSequence out{target, {}};
  out.fields.reserve(tsrvf.fields.size());
  for (const auto& f : tsrvf.fields) {
    Field moved;
    try {
      moved = parallel_transport(f, tsrvf.base, target);
    } catch (const Error&) {
      throw Error(kModule, "transport_fields", "base is antipodal to the target");
    }
    out.fields.push_back(project_tangent(moved, target));
  }
  return out;
}

TsrvfSequence transport_to_reference(const TsrvfSequence& tsrvf, const Shape& reference, const AlignOptions& align) {
  if (tsrvf.base.size() != reference.size()) throw Error(kModule, "transport_to_reference", "grid size mismatch");
  if (inner(tsrvf.base.values(), reference.values()) > 1 - 1e-15) return {reference, tsrvf.fields};

  const auto al = align_reparam(reference, tsrvf.base, align);
  TsrvfSequence carried{al.aligned, {}};
  carried.fields.reserve(tsrvf.fields.size());
  for (const auto& f : tsrvf.fields)
    carried.fields.push_back(project_tangent(apply_alignment(f, al.alignment), al.aligned));
  return transport_fields(carried, reference);
}

PcaBasis fit_pca(std::span<const TsrvfSequence> tsrvfs, int d) {
  if (tsrvfs.empty()) throw Error(kModule, "fit_pca", "no sequences");
  if (d < 1) throw Error(kModule, "fit_pca", "dimension must be positive");
  const Shape& base = tsrvfs.front().base;
  const Eigen::Index n = base.size();
  std::size_t count = 0;
  for (const auto& s : tsrvfs) {
    if (!same_point(s.base, base)) throw Error(kModule, "fit_pca", "sequences are not expressed at a common base");
    count += s.fields.size();
  }
  if (count < 2) throw Error(kModule, "fit_pca", "need at least 2 pooled fields");

  const Eigen::Index dim = 2 * n;
  Eigen::MatrixXd data(static_cast<Eigen::Index>(count), dim);
  Eigen::Index row = 0;
  for (const auto& s : tsrvfs)
    for (const auto& f : s.fields) {
      if (f.cols() != n) throw Error(kModule, "fit_pca", "grid size mismatch");
      data.row(row++) = flatten(f).transpose();
    }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;
  const double dof = double(count - 1);

  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns in the flattened embedding
  if (data.rows() >= dim) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig((data.transpose() * data) / dof);
    values = eig.eigenvalues().reverse();
    vectors = eig.eigenvectors().rowwise().reverse();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig((data * data.transpose()) / dof);
    values = eig.eigenvalues().reverse();
    const Eigen::MatrixXd u = eig.eigenvectors().rowwise().reverse();
    const Eigen::Index keep = std::min<Eigen::Index>(d, values.size());
    vectors.resize(dim, keep);
    for (Eigen::Index i = 0; i < keep; ++i) {
      const Eigen::VectorXd v = data.transpose() * u.col(i);
      const double norm = v.norm();
      vectors.col(i) = norm > 0 ? Eigen::VectorXd(v / norm) : Eigen::VectorXd::Zero(dim);
    }
  }

  const double top = std::max(values.size() > 0 ? values(0) : 0.0, 0.0);
  if (d > values.size() || top <= 0 || values(d - 1) <= 1e-12 * top)
    throw Error(kModule, "fit_pca", "requested dimension " + std::to_string(d) + " exceeds the pooled rank");

  PcaBasis basis;
  basis.base = base;
  basis.mean = unflatten(mean.transpose(), n);
  basis.eigenvalues = values.head(d);
  basis.total_variance = data.squaredNorm() / dof;
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd v = vectors.col(i);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.components.push_back(unflatten(v, n));
  }
  return basis;
}

EuclideanSeries project(const TsrvfSequence& tsrvf, const PcaBasis& basis) {
  if (tsrvf.base.size() != basis.grid_size()) throw Error(kModule, "project", "grid size mismatch");
  if (!same_point(tsrvf.base, basis.base))
    throw Error(kModule, "project", "TSRVF is not expressed at the basis reference");
  EuclideanSeries out{Eigen::MatrixXd(static_cast<Eigen::Index>(tsrvf.fields.size()), basis.dim()), {}};
  for (std::size_t t = 0; t < tsrvf.fields.size(); ++t) {
    const Field centered = tsrvf.fields[t] - basis.mean;
    for (int i = 0; i < basis.dim(); ++i)
      out.values(static_cast<Eigen::Index>(t), i) = inner(centered, basis.components[static_cast<std::size_t>(i)]);
  }
  return out;
}

TsrvfSequence lift(const Eigen::MatrixXd& x, const PcaBasis& basis) {
  if (x.cols() != basis.dim()) throw Error(kModule, "lift", "series width does not match the basis dimension");
  TsrvfSequence out{basis.base, {}};
  out.fields.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    Field f = basis.mean;
    for (int i = 0; i < basis.dim(); ++i) f += x(t, i) * basis.components[static_cast<std::size_t>(i)];
    out.fields.push_back(project_tangent(f, basis.base));
  }
  return out;
}

Eigen::VectorXd frame_distances(std::span<const Shape> a, std::span<const Shape> b, const AlignOptions& align) {
  if (a.size() != b.size()) throw Error(kModule, "frame_distances", "sequence lengths differ");
  Eigen::VectorXd out(static_cast<Eigen::Index>(a.size()));
  for (std::size_t t = 0; t < a.size(); ++t) out(static_cast<Eigen::Index>(t)) = shape_distance(a[t], b[t], align);
  return out;
}

}  // namespace shapedyn
