#include "shapedyn/pipeline.hpp"

#include "shapedyn/error.hpp"
#include "shapedyn/io.hpp"

namespace shapedyn {

namespace {

constexpr const char* kModule = "pipeline";

SequenceRefs pick(std::span<const PreparedSequence> all, std::span<const Eigen::Index> idx) {
  SequenceRefs out;
  for (auto i : idx) out.push_back(&all[static_cast<std::size_t>(i)]);
  return out;
}

Json shape_feature_json(const ShapeFeature& f) {
  Json j;
  j["p"] = f.p();
  j["beta"] = matrix_json(f.beta);
  j["abar"] = matrix_json(f.abar);
  j["sigma"] = matrix_json(f.sigma);
  return j;
}

}  // namespace

LagMode parse_lag_mode(std::string_view name) {
  if (name == "fixed") return LagMode::fixed;
  if (name == "best") return LagMode::best;
  if (name == "all") return LagMode::all;
  throw Error(kModule, "parse_lag_mode", "unknown lag mode '" + std::string(name) + "'");
}

std::string to_string(LagMode mode) {
  switch (mode) {
    case LagMode::fixed: return "fixed";
    case LagMode::best: return "best";
    case LagMode::all: return "all";
  }
  return "?";
}

PreparedSequence prepare_sequence(std::string id, int label, std::vector<Contour<double>> frames,
                                  const PipelineConfig& config) {
  try {
    PreparedSequence s;
    s.id = id;
    s.label = label;
    s.kinematics = normalize_kinematics(kinematics_features(frames, config.n_points));
    s.shapes = build_shape_sequence(id, std::move(frames), config.n_points, config.frame_align);
    s.tsrvf = compute_tsrvf(s.shapes);
    return s;
  } catch (const Error& e) {
    throw Error(e.module(), e.operation(), "sequence '" + id + "': " + e.detail());
  }
}

SequenceRefs refs(std::span<const PreparedSequence> sequences) {
  SequenceRefs out;
  for (const auto& s : sequences) out.push_back(&s);
  return out;
}

Embedding fit_embedding(const SequenceRefs& sequences, int d, const AlignOptions& align) {
  if (sequences.empty()) throw Error(kModule, "fit_embedding", "no sequences");
  const Shape& reference = sequences.front()->tsrvf.base;
  std::vector<TsrvfSequence> moved;
  moved.reserve(sequences.size());
  for (const auto* sp : sequences) {
    const auto& s = *sp;
    try {
      moved.push_back(transport_to_reference(s.tsrvf, reference, align));
    } catch (const Error& e) {
      throw Error(e.module(), e.operation(), "sequence '" + s.id + "': " + e.detail());
    }
  }
  Embedding out;
  out.basis = fit_pca(moved, d);
  for (std::size_t i = 0; i < moved.size(); ++i) {
    auto x = project(moved[i], out.basis);
    x.source_id = sequences[i]->id;
    out.series.push_back(std::move(x));
  }
  return out;
}

EuclideanSeries embed_sequence(const PreparedSequence& sequence, const PcaBasis& basis, const AlignOptions& align) {
  auto x = project(transport_to_reference(sequence.tsrvf, basis.base, align), basis);
  x.source_id = sequence.id;
  return x;
}

Eigen::VectorXd reconstruction_errors(const PreparedSequence& sequence, const PcaBasis& basis,
                                      const AlignOptions& align) {
  const Shape& own = sequence.tsrvf.base;
  const Shape base = inner(own.values(), basis.base.values()) > 1 - 1e-15 ? own
                                                                          : align_reparam(basis.base, own, align).aligned;
  const auto coeffs = project(transport_to_reference(sequence.tsrvf, basis.base, align), basis);
  const auto frames = reconstruct_sequence(transport_fields(lift(coeffs.values, basis), base));
  return frame_distances(frames, sequence.shapes.frames, align);
}

std::vector<ShapeFeature> series_shape_features(const Eigen::MatrixXd& x, const PipelineConfig& config) {
  switch (config.lag_mode) {
    case LagMode::fixed: return {shape_feature(x, config.lag)};
    case LagMode::best: return {shape_feature(x, select_lag(x, config.p_max, config.criterion).best)};
    case LagMode::all: return all_lag_shape_feature(x, config.p_max);
  }
  return {};
}

SequenceFeatures sequence_features(const PreparedSequence& sequence, const EuclideanSeries& series,
                                   const PipelineConfig& config) {
  try {
    return {sequence.id, series_shape_features(series.values, config), sequence.kinematics};
  } catch (const Error& e) {
    throw Error(e.module(), e.operation(), "sequence '" + sequence.id + "': " + e.detail());
  }
}

FoldModel train_fold(const SequenceRefs& train, const PipelineConfig& config) {
  auto emb = fit_embedding(train, config.pca_dim, config.reference_align);
  FoldModel m;
  m.basis = std::move(emb.basis);
  for (std::size_t i = 0; i < train.size(); ++i) {
    m.train_features.push_back(sequence_features(*train[i], emb.series[i], config));
    m.train_labels.push_back(train[i]->label);
  }
  m.train_distances = distance_matrix(m.train_features, m.train_features, config.kind, config.weights);
  return m;
}

Eigen::MatrixXd fold_distance_features(const FoldModel& model, const SequenceRefs& queries,
                                       const PipelineConfig& config) {
  std::vector<SequenceFeatures> q;
  for (const auto* s : queries)
    q.push_back(sequence_features(*s, embed_sequence(*s, model.basis, config.reference_align), config));
  return distance_matrix(model.train_features, q, config.kind, config.weights);
}

std::vector<int> predict_fold(const FoldModel& model, const SequenceRefs& test, int classes,
                              const PipelineConfig& config) {
  return fit_predict(config.classifier, model.train_distances, model.train_labels, classes,
                     fold_distance_features(model, test, config));
}

std::string fold_artifact_hash(const FoldModel& model) {
  Json j;
  j["basis"] = pca_json(model.basis);
  Json feats = Json::array();
  for (const auto& f : model.train_features) {
    Json shape = Json::array();
    for (const auto& s : f.shape) shape.push_back(shape_feature_json(s));
    feats.push_back({{"id", f.id}, {"shape", shape}, {"kinematics", matrix_json(f.kinematics.omega().transpose())}});
  }
  j["features"] = std::move(feats);
  j["labels"] = model.train_labels;
  return hex64(fnv1a(j.dump()));
}

EvaluationReport classify_sequences(std::span<const PreparedSequence> sequences, int classes,
                                    const PipelineConfig& config, std::vector<std::string>* fold_hashes) {
  std::vector<int> labels;
  for (const auto& s : sequences) labels.push_back(s.label);
  if (fold_hashes) fold_hashes->assign(static_cast<std::size_t>(config.folds), "");
  return cross_validate(labels, classes, config.folds, config.seed,
                        [&](int fold, std::span<const Eigen::Index> train, std::span<const Eigen::Index> test) {
                          const auto model = train_fold(pick(sequences, train), config);
                          if (fold_hashes) (*fold_hashes)[static_cast<std::size_t>(fold)] = fold_artifact_hash(model);
                          return predict_fold(model, pick(sequences, test), classes, config);
                        });
}

}  // namespace shapedyn
