#ifndef SHAPEDYN_PIPELINE_HPP
#define SHAPEDYN_PIPELINE_HPP

// End-to-end classification pipeline. Per-sequence work (alignment, TSRVF,
// kinematics) depends on one sequence only; everything pooled (reference
// base, PCA basis, VAR features of the training set) is fitted per fold from
// training sequences alone.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shapedyn/classifier.hpp"
#include "shapedyn/features.hpp"
#include "shapedyn/shape_dynamics.hpp"
#include "shapedyn/var_model.hpp"

namespace shapedyn {

enum class LagMode { fixed, best, all };

LagMode parse_lag_mode(std::string_view name);
std::string to_string(LagMode mode);

struct PipelineConfig {
  Eigen::Index n_points = kDefaultSamplePoints;
  int pca_dim = 5;
  LagMode lag_mode = LagMode::fixed;
  int lag = 1;    // fixed mode
  int p_max = 5;  // best and all modes
  LagCriterion criterion = LagCriterion::bic;
  FeatureKind kind = FeatureKind::shape;
  FeatureWeights weights;
  ClassifierSpec classifier;
  int folds = 5;
  std::uint64_t seed = 0;
  // Frame-to-predecessor alignment inside a sequence.
  AlignOptions frame_align{.prescreen = 3};
  // Alignment of a sequence base to the pooled reference.
  AlignOptions reference_align{};
};

struct PreparedSequence {
  std::string id;
  int label = -1;
  ShapeSequence shapes;
  TsrvfSequence tsrvf;
  KinematicsFeature kinematics;  // normalized
};

/// Aligns, computes the TSRVF and the kinematics of one raw sequence. Errors
/// name the sequence id.
PreparedSequence prepare_sequence(std::string id, int label, std::vector<Contour<double>> frames,
                                  const PipelineConfig& config);

/// Non-owning view of a subset of prepared sequences (one fold's training or
/// test set) without copying them.
using SequenceRefs = std::vector<const PreparedSequence*>;
SequenceRefs refs(std::span<const PreparedSequence> sequences);

struct Embedding {
  PcaBasis basis;
  std::vector<EuclideanSeries> series;  // one per input, same order
};

/// Reference base = base of the first sequence; every TSRVF is moved there,
/// pooled PCA of dimension d, and each sequence projected.
Embedding fit_embedding(const SequenceRefs& sequences, int d, const AlignOptions& align = {});

EuclideanSeries embed_sequence(const PreparedSequence& sequence, const PcaBasis& basis, const AlignOptions& align = {});

/// Frame-wise shape distance between a sequence and its reconstruction from
/// the basis coefficients alone (entry 0 is the base frame).
Eigen::VectorXd reconstruction_errors(const PreparedSequence& sequence, const PcaBasis& basis,
                                      const AlignOptions& align = {});

/// Shape features of one Euclidean series under the configured lag mode.
std::vector<ShapeFeature> series_shape_features(const Eigen::MatrixXd& x, const PipelineConfig& config);

SequenceFeatures sequence_features(const PreparedSequence& sequence, const EuclideanSeries& series,
                                   const PipelineConfig& config);

/// Everything learned from one fold's training sequences.
struct FoldModel {
  PcaBasis basis;
  std::vector<SequenceFeatures> train_features;
  std::vector<int> train_labels;
  Eigen::MatrixXd train_distances;  // train x train distance features
};

FoldModel train_fold(const SequenceRefs& train, const PipelineConfig& config);

/// Distance-feature rows of `queries` against the fold's training set.
Eigen::MatrixXd fold_distance_features(const FoldModel& model, const SequenceRefs& queries,
                                       const PipelineConfig& config);

std::vector<int> predict_fold(const FoldModel& model, const SequenceRefs& test, int classes,
                              const PipelineConfig& config);

/// FNV-1a hash of the fold's serialized basis and training features.
std::string fold_artifact_hash(const FoldModel& model);

/// Stratified k-fold evaluation with every pooled artifact refitted per fold.
/// When `fold_hashes` is given it receives fold_artifact_hash of each fold.
EvaluationReport classify_sequences(std::span<const PreparedSequence> sequences, int classes,
                                    const PipelineConfig& config, std::vector<std::string>* fold_hashes = nullptr);

}  // namespace shapedyn

#endif  // SHAPEDYN_PIPELINE_HPP
