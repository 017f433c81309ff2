#ifndef SHAPEDYN_CLASSIFIER_HPP
#define SHAPEDYN_CLASSIFIER_HPP

// Small classifiers over distance-vector features and stratified k-fold
// evaluation.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shapedyn {

struct LabeledDataset {
  Eigen::MatrixXd features;  // one row per item
  std::vector<int> labels;   // 0..C-1
  std::vector<std::string> class_names;

  int classes() const { return static_cast<int>(class_names.size()); }
  Eigen::Index size() const { return features.rows(); }
};

enum class ClassifierKind { svm, knn, centroid };

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::svm;
  int k = 1;             // k-NN
  double c_reg = 1.0;    // SVM, lambda = 1 / c_reg
  int epochs = 2000;     // SVM
};

/// "svm", "svm:C", "knn", "knn:k", "centroid".
ClassifierSpec parse_classifier(std::string_view text);
std::string to_string(const ClassifierSpec& spec);

/// One-vs-rest linear SVMs on standardized features with a constant bias
/// column. Each machine minimizes (lambda/2)|w|^2 + mean hinge by full-batch
/// subgradient steps 1/(lambda t), projected onto |w| <= 1/sqrt(lambda).
struct LinearSvm {
  Eigen::MatrixXd weights;  // classes x (features + 1)
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  Eigen::MatrixXd margins(const Eigen::MatrixXd& x) const;
};

LinearSvm train_linear_svm(const Eigen::MatrixXd& x, std::span<const int> labels, int classes, double c_reg = 1.0,
                           int epochs = 2000);
inline LinearSvm train_linear_svm(const LabeledDataset& data, double c_reg = 1.0, int epochs = 2000) {
  return train_linear_svm(data.features, data.labels, data.classes(), c_reg, epochs);
}

/// argmax margin, ties to the lowest class id.
std::vector<int> predict_svm(const LinearSvm& model, const Eigen::MatrixXd& x);

/// Majority vote among the k nearest training rows (Euclidean); vote ties
/// go to the smallest class id, distance ties to the earlier training row.
std::vector<int> predict_knn(const Eigen::MatrixXd& train, std::span<const int> labels, int classes,
                             const Eigen::MatrixXd& query, int k);

/// Closest class mean (Euclidean), ties to the lowest class id.
std::vector<int> predict_centroid(const Eigen::MatrixXd& train, std::span<const int> labels, int classes,
                                  const Eigen::MatrixXd& query);

/// Trains `spec` on (train, labels) and labels `query`.
std::vector<int> fit_predict(const ClassifierSpec& spec, const Eigen::MatrixXd& train, std::span<const int> labels,
                             int classes, const Eigen::MatrixXd& query);

struct EvaluationReport {
  double accuracy = 0;
  Eigen::MatrixXd confusion;  // row-normalized, rows are true classes
  Eigen::MatrixXi counts;     // raw confusion counts
  std::vector<double> fold_accuracies;
  std::vector<int> folds;        // fold id of each item
  std::vector<int> predictions;  // out-of-fold prediction of each item
};

/// Fold id per item: each class is shuffled with a seeded generator and dealt
/// round-robin, so every fold gets floor or ceil of each class share.
std::vector<int> stratified_folds(std::span<const int> labels, int classes, int folds, std::uint64_t seed);

/// Predicts the test items of one fold from its training items only.
using FoldPredictor = std::function<std::vector<int>(int fold, std::span<const Eigen::Index> train,
                                                     std::span<const Eigen::Index> test)>;

EvaluationReport cross_validate(std::span<const int> labels, int classes, int folds, std::uint64_t seed,
                                const FoldPredictor& predictor);

/// Cross-validation on fixed feature rows.
EvaluationReport cross_validate(const LabeledDataset& data, int folds, const ClassifierSpec& spec, std::uint64_t seed);

/// Report from out-of-fold predictions.
EvaluationReport summarize(std::span<const int> labels, std::span<const int> predictions, std::span<const int> folds,
                           int classes, int fold_count);

}  // namespace shapedyn

#endif  // SHAPEDYN_CLASSIFIER_HPP
