#include "shapedyn/classifier.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <random>

#include "shapedyn/error.hpp"

namespace shapedyn {

namespace {

constexpr const char* kModule = "classifier";

void check_labels(std::span<const int> labels, Eigen::Index rows, int classes, const char* op) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) throw Error(kModule, op, "label count does not match rows");
  for (int y : labels)
    if (y < 0 || y >= classes) throw Error(kModule, op, "label " + std::to_string(y) + " out of range");
}

Eigen::MatrixXd with_bias(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out << x, Eigen::VectorXd::Ones(x.rows());
  return out;
}

}  // namespace

ClassifierSpec parse_classifier(std::string_view text) {
  ClassifierSpec spec;
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string arg = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
  auto bad = [&] { return Error(kModule, "parse_classifier", "cannot parse classifier '" + std::string(text) + "'"); };
  if (name == "svm") {
    spec.kind = ClassifierKind::svm;
    if (!arg.empty()) {
      try {
        spec.c_reg = std::stod(arg);
      } catch (const std::exception&) {
        throw bad();
      }
      if (!(spec.c_reg > 0)) throw bad();
    }
  } else if (name == "knn") {
    spec.kind = ClassifierKind::knn;
    if (!arg.empty()) {
      const auto r = std::from_chars(arg.data(), arg.data() + arg.size(), spec.k);
      if (r.ec != std::errc() || r.ptr != arg.data() + arg.size() || spec.k < 1) throw bad();
    }
  } else if (name == "centroid" && arg.empty()) {
    spec.kind = ClassifierKind::centroid;
  } else {
    throw bad();
  }
  return spec;
}

std::string to_string(const ClassifierSpec& spec) {
  switch (spec.kind) {
    case ClassifierKind::svm: return "svm:" + std::to_string(spec.c_reg);
    case ClassifierKind::knn: return "knn:" + std::to_string(spec.k);
    case ClassifierKind::centroid: return "centroid";
  }
  return "?";
}

Eigen::MatrixXd LinearSvm::margins(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw Error(kModule, "predict_svm", "feature dimension mismatch");
  const Eigen::MatrixXd z = (x.rowwise() - mean).array().rowwise() / scale.array();
  return with_bias(z) * weights.transpose();
}

LinearSvm train_linear_svm(const Eigen::MatrixXd& x, std::span<const int> labels, int classes, double c_reg,
                           int epochs) {
  check_labels(labels, x.rows(), classes, "train_linear_svm");
  if (x.rows() == 0) throw Error(kModule, "train_linear_svm", "empty training set");
  std::vector<int> present(static_cast<std::size_t>(classes), 0);
  for (int y : labels) present[static_cast<std::size_t>(y)] = 1;
  if (std::accumulate(present.begin(), present.end(), 0) < 2)
    throw Error(kModule, "train_linear_svm", "training data has fewer than 2 classes");
  if (!(c_reg > 0) || epochs < 1) throw Error(kModule, "train_linear_svm", "invalid regularization or epoch count");

  LinearSvm m;
  m.mean = x.colwise().mean();
  m.scale = ((x.rowwise() - m.mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < m.scale.size(); ++j)
    if (!(m.scale(j) > 1e-12)) m.scale(j) = 1;
  const Eigen::MatrixXd z = with_bias((x.rowwise() - m.mean).array().rowwise() / m.scale.array());

  const Eigen::Index M = z.rows();
  Eigen::MatrixXd y = -Eigen::MatrixXd::Ones(M, classes);
  for (Eigen::Index i = 0; i < M; ++i) y(i, labels[static_cast<std::size_t>(i)]) = 1;

  const double lambda = 1 / c_reg;
  const double radius = 1 / std::sqrt(lambda);
  m.weights = Eigen::MatrixXd::Zero(classes, z.cols());
  for (int t = 1; t <= epochs; ++t) {
    const Eigen::MatrixXd active = ((y.array() * (z * m.weights.transpose()).array()) < 1).cast<double>() * y.array();
    const Eigen::MatrixXd grad = lambda * m.weights - active.transpose() * z / double(M);
    m.weights -= grad / (lambda * t);
    for (Eigen::Index c = 0; c < classes; ++c) {
      const double n = m.weights.row(c).norm();
      if (n > radius) m.weights.row(c) *= radius / n;
    }
  }
  return m;
}

std::vector<int> predict_svm(const LinearSvm& model, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd s = model.margins(x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < s.cols(); ++c)
      if (s(i, c) > s(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict_knn(const Eigen::MatrixXd& train, std::span<const int> labels, int classes,
                             const Eigen::MatrixXd& query, int k) {
  check_labels(labels, train.rows(), classes, "predict_knn");
  if (k < 1 || k > train.rows())
    throw Error(kModule, "predict_knn", "k = " + std::to_string(k) + " outside 1.." + std::to_string(train.rows()));
  if (query.cols() != train.cols()) throw Error(kModule, "predict_knn", "feature dimension mismatch");
  std::vector<int> out;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.rows()));
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    const Eigen::VectorXd d = (train.rowwise() - query.row(q)).rowwise().squaredNorm();
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return d(a) < d(b); });
    std::vector<int> votes(static_cast<std::size_t>(classes), 0);
    for (int i = 0; i < k; ++i) ++votes[static_cast<std::size_t>(labels[static_cast<std::size_t>(order[i])])];
    out.push_back(static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
  }
  return out;
}

std::vector<int> predict_centroid(const Eigen::MatrixXd& train, std::span<const int> labels, int classes,
                                  const Eigen::MatrixXd& query) {
  check_labels(labels, train.rows(), classes, "predict_centroid");
  if (query.cols() != train.cols()) throw Error(kModule, "predict_centroid", "feature dimension mismatch");
  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(classes, train.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(classes);
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    centers.row(labels[static_cast<std::size_t>(i)]) += train.row(i);
    counts(labels[static_cast<std::size_t>(i)]) += 1;
  }
  std::vector<int> out;
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    int best = -1;
    double best_d = 0;
    for (int c = 0; c < classes; ++c) {
      if (counts(c) == 0) continue;
      const double d = (centers.row(c) / counts(c) - query.row(q)).squaredNorm();
      if (best < 0 || d < best_d) best = c, best_d = d;
    }
    out.push_back(best);
  }
  return out;
}

std::vector<int> fit_predict(const ClassifierSpec& spec, const Eigen::MatrixXd& train, std::span<const int> labels,
                             int classes, const Eigen::MatrixXd& query) {
  switch (spec.kind) {
    case ClassifierKind::svm: return predict_svm(train_linear_svm(train, labels, classes, spec.c_reg, spec.epochs), query);
    case ClassifierKind::knn: return predict_knn(train, labels, classes, query, spec.k);
    case ClassifierKind::centroid: return predict_centroid(train, labels, classes, query);
  }
  return {};
}

std::vector<int> stratified_folds(std::span<const int> labels, int classes, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(kModule, "stratified_folds", "need at least 2 folds");
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) throw Error(kModule, "stratified_folds", "label out of range");
    members[static_cast<std::size_t>(labels[i])].push_back(static_cast<Eigen::Index>(i));
  }
  std::mt19937_64 rng(seed);
  std::vector<int> out(labels.size(), -1);
  int next = 0;
  for (int c = 0; c < classes; ++c) {
    auto& m = members[static_cast<std::size_t>(c)];
    if (static_cast<int>(m.size()) < folds)
      throw Error(kModule, "stratified_folds",
                  "class " + std::to_string(c) + " has " + std::to_string(m.size()) + " members, fewer than " +
                      std::to_string(folds) + " folds");
    // Fisher-Yates with an explicit index draw keeps the order independent of
    // the standard library's shuffle implementation.
    for (std::size_t i = m.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(m[i], m[pick(rng)]);
    }
    // Continue the deal where the previous class stopped so fold sizes stay
    // balanced overall.
    for (Eigen::Index idx : m) {
      out[static_cast<std::size_t>(idx)] = next;
      next = (next + 1) % folds;
    }
  }
  return out;
}

EvaluationReport summarize(std::span<const int> labels, std::span<const int> predictions, std::span<const int> folds,
                           int classes, int fold_count) {
  if (labels.size() != predictions.size() || labels.size() != folds.size())
    throw Error(kModule, "summarize", "length mismatch");
  EvaluationReport r;
  r.counts = Eigen::MatrixXi::Zero(classes, classes);
  std::vector<int> right(static_cast<std::size_t>(fold_count), 0), total(static_cast<std::size_t>(fold_count), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i];
    if (p < 0 || p >= classes) throw Error(kModule, "summarize", "prediction out of range");
    ++r.counts(labels[i], p);
    ++total[static_cast<std::size_t>(folds[i])];
    right[static_cast<std::size_t>(folds[i])] += labels[i] == p;
  }
  r.confusion = Eigen::MatrixXd::Zero(classes, classes);
  for (int c = 0; c < classes; ++c) {
    const double n = r.counts.row(c).sum();
    if (n > 0) r.confusion.row(c) = r.counts.row(c).cast<double>() / n;
  }
  r.accuracy = labels.empty() ? 0 : double(r.counts.trace()) / double(labels.size());
  for (int f = 0; f < fold_count; ++f)
    r.fold_accuracies.push_back(total[static_cast<std::size_t>(f)] ? double(right[static_cast<std::size_t>(f)]) /
                                                                         total[static_cast<std::size_t>(f)]
                                                                   : 0.0);
  r.folds.assign(folds.begin(), folds.end());
  r.predictions.assign(predictions.begin(), predictions.end());
  return r;
}

EvaluationReport cross_validate(std::span<const int> labels, int classes, int folds, std::uint64_t seed,
                                const FoldPredictor& predictor) {
  const auto fold_of = stratified_folds(labels, classes, folds, seed);
  std::vector<int> predictions(labels.size(), -1);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < labels.size(); ++i) (fold_of[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    const auto pred = predictor(f, train, test);
    if (pred.size() != test.size()) throw Error(kModule, "cross_validate", "predictor returned the wrong count");
    for (std::size_t i = 0; i < test.size(); ++i) predictions[static_cast<std::size_t>(test[i])] = pred[i];
  }
  return summarize(labels, predictions, fold_of, classes, folds);
}

EvaluationReport cross_validate(const LabeledDataset& data, int folds, const ClassifierSpec& spec, std::uint64_t seed) {
  check_labels(data.labels, data.features.rows(), data.classes(), "cross_validate");
  auto rows = [&](std::span<const Eigen::Index> idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), data.features.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = data.features.row(idx[i]);
    return out;
  };
  return cross_validate(data.labels, data.classes(), folds, seed,
                        [&](int, std::span<const Eigen::Index> train, std::span<const Eigen::Index> test) {
                          std::vector<int> y;
                          for (auto i : train) y.push_back(data.labels[static_cast<std::size_t>(i)]);
                          return fit_predict(spec, rows(train), y, data.classes(), rows(test));
                        });
}

}  // namespace shapedyn
