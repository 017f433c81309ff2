#include <doctest.h>

#include <algorithm>
#include <random>

#include "shapedyn/classifier.hpp"
#include "shapedyn/error.hpp"

using namespace shapedyn;

namespace {

// Gaussian blobs around well-separated class centers.
LabeledDataset blobs(int classes, int per_class, Eigen::Index dim, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  LabeledDataset d;
  d.features.resize(classes * per_class, dim);
  for (int c = 0; c < classes; ++c) {
    d.class_names.push_back("c" + std::to_string(c));
    Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
    center(c % dim) = 4;
    for (int i = 0; i < per_class; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) d.features(c * per_class + i, j) = center(j) + spread * g(rng);
      d.labels.push_back(c);
    }
  }
  return d;
}

double accuracy(std::span<const int> truth, std::span<const int> pred) {
  int right = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) right += truth[i] == pred[i];
  return double(right) / double(truth.size());
}

}  // namespace

TEST_CASE("linear SVM separates separable blobs") {
  const auto d = blobs(2, 40, 3, 0.5, 1);
  const auto m = train_linear_svm(d);
  CHECK(accuracy(d.labels, predict_svm(m, d.features)) == 1.0);

  const auto d4 = blobs(4, 30, 5, 0.5, 2);
  CHECK(accuracy(d4.labels, predict_svm(train_linear_svm(d4), d4.features)) == 1.0);
}

TEST_CASE("linear SVM is unchanged by duplicating the training set") {
  const auto d = blobs(3, 20, 2, 1.5, 3);
  LabeledDataset twice = d;
  twice.features.resize(2 * d.size(), 2);
  twice.features << d.features, d.features;
  twice.labels.insert(twice.labels.end(), d.labels.begin(), d.labels.end());

  Eigen::MatrixXd probe(41 * 41, 2);
  for (int i = 0; i < 41; ++i)
    for (int j = 0; j < 41; ++j) probe.row(i * 41 + j) << -2 + 0.2 * i, -2 + 0.2 * j;
  CHECK(predict_svm(train_linear_svm(d), probe) == predict_svm(train_linear_svm(twice), probe));
}

TEST_CASE("linear SVM input errors") {
  auto d = blobs(2, 10, 2, 0.5, 4);
  std::fill(d.labels.begin(), d.labels.end(), 1);
  CHECK_THROWS_AS(train_linear_svm(d), Error);
  d.labels.pop_back();
  CHECK_THROWS_AS(train_linear_svm(d), Error);
}

TEST_CASE("permuted labels give chance accuracy") {
  auto d = blobs(4, 50, 6, 0.8, 5);
  std::mt19937_64 rng(6);
  std::shuffle(d.labels.begin(), d.labels.end(), rng);
  const auto r = cross_validate(d, 5, ClassifierSpec{}, 7);
  MESSAGE("accuracy on permuted labels " << r.accuracy);
  CHECK(std::abs(r.accuracy - 0.25) < 0.15);
}

TEST_CASE("k-NN") {
  const auto d = blobs(3, 15, 4, 2.0, 8);
  // Each training row labels itself at k = 1.
  CHECK(predict_knn(d.features, d.labels, 3, d.features, 1) == d.labels);

  // k = M gives the global majority everywhere.
  auto labels = d.labels;
  labels[0] = labels[1] = 2;
  const auto all = predict_knn(d.features, labels, 3, d.features, static_cast<int>(d.size()));
  CHECK(std::all_of(all.begin(), all.end(), [](int y) { return y == 2; }));

  // Brute-force scan oracle.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 3);
  const Eigen::MatrixXd q = Eigen::MatrixXd::NullaryExpr(50, 4, [&] { return g(rng); });
  for (int k : {1, 3, 5}) {
    const auto got = predict_knn(d.features, d.labels, 3, q, k);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      std::vector<std::pair<double, Eigen::Index>> dist;
      for (Eigen::Index j = 0; j < d.size(); ++j) dist.push_back({(d.features.row(j) - q.row(i)).norm(), j});
      std::sort(dist.begin(), dist.end());
      int votes[3] = {0, 0, 0};
      for (int j = 0; j < k; ++j) ++votes[d.labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(j)].second)]];
      int best = 0;
      for (int c = 1; c < 3; ++c)
        if (votes[c] > votes[best]) best = c;
      CHECK(got[static_cast<std::size_t>(i)] == best);
    }
  }
  CHECK_THROWS_AS(predict_knn(d.features, d.labels, 3, q, 0), Error);
  CHECK_THROWS_AS(predict_knn(d.features, d.labels, 3, q, 100), Error);
}

TEST_CASE("nearest centroid") {
  const auto d = blobs(3, 20, 3, 0.5, 10);
  CHECK(accuracy(d.labels, predict_centroid(d.features, d.labels, 3, d.features)) == 1.0);
  const Eigen::MatrixXd mid = Eigen::MatrixXd::Zero(1, 3);
  // Equidistant from every class mean up to noise: still a valid id.
  const int y = predict_centroid(d.features, d.labels, 3, mid)[0];
  CHECK((y >= 0 && y < 3));
}

TEST_CASE("stratified folds") {
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 10 + 3 * c; ++i) labels.push_back(c);
  const auto f = stratified_folds(labels, 3, 5, 42);
  CHECK(f == stratified_folds(labels, 3, 5, 42));
  CHECK(f != stratified_folds(labels, 3, 5, 43));
  for (int c = 0; c < 3; ++c) {
    std::vector<int> per(5, 0);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) ++per[static_cast<std::size_t>(f[i])];
    CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
  }
  CHECK_THROWS_AS(stratified_folds(labels, 3, 11, 1), Error);
  CHECK_THROWS_AS(stratified_folds(labels, 3, 1, 1), Error);
}

TEST_CASE("cross_validate with stub predictors") {
  std::vector<int> labels;
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 5 + 5 * c; ++i) labels.push_back(c);

  const auto perfect = cross_validate(labels, 4, 5, 1, [&](int, auto, std::span<const Eigen::Index> test) {
    std::vector<int> out;
    for (auto i : test) out.push_back(labels[static_cast<std::size_t>(i)]);
    return out;
  });
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.confusion.isIdentity(0));
  for (double a : perfect.fold_accuracies) CHECK(a == 1.0);

  const auto constant = cross_validate(labels, 4, 5, 1, [](int, auto, std::span<const Eigen::Index> test) {
    return std::vector<int>(test.size(), 3);
  });
  CHECK(constant.accuracy == doctest::Approx(20.0 / 50.0).epsilon(1e-15));

  // Training and test indices partition the data with no overlap.
  cross_validate(labels, 4, 5, 1, [&](int, std::span<const Eigen::Index> train, std::span<const Eigen::Index> test) {
    std::vector<Eigen::Index> all(train.begin(), train.end());
    all.insert(all.end(), test.begin(), test.end());
    std::sort(all.begin(), all.end());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    CHECK(all.size() == labels.size());
    return std::vector<int>(test.size(), 0);
  });
}

TEST_CASE("report consistency on a real classifier") {
  const auto d = blobs(3, 20, 3, 2.5, 11);
  for (const char* spec : {"svm", "knn:3", "centroid"}) {
    const auto r = cross_validate(d, 4, parse_classifier(spec), 12);
    CHECK(r.fold_accuracies.size() == 4);
    for (Eigen::Index c = 0; c < 3; ++c) CHECK(std::abs(r.confusion.row(c).sum() - 1) < 1e-8);
    double weighted = 0;
    for (Eigen::Index c = 0; c < 3; ++c) weighted += r.confusion(c, c) * r.counts.row(c).sum();
    CHECK(std::abs(r.accuracy - weighted / double(d.size())) < 1e-10);
    CHECK((r.accuracy >= 0 && r.accuracy <= 1));
    const auto again = cross_validate(d, 4, parse_classifier(spec), 12);
    CHECK(again.predictions == r.predictions);
  }
}

TEST_CASE("parse_classifier") {
  CHECK(parse_classifier("svm").kind == ClassifierKind::svm);
  CHECK(parse_classifier("svm:0.5").c_reg == 0.5);
  CHECK(parse_classifier("knn:7").k == 7);
  CHECK(parse_classifier("centroid").kind == ClassifierKind::centroid);
  for (const char* bad : {"", "svm:x", "svm:-1", "knn:0", "knn:3x", "tree", "centroid:2"})
    CHECK_THROWS_AS(parse_classifier(bad), Error);
}
