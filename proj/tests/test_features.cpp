#include <doctest.h>

#include <numbers>
#include <random>

#include "shapedyn/error.hpp"
#include "shapedyn/features.hpp"
#include "test_support.hpp"

using namespace shapedyn;
using namespace shapedyn::testing;

namespace {

constexpr double kDeg = std::numbers::pi / 180;

std::vector<ContourD> rotating(int frames, double step_deg) {
  std::vector<ContourD> out;
  for (int t = 0; t < frames; ++t) out.push_back(rigid(blob(200), t * step_deg * kDeg, 0, 0));
  return out;
}

Eigen::MatrixXd random_series(Eigen::Index T, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  Eigen::MatrixXd x(T, d);
  x.row(0).setZero();
  for (Eigen::Index t = 1; t < T; ++t)
    for (Eigen::Index i = 0; i < d; ++i) x(t, i) = 0.6 * x(t - 1, i) + g(rng);
  return x;
}

KinematicsFeature random_kinematics(Eigen::Index steps, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, 1);
  KinematicsFeature f;
  f.upsilon = Eigen::MatrixXd::NullaryExpr(steps, 2, [&] { return g(rng); });
  f.eta = Eigen::VectorXd::NullaryExpr(steps, [&] { return g(rng); });
  f.xi = Eigen::VectorXd::NullaryExpr(kRotationSteps, [&] { return g(rng); });
  return normalize_kinematics(f);
}

}  // namespace

TEST_CASE("kinematics of a rigidly translated sequence") {
  std::vector<ContourD> seq;
  for (int t = 0; t < 10; ++t) seq.push_back(rigid(blob(200), 0, 0.3 * t, -0.1 * t));
  const auto f = kinematics_features(seq);
  REQUIRE(f.upsilon.rows() == 9);
  for (Eigen::Index t = 0; t < 9; ++t) {
    CHECK(f.upsilon(t, 0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(f.upsilon(t, 1) == doctest::Approx(-0.1).epsilon(1e-12));
  }
  CHECK(f.eta.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(f.xi.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(f.omega().size() == 3 * 9 + 5);
}

TEST_CASE("kinematics of a sequence rotating 2 degrees per frame") {
  const auto f = kinematics_features(rotating(12, 2.0));
  for (int h = 1; h <= kRotationSteps; ++h) CHECK(std::abs(f.xi(h - 1) - 2.0 * h * kDeg) < 0.1 * kDeg);
  CHECK(f.eta.cwiseAbs().maxCoeff() < 1e-10);

  // Negative direction gives negative angles.
  const auto g = kinematics_features(rotating(12, -3.0));
  CHECK(std::abs(g.xi(0) + 3.0 * kDeg) < 0.1 * kDeg);
}

TEST_CASE("static sequence has all-zero kinematics") {
  std::vector<ContourD> seq(8, blob(150));
  const auto f = kinematics_features(seq);
  CHECK(f.omega().cwiseAbs().maxCoeff() < 1e-12);
  const auto n = normalize_kinematics(f);
  CHECK(n.degenerate);
  CHECK(n.omega().cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("xi ignores a global rotation and translation") {
  auto seq = wobbling_sequence(15, 3);
  const auto f = kinematics_features(seq);
  for (auto& c : seq) c = rigid(c, 1.1, 4.0, -2.0);
  const auto g = kinematics_features(seq);
  CHECK((f.xi - g.xi).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((f.eta - g.eta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((f.xi.array().abs() <= std::numbers::pi).all());
}

TEST_CASE("kinematics_features input errors") {
  CHECK_THROWS_AS(kinematics_features(rotating(6, 1.0)), Error);
  auto seq = rotating(9, 1.0);
  seq[4].points.setZero();
  try {
    kinematics_features(seq);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.module() == "motility_features");
    CHECK(e.detail().find("frame 4") != std::string::npos);
  }
}

TEST_CASE("normalize_kinematics") {
  std::mt19937_64 rng(1);
  auto f = random_kinematics(20, rng);
  CHECK(f.xi.norm() == doctest::Approx(1).epsilon(1e-12));
  CHECK(f.upsilon.norm() == doctest::Approx(1).epsilon(1e-12));
  CHECK(f.eta.norm() == doctest::Approx(1).epsilon(1e-12));
  CHECK_FALSE(f.degenerate);
  const auto again = normalize_kinematics(f);
  CHECK((again.omega() - f.omega()).cwiseAbs().maxCoeff() < 1e-12);

  KinematicsFeature scaled = f;
  scaled.upsilon *= 7;
  scaled.eta *= 0.01;
  CHECK((normalize_kinematics(scaled).omega() - f.omega()).cwiseAbs().maxCoeff() < 1e-12);

  const auto padded = pad_kinematics(f, 30);
  CHECK(padded.eta.size() == 30);
  CHECK((normalize_kinematics(padded).omega().head(40) - f.omega().head(40)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(pad_kinematics(f, 10), Error);
}

TEST_CASE("kinematics_distance") {
  std::mt19937_64 rng(2);
  const auto a = random_kinematics(15, rng);
  const auto b = random_kinematics(15, rng);
  CHECK(kinematics_distance(a, a) == 0);
  CHECK(kinematics_distance(a, b) == doctest::Approx((a.omega() - b.omega()).norm()).epsilon(1e-12));
  CHECK(std::abs(kinematics_distance(a, b) - kinematics_distance(b, a)) < 1e-12);

  // Orthogonal unit blocks everywhere.
  KinematicsFeature u, v;
  u.upsilon = Eigen::MatrixXd::Zero(3, 2);
  v.upsilon = u.upsilon;
  u.upsilon(0, 0) = v.upsilon(1, 1) = 1;
  u.eta = Eigen::Vector3d(1, 0, 0);
  v.eta = Eigen::Vector3d(0, 0, 1);
  u.xi = Eigen::VectorXd::Unit(5, 0);
  v.xi = Eigen::VectorXd::Unit(5, 4);
  CHECK(kinematics_distance(u, v) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-15));

  // Different lengths compare as zero-padded.
  const auto c = random_kinematics(22, rng);
  CHECK(kinematics_distance(a, c) == doctest::Approx((pad_kinematics(a, 22).omega() - c.omega()).norm()).epsilon(1e-12));
}

TEST_CASE("shape_feature blocks have unit norm") {
  const auto f = shape_feature(random_series(200, 3, 4), 2);
  CHECK(f.p() == 2);
  CHECK(f.beta.rows() == 3);
  CHECK(f.beta.cols() == 7);
  CHECK(std::abs(f.beta.norm() - 1) < 1e-10);
  CHECK(std::abs(f.abar.norm() - 1) < 1e-10);
  CHECK(std::abs(f.sigma.norm() - 1) < 1e-10);
  // beta holds [c, A_1, A_2] up to a common scale.
  const double s = f.model.c.norm() / f.beta.col(0).norm();
  CHECK((f.beta.middleCols(4, 3) * s - f.model.A[1]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("shape_param_distance") {
  const auto a = shape_feature(random_series(200, 3, 5), 1);
  const auto b = shape_feature(random_series(200, 3, 6), 1);
  const auto c = shape_feature(random_series(200, 3, 7), 2);
  CHECK(shape_param_distance(a, a) == 0);
  CHECK(std::abs(shape_param_distance(a, b) - shape_param_distance(b, a)) < 1e-12);
  CHECK(shape_param_distance(a, b) ==
        doctest::Approx(std::sqrt((a.beta - b.beta).squaredNorm() + (a.sigma - b.sigma).squaredNorm())).epsilon(1e-12));

  // Unequal lags switch to the mean coefficient matrix.
  CHECK(shape_param_distance(a, c) ==
        doctest::Approx(std::sqrt((a.abar - c.abar).squaredNorm() + (a.sigma - c.sigma).squaredNorm())).epsilon(1e-12));
  const double forced = shape_param_distance(a, b, true);
  CHECK(forced >= 0);
  CHECK(forced ==
        doctest::Approx(std::sqrt((a.abar - b.abar).squaredNorm() + (a.sigma - b.sigma).squaredNorm())).epsilon(1e-12));

  // Orthogonal unit beta, equal sigma.
  ShapeFeature u = a, v = a;
  u.beta.setZero();
  v.beta.setZero();
  u.beta(0, 0) = 1;
  v.beta(1, 2) = 1;
  CHECK(shape_param_distance(u, v) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  CHECK_THROWS_AS(shape_param_distance(a, shape_feature(random_series(200, 2, 8), 1)), Error);
}

TEST_CASE("all-lag features") {
  const Eigen::MatrixXd x = random_series(300, 2, 9), y = random_series(300, 2, 10);
  const auto fx = all_lag_shape_feature(x);
  const auto fy = all_lag_shape_feature(y);
  REQUIRE(fx.size() == 5);
  for (int p = 1; p <= 5; ++p) CHECK(fx[static_cast<std::size_t>(p - 1)].p() == p);
  CHECK(all_lag_distance(fx, all_lag_shape_feature(x)) == 0);

  double sum = 0;
  for (std::size_t k = 0; k < 5; ++k) sum += std::pow(shape_param_distance(fx[k], fy[k]), 2);
  CHECK(all_lag_distance(fx, fy) == doctest::Approx(std::sqrt(sum)).epsilon(1e-12));

  // The same value from explicitly concatenated blocks.
  auto flat = [](const std::vector<ShapeFeature>& f) {
    std::vector<double> v;
    for (const auto& s : f) {
      v.insert(v.end(), s.beta.data(), s.beta.data() + s.beta.size());
      v.insert(v.end(), s.sigma.data(), s.sigma.data() + s.sigma.size());
    }
    return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  CHECK(all_lag_distance(fx, fy) == doctest::Approx((flat(fx) - flat(fy)).norm()).epsilon(1e-12));
  CHECK_THROWS_AS(all_lag_distance(fx, std::span(fy).first(3)), Error);
}

TEST_CASE("build_distance_features") {
  std::mt19937_64 rng(11);
  std::vector<SequenceFeatures> train;
  for (int i = 0; i < 6; ++i)
    train.push_back({"s" + std::to_string(i), {shape_feature(random_series(150, 3, 20 + i), 1)},
                     random_kinematics(30 + i, rng)});

  for (std::size_t k = 0; k < train.size(); ++k)
    for (auto kind : {FeatureKind::shape, FeatureKind::kinematics, FeatureKind::combined})
      CHECK(std::abs(build_distance_features(train, train[k], kind).values(static_cast<Eigen::Index>(k))) < 1e-10);

  const auto& q = train[2];
  const auto vs = build_distance_features(train, q, FeatureKind::shape).values;
  const auto vk = build_distance_features(train, q, FeatureKind::kinematics).values;
  CHECK(build_distance_features(train, q, FeatureKind::combined, {1, 0}).values == vs);
  const auto vc = build_distance_features(train, q, FeatureKind::combined, {0.3, 2.5}).values;
  CHECK((vc - (0.3 * vs + 2.5 * vk)).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::MatrixXd d = distance_matrix(train, train, FeatureKind::combined);
  CHECK((d - d.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(d.diagonal().cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(build_distance_features({}, q, FeatureKind::shape), Error);
  CHECK(parse_feature_kind(to_string(FeatureKind::combined)) == FeatureKind::combined);
  CHECK_THROWS_AS(parse_feature_kind("bogus"), Error);
}
