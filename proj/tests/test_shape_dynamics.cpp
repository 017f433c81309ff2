#include <doctest.h>

#include <random>

#include "shapedyn/shape_dynamics.hpp"
#include "test_support.hpp"

using namespace shapedyn;
using namespace shapedyn::testing;

namespace {

const AlignOptions kFast{.prescreen = 3};

ShapeSequence sequence(std::size_t frames, std::uint64_t seed, Eigen::Index n = 100) {
  return build_shape_sequence("s" + std::to_string(seed), wobbling_sequence(frames, seed), n, kFast);
}

double max_abs(const Field& f) { return f.cwiseAbs().maxCoeff(); }

Field random_tangent(const Shape& base, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, 1);
  Field f(2, base.size());
  for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] = g(rng);
  return project_tangent(f, base);
}

}  // namespace

TEST_CASE("build_shape_sequence aligns every frame to its predecessor") {
  const auto seq = sequence(6, 1);
  REQUIRE(seq.frames.size() == 6);
  CHECK(seq.raw_contours.size() == 6);
  REQUIRE(seq.step_distances.size() == 5);
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    CHECK(std::abs(l2_norm(seq.frames[t].values()) - 1) < 1e-12);
    CHECK(std::abs(sphere_distance(seq.frames[t - 1], seq.frames[t]) - seq.step_distances[t - 1]) < 1e-12);
    // A fresh alignment of already aligned frames may gain a little more.
    CHECK(seq.step_distances[t - 1] == doctest::Approx(shape_distance(seq.frames[t - 1], seq.frames[t], kFast)).epsilon(2e-2));
  }
}

TEST_CASE("build_shape_sequence names the failing frame") {
  auto raw = wobbling_sequence(3, 2);
  raw[1].points.setZero();
  try {
    build_shape_sequence("x", raw, 50);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("frame 1") != std::string::npos);
  }
}

TEST_CASE("compute_tsrvf of a constant sequence is zero") {
  const auto q = Shape::from_contour(blob(300), 80);
  const std::vector<Shape> frames(5, q);
  const auto f = compute_tsrvf(frames);
  REQUIRE(f.length() == 4);
  for (const auto& v : f.fields) CHECK(max_abs(v) == 0.0);
}

TEST_CASE("compute_tsrvf of two frames is the log map") {
  const auto seq = sequence(2, 3);
  const auto f = compute_tsrvf(seq);
  REQUIRE(f.length() == 1);
  CHECK(max_abs(f.fields[0] - sphere_log(seq.frames[0], seq.frames[1])) < 1e-15);
}

TEST_CASE("TSRVF fields are tangent at the base and carry the step lengths") {
  const auto seq = sequence(20, 4);
  const auto f = compute_tsrvf(seq);
  REQUIRE(f.length() == 19);
  double worst_tangent = 0, worst_norm = 0;
  for (std::size_t t = 0; t < f.length(); ++t) {
    worst_tangent = std::max(worst_tangent, std::abs(inner(f.fields[t], f.base.values())));
    worst_norm = std::max(worst_norm, std::abs(l2_norm(f.fields[t]) - seq.step_distances[t]));
  }
  MESSAGE("tangency " << worst_tangent << " norm gap " << worst_norm);
  CHECK(worst_tangent < 1e-6);
  CHECK(worst_norm < 1e-5);
}

TEST_CASE("compute_tsrvf rejects short and antipodal input") {
  const auto q = Shape::from_contour(blob(300), 60);
  CHECK_THROWS_AS(compute_tsrvf(std::vector<Shape>{q}), Error);
  const std::vector<Shape> bad{q, q, Shape(-q.values())};
  try {
    compute_tsrvf(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("frame 2") != std::string::npos);
  }
}

TEST_CASE("integrate_tsrvf forms cumulative sums") {
  const auto f = compute_tsrvf(sequence(8, 5));
  const auto h = integrate_tsrvf(f);
  REQUIRE(h.length() == f.length());
  CHECK(max_abs(h.fields[0] - f.fields[0]) == 0.0);
  for (std::size_t t = 1; t < h.length(); ++t) CHECK(max_abs((h.fields[t] - h.fields[t - 1]) - f.fields[t]) < 1e-15);

  TsrvfSequence zero{f.base, std::vector<Field>(3, Field::Zero(2, f.base.size()))};
  for (const auto& v : integrate_tsrvf(zero).fields) CHECK(max_abs(v) == 0.0);
}

TEST_CASE("reconstruct_sequence inverts compute_tsrvf") {
  SUBCASE("zero fields give a constant path") {
    const auto q = Shape::from_contour(blob(300), 64);
    const auto frames = reconstruct_sequence({q, std::vector<Field>(4, Field::Zero(2, 64))});
    REQUIRE(frames.size() == 5);
    for (const auto& s : frames) CHECK(max_abs(s.values() - q.values()) < 1e-15);
  }
  SUBCASE("two frames") {
    const auto seq = sequence(2, 6);
    const auto frames = reconstruct_sequence(compute_tsrvf(seq));
    CHECK(sphere_distance(frames[1], seq.frames[1]) < 1e-8);
  }
  SUBCASE("fifty frames") {
    const auto seq = sequence(50, 7);
    const auto frames = reconstruct_sequence(compute_tsrvf(seq));
    REQUIRE(frames.size() == 50);
    const auto d = frame_distances(frames, seq.frames, kFast);
    double exact = 0;
    for (std::size_t t = 0; t < frames.size(); ++t) exact = std::max(exact, sphere_distance(frames[t], seq.frames[t]));
    MESSAGE("max shape distance " << d.maxCoeff() << ", without alignment " << exact);
    CHECK(d.maxCoeff() < 1e-4);
    CHECK(exact < 1e-4);
  }
}

TEST_CASE("transport_fields and transport_to_reference preserve field geometry") {
  const auto a = compute_tsrvf(sequence(6, 8));
  const auto b = compute_tsrvf(sequence(6, 9));

  const auto same = transport_to_reference(a, a.base);
  for (std::size_t t = 0; t < a.length(); ++t) CHECK(max_abs(same.fields[t] - a.fields[t]) == 0.0);

  const auto moved = transport_to_reference(b, a.base, kFast);
  CHECK(max_abs(moved.base.values() - a.base.values()) == 0.0);
  for (std::size_t t = 0; t < b.length(); ++t) {
    CHECK(std::abs(inner(moved.fields[t], a.base.values())) < 1e-9);
    // Alignment applies a warp, so norms agree only to discretization accuracy.
    CHECK(l2_norm(moved.fields[t]) == doctest::Approx(l2_norm(b.fields[t])).epsilon(0.05));
  }

  const auto there = transport_fields(a, b.base);
  const auto back = transport_fields(there, a.base);
  for (std::size_t t = 0; t < a.length(); ++t) {
    CHECK(std::abs(l2_norm(there.fields[t]) - l2_norm(a.fields[t])) < 1e-10);
    CHECK(max_abs(back.fields[t] - a.fields[t]) < 1e-10);
  }
}

TEST_CASE("fit_pca recovers an exact two-plane") {
  const auto base = Shape::from_contour(blob(300), 40);
  std::mt19937_64 rng(10);
  Field e1 = random_tangent(base, rng), e2 = random_tangent(base, rng), m = random_tangent(base, rng);
  std::normal_distribution<double> g(0, 1);
  TsrvfSequence a{base, {}}, b{base, {}};
  for (int i = 0; i < 25; ++i) {
    a.fields.push_back(m + g(rng) * e1 + g(rng) * e2);
    b.fields.push_back(m + 3 * g(rng) * e1 - g(rng) * e2);
  }
  const std::vector<TsrvfSequence> pool{a, b};
  const auto basis = fit_pca(pool, 2);
  CHECK(basis.dim() == 2);
  CHECK(basis.eigenvalues(0) >= basis.eigenvalues(1));
  CHECK(std::abs(inner(basis.components[0], basis.components[1])) < 1e-8);
  CHECK(std::abs(l2_norm(basis.components[0]) - 1) < 1e-8);
  for (const auto& s : pool) {
    const auto back = lift(project(s, basis).values, basis);
    for (std::size_t t = 0; t < s.length(); ++t) CHECK(max_abs(back.fields[t] - s.fields[t]) < 1e-8);
  }
  CHECK_THROWS_AS(fit_pca(pool, 3), Error);
}

TEST_CASE("fit_pca eigenvalues match a dense covariance at N = 16") {
  const auto base = Shape::from_contour(blob(300), 16);
  std::mt19937_64 rng(11);
  TsrvfSequence s{base, {}};
  for (int i = 0; i < 30; ++i) s.fields.push_back(random_tangent(base, rng) * (1 + 0.1 * i));

  // Oracle: explicit covariance in the coordinates f_jk / sqrt(N), which make
  // the Euclidean dot product equal the L2 inner product.
  const int dim = 32;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  std::vector<Eigen::VectorXd> x;
  for (const auto& f : s.fields) {
    Eigen::VectorXd v(dim);
    for (int k = 0; k < 16; ++k) {
      v(2 * k) = f(0, k) / 4.0;
      v(2 * k + 1) = f(1, k) / 4.0;
    }
    mean += v / 30.0;
    x.push_back(v);
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& v : x)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) cov(i, j) += (v(i) - mean(i)) * (v(j) - mean(j)) / 29.0;
  const Eigen::VectorXcd oracle_c = Eigen::EigenSolver<Eigen::MatrixXd>(cov).eigenvalues();
  std::vector<double> oracle;
  for (Eigen::Index i = 0; i < oracle_c.size(); ++i) oracle.push_back(oracle_c(i).real());
  std::sort(oracle.rbegin(), oracle.rend());

  const std::vector<TsrvfSequence> pool{s};
  const auto basis = fit_pca(pool, 20);
  for (int i = 0; i < 20; ++i) CHECK(std::abs(basis.eigenvalues(i) - oracle[static_cast<std::size_t>(i)]) < 1e-8);
  CHECK(std::abs(basis.total_variance - cov.trace()) < 1e-8);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j <= i; ++j)
      CHECK(std::abs(inner(basis.components[static_cast<std::size_t>(i)],
                           basis.components[static_cast<std::size_t>(j)]) - (i == j)) < 1e-8);
}

TEST_CASE("fit_pca energy: eigenvalues at full rank sum to the total variance") {
  const auto f = compute_tsrvf(sequence(25, 12, 40));
  const std::vector<TsrvfSequence> pool{f};
  const auto basis = fit_pca(pool, 23);  // 24 fields, rank 23 after centering
  CHECK(std::abs(basis.eigenvalues.sum() - basis.total_variance) < 1e-8 * std::max(1.0, basis.total_variance));
  CHECK_THROWS_AS(fit_pca(pool, 24), Error);
}

TEST_CASE("fit_pca on isotropic noise explains about one coordinate's worth") {
  const auto base = Shape::from_contour(blob(300), 16);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0, 1);
  TsrvfSequence s{base, {}};
  for (int i = 0; i < 10000; ++i) {
    Field f(2, 16);
    for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] = g(rng) * 4.0;
    s.fields.push_back(f);
  }
  const std::vector<TsrvfSequence> pool{s};
  const auto basis = fit_pca(pool, 1);
  const double fraction = basis.eigenvalues(0) / basis.total_variance;
  // Largest sample eigenvalue of white noise sits near (1 + sqrt(p/n))^2.
  const double expected = std::pow(1 + std::sqrt(32.0 / 10000.0), 2) / 32.0;
  MESSAGE("fraction " << fraction << " expected " << expected);
  CHECK(fraction == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("fit_pca requires a common base and positive dimension") {
  const auto a = compute_tsrvf(sequence(5, 14, 40));
  const auto b = compute_tsrvf(sequence(5, 15, 40));
  CHECK_THROWS_AS(fit_pca(std::vector<TsrvfSequence>{a, b}, 1), Error);
  CHECK_THROWS_AS(fit_pca(std::vector<TsrvfSequence>{a}, 0), Error);
  CHECK_THROWS_AS(fit_pca(std::vector<TsrvfSequence>{}, 1), Error);
}

TEST_CASE("project and lift") {
  const auto f = compute_tsrvf(sequence(30, 16, 60));
  const std::vector<TsrvfSequence> pool{f};
  const auto basis = fit_pca(pool, 6);

  TsrvfSequence at_mean{f.base, std::vector<Field>(3, basis.mean)};
  CHECK(project(at_mean, basis).values.cwiseAbs().maxCoeff() < 1e-12);

  TsrvfSequence shifted{f.base, {Field(basis.mean + 2 * basis.components[0])}};
  Eigen::RowVectorXd expected = Eigen::RowVectorXd::Zero(6);
  expected(0) = 2;
  CHECK((project(shifted, basis).values - expected).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0, 1);
  Eigen::MatrixXd x(7, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  CHECK((project(lift(x, basis), basis).values - x).cwiseAbs().maxCoeff() < 1e-10);

  for (const auto& v : lift(Eigen::MatrixXd::Zero(2, 6), basis).fields) CHECK(max_abs(v - basis.mean) < 1e-12);

  // Residual of lift(project(F)) is F's component outside the affine span.
  const auto back = lift(project(f, basis).values, basis);
  for (std::size_t t = 0; t < f.length(); ++t) {
    Field out = f.fields[t] - basis.mean;
    for (const auto& c : basis.components) out -= inner(out, c) * c;
    CHECK(std::abs(l2_norm(f.fields[t] - back.fields[t]) - l2_norm(out)) < 1e-10);
  }

  CHECK_THROWS_AS(lift(Eigen::MatrixXd::Zero(2, 5), basis), Error);
  const auto other = compute_tsrvf(sequence(5, 18, 40));
  CHECK_THROWS_AS(project(other, basis), Error);
  const auto elsewhere = compute_tsrvf(sequence(5, 19, 60));
  CHECK_THROWS_AS(project(elsewhere, basis), Error);
}

TEST_CASE("full-rank pipeline roundtrip reproduces the sequence") {
  const auto seq = sequence(30, 20, 60);
  const auto f = compute_tsrvf(seq);
  const std::vector<TsrvfSequence> pool{f};
  const auto basis = fit_pca(pool, 28);
  const auto frames = reconstruct_sequence(lift(project(f, basis).values, basis));
  const auto d = frame_distances(frames, seq.frames, kFast);
  MESSAGE("max frame distance " << d.maxCoeff());
  CHECK(d.maxCoeff() < 5e-3);
}

TEST_CASE("held-out reconstruction improves with the PCA dimension") {
  std::vector<ShapeSequence> train;
  for (std::uint64_t s = 30; s < 36; ++s) train.push_back(sequence(40, s, 60));
  const Shape& reference = train.front().frames.front();
  std::vector<TsrvfSequence> pooled;
  for (const auto& s : train) pooled.push_back(transport_to_reference(compute_tsrvf(s), reference, kFast));

  const auto held = sequence(40, 99, 60);
  const auto own = compute_tsrvf(held);
  const auto at_ref = transport_to_reference(own, reference, kFast);
  const Shape own_base = align_reparam(reference, own.base, kFast).aligned;

  std::vector<Eigen::VectorXd> errors;
  for (int d : {1, 2, 5, 10, 20}) {
    const auto basis = fit_pca(pooled, d);
    const auto lifted = transport_fields(lift(project(at_ref, basis).values, basis), own_base);
    errors.push_back(frame_distances(reconstruct_sequence(lifted), held.frames, kFast));
    MESSAGE("d=" << d << " mean error " << errors.back().mean());
  }
  for (std::size_t i = 1; i < errors.size(); ++i) CHECK(errors[i].mean() <= errors[i - 1].mean());
  const Eigen::Index better = ((errors[3] - errors[0]).array() < 0).count();
  CHECK(double(better) >= 0.9 * double(errors[0].size() - 1));
}
