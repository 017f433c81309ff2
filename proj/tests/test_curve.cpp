#include <doctest.h>

#include <random>

#include "shapedyn/curve.hpp"
#include "test_support.hpp"

using namespace shapedyn;
using namespace shapedyn::testing;

TEST_CASE("resample_uniform places square samples at corners and edge midpoints") {
  ContourD square{Points(2, 4)};
  square.points << 0, 1, 1, 0,
                   0, 0, 1, 1;
  const auto out = resample_uniform(square, 8);
  Points expected(2, 8);
  expected << 0, 0.5, 1, 1, 1, 0.5, 0, 0,
              0, 0, 0, 0.5, 1, 1, 1, 0.5;
  CHECK((out.points - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("resample_uniform is idempotent on uniformly sampled contours") {
  const auto poly = circle(37, 2.5, 1, -1);  // regular polygon: equal chords
  const auto out = resample_uniform(poly, 37);
  CHECK((out.points - poly.points).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("resample_uniform preserves polyline length of a finely sampled ellipse") {
  const auto fine = ellipse(1000, 2, 1);
  const auto coarse = resample_uniform(fine, 100);
  CHECK(coarse.size() == 100);
  const double rel = std::abs(perimeter(coarse) - perimeter(fine)) / perimeter(fine);
  CHECK(rel < 0.005);
  CHECK((coarse.points.col(0) - fine.points.col(0)).norm() < 1e-12);
}

TEST_CASE("resample_uniform rejects degenerate input") {
  ContourD dot{Points::Zero(2, 5)};
  CHECK_THROWS_AS(resample_uniform(dot, 10), Error);
  ContourD two{Points(2, 4)};
  two.points << 0, 1, 0, 1,
                0, 1, 0, 1;
  CHECK_THROWS_AS(resample_uniform(two, 10), Error);
}

TEST_CASE("center_and_scale normalizes location and perimeter") {
  const auto c = circle(200, 1, 5, 5);
  const auto out = center_and_scale(c);
  CHECK(centroid(out).norm() < 1e-10);
  CHECK(std::abs(perimeter(out) - 1) < 1e-10);
  const double radius = out.points.colwise().norm().mean();
  CHECK(radius == doctest::Approx(1 / (2 * std::numbers::pi)).epsilon(1e-4));

  const auto again = center_and_scale(out);
  CHECK((again.points - out.points).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  ContourD poly{Points(2, 13)};
  for (Eigen::Index k = 0; k < 13; ++k) poly.points.col(k) << u(rng), u(rng);
  CHECK(std::abs(perimeter(center_and_scale(poly)) - 1) < 1e-10);

  CHECK_THROWS_AS(center_and_scale(ContourD{Points::Ones(2, 6)}), Error);
}

TEST_CASE("to_srvf of a unit-length circle is its unit tangent") {
  const auto c = normalize_contour(circle(100), 100);
  const auto q = to_srvf(c);
  double worst = 0;
  for (Eigen::Index k = 0; k < 100; ++k) {
    const double t = 2 * std::numbers::pi * double(k) / 100.0;
    worst = std::max(worst, (q.values.col(k) - Eigen::Vector2d(-std::sin(t), std::cos(t))).norm());
  }
  CHECK(worst < 1e-3);
  CHECK(std::sqrt(q.values.squaredNorm() / 100) == doctest::Approx(1).epsilon(1e-3));
}

TEST_CASE("to_srvf of a normalized 2:1 ellipse has unit L2 norm") {
  const auto c = normalize_contour(ellipse(400, 2, 1), 100);
  const auto q = to_srvf(c);
  CHECK(std::abs(std::sqrt(q.values.squaredNorm() / 100) - 1) < 1e-3);
}

TEST_CASE("to_srvf is translation invariant and rotation/reflection equivariant") {
  const auto c = normalize_contour(blob(300), 120);
  const auto q = to_srvf(c);

  ContourD moved{c.points};
  moved.points.row(0).array() += 3.25;
  moved.points.row(1).array() -= 1.5;
  CHECK((to_srvf(moved).values - q.values).cwiseAbs().maxCoeff() < 1e-12);

  const double a = 0.7;
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  CHECK((to_srvf(ContourD{r * c.points}).values - r * q.values).cwiseAbs().maxCoeff() < 1e-10);

  Eigen::Matrix2d flip = Eigen::Vector2d(1, -1).asDiagonal();
  CHECK((to_srvf(ContourD{flip * c.points}).values - flip * q.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("to_srvf rejects coincident samples") {
  ContourD c{Points(2, 4)};
  c.points << 0, 1, 0, 1,
              0, 0, 0, 0;
  CHECK_THROWS_AS(to_srvf(c), Error);
}

TEST_CASE("from_srvf reconstructs the circle and reports a small closure gap") {
  const auto c = normalize_contour(circle(200), 200);
  const auto back = from_srvf(to_srvf(c), Eigen::Vector2d(0, 0));
  const auto expected = ContourD{c.points.colwise() - c.points.col(0)};
  CHECK(hausdorff_distance(back.contour.points, expected.points) < 1e-3);
  CHECK(back.closure_gap < 1e-3);
}

TEST_CASE("from_srvf of the zero field is a single repeated point") {
  Srvf<double> zero{Points::Zero(2, 50)};
  const auto back = from_srvf(zero, Eigen::Vector2d(1, 2));
  CHECK((back.contour.points.colwise() - Eigen::Vector2d(1, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.closure_gap == 0.0);
}

namespace {

double roundtrip_error(const ContourD& raw, Eigen::Index n) {
  const auto c = normalize_contour(raw, n);
  const auto back = from_srvf(to_srvf(c), Eigen::Vector2d(c.points.col(0)));
  return hausdorff_distance(back.contour.points, c.points);
}

}  // namespace

TEST_CASE("SRVF roundtrip stays within 1e-3 at N = 200") {
  CHECK(roundtrip_error(circle(500), 200) < 1e-3);
  CHECK(roundtrip_error(ellipse(500, 2, 1), 200) < 1e-3);
  CHECK(roundtrip_error(blob(500), 200) < 1e-3);
  CHECK(roundtrip_error(blob(500, 0.1, 0.15, 0.4), 200) < 1e-3);
}

TEST_CASE("SRVF roundtrip error shrinks at least linearly with N") {
  const auto raw = blob(4000);
  for (Eigen::Index n : {50, 100, 200}) {
    const double ratio = roundtrip_error(raw, n) / roundtrip_error(raw, 2 * n);
    MESSAGE("N=" << n << " ratio=" << ratio);
    CHECK(ratio >= 1.5);
  }
}
