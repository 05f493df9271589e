#include "doctest.h"
#include "pointmac/point_cloud.hpp"
#include "test_support.hpp"

using namespace pointmac;

TEST_CASE("normalized maps the bounding box into the unit cube") {
  Points p(4, 3);
  p << 1.0, 2.0, 3.0,  //
      5.0, 2.0, 3.0,   //
      1.0, 4.0, 3.0,   //
      5.0, 4.0, 3.5;
  PointCloud n = normalized(PointCloud(p));

  // longest extent is x (4 units) -> scale 4, centered at the box middle
  CHECK(n.normalization.scale == doctest::Approx(4.0));
  CHECK(n.normalization.center.x() == doctest::Approx(3.0));
  CHECK(n.normalization.center.y() == doctest::Approx(3.0));
  CHECK(n.normalization.center.z() == doctest::Approx(3.25));

  CHECK(n.points.col(0).minCoeff() == doctest::Approx(-0.5));
  CHECK(n.points.col(0).maxCoeff() == doctest::Approx(0.5));
  // shorter axes stay inside the cube
  CHECK(n.points.cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
}

TEST_CASE("denormalized inverts the recorded transform") {
  PointCloud orig = test::random_cloud(64, 7, 3.0);
  orig.points.col(1).array() += 10.0;  // off-center
  PointCloud n = normalized(orig);
  PointCloud back = denormalized(n);
  CHECK((back.points - orig.points).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single-point cloud normalizes with scale 1") {
  Points p(1, 3);
  p << 2.0, -1.0, 0.5;
  PointCloud n = normalized(PointCloud(p));
  CHECK(n.normalization.scale == 1.0);
  CHECK(n.points.row(0).norm() == doctest::Approx(0.0));
}

TEST_CASE("require_nonempty rejects empty clouds") {
  PointCloud empty;
  CHECK_THROWS_AS(require_nonempty(empty, "test"), std::invalid_argument);
  PointCloud one(Points::Zero(1, 3));
  CHECK_NOTHROW(require_nonempty(one, "test"));
}
