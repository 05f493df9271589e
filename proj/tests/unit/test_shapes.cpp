#include <cmath>

#include "doctest.h"
#include "pointmac/shapes.hpp"
#include "test_support.hpp"

using namespace pointmac;

namespace {

ShapeSpec spec_of(ShapeFamily f, std::uint64_t seed = 0, int budget = 1024) {
  ShapeSpec s;
  s.family = f;
  s.point_budget = budget;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("every family fills its point budget inside the unit cube") {
  for (ShapeFamily f : {ShapeFamily::kSphere, ShapeFamily::kBox,
                        ShapeFamily::kCylinder, ShapeFamily::kTorus,
                        ShapeFamily::kComposite}) {
    CAPTURE(shape_family_str(f));
    PointCloud c = generate_complete(spec_of(f, 3, 777));
    CHECK(c.count() == 777);
    CHECK(c.points.cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
    CHECK(c.normalization.scale == 1.0);  // canonical frame, identity metadata
    CHECK(c.normalization.center.norm() == 0.0);
  }
}

TEST_CASE("default sphere samples lie exactly on the half-unit sphere") {
  PointCloud c = generate_complete(spec_of(ShapeFamily::kSphere, 1));
  for (int i = 0; i < c.count(); ++i) {
    CHECK(c.point(i).norm() == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("default box samples sit on a face of the scaled box") {
  // defaults {1.0, 0.7, 0.4} scaled by 0.5 -> half extents {0.5, 0.35, 0.2}
  PointCloud c = generate_complete(spec_of(ShapeFamily::kBox, 2));
  const double hx = 0.5, hy = 0.35, hz = 0.2;
  for (int i = 0; i < c.count(); ++i) {
    Eigen::Vector3d p = c.point(i);
    CHECK(std::abs(p.x()) <= hx + 1e-12);
    CHECK(std::abs(p.y()) <= hy + 1e-12);
    CHECK(std::abs(p.z()) <= hz + 1e-12);
    bool on_face = std::abs(std::abs(p.x()) - hx) < 1e-12 ||
                   std::abs(std::abs(p.y()) - hy) < 1e-12 ||
                   std::abs(std::abs(p.z()) - hz) < 1e-12;
    CHECK(on_face);
  }
}

TEST_CASE("default cylinder samples lie on the wall or a cap") {
  // defaults {0.5, 1.0} scaled by 0.5 -> radius 0.25, half height 0.5
  PointCloud c = generate_complete(spec_of(ShapeFamily::kCylinder, 3));
  int caps = 0;
  for (int i = 0; i < c.count(); ++i) {
    Eigen::Vector3d p = c.point(i);
    double rho = std::hypot(p.x(), p.y());
    bool on_wall = std::abs(rho - 0.25) < 1e-12;
    bool on_cap = std::abs(std::abs(p.z()) - 0.5) < 1e-12 && rho <= 0.25 + 1e-12;
    CHECK((on_wall || on_cap));
    caps += on_cap ? 1 : 0;
  }
  // cap share of the area: 2*pi*r^2 / (2*pi*r^2 + 2*pi*r*2h) = r/(r+2h)
  double expect = 0.25 / (0.25 + 2 * 0.5);
  CHECK(static_cast<double>(caps) / c.count() ==
        doctest::Approx(expect).epsilon(0.25));
}

TEST_CASE("default torus samples keep the tube radius") {
  // defaults {1.0, 0.35} scaled by 0.5/1.35
  PointCloud c = generate_complete(spec_of(ShapeFamily::kTorus, 4));
  const double major = 1.0 / 2.7, minor = 0.35 / 2.7;
  for (int i = 0; i < c.count(); ++i) {
    Eigen::Vector3d p = c.point(i);
    double ring = std::hypot(p.x(), p.y()) - major;
    CHECK(std::hypot(ring, p.z()) == doctest::Approx(minor).epsilon(1e-9));
  }
}

TEST_CASE("generation is a pure function of the spec") {
  PointCloud a = generate_complete(spec_of(ShapeFamily::kComposite, 9));
  PointCloud b = generate_complete(spec_of(ShapeFamily::kComposite, 9));
  CHECK(a.points == b.points);

  PointCloud other = generate_complete(spec_of(ShapeFamily::kComposite, 10));
  CHECK(a.points != other.points);
}

TEST_CASE("explicit parameters override the defaults") {
  ShapeSpec s = spec_of(ShapeFamily::kSphere, 5, 256);
  s.params = {2.0};  // still normalizes to half-unit radius
  PointCloud c = generate_complete(s);
  CHECK(c.point(0).norm() == doctest::Approx(0.5).epsilon(1e-12));

  ShapeSpec box = spec_of(ShapeFamily::kBox, 5, 256);
  box.params = {1.0, 1.0, 1.0};  // cube: every axis reaches the cube faces
  PointCloud bc = generate_complete(box);
  CHECK(bc.points.cwiseAbs().rowwise().maxCoeff().minCoeff() ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("invalid specs are rejected") {
  ShapeSpec tiny = spec_of(ShapeFamily::kSphere, 0, 32);
  CHECK_THROWS_AS(generate_complete(tiny), std::invalid_argument);

  ShapeSpec bad = spec_of(ShapeFamily::kSphere);
  bad.params = {-1.0};
  CHECK_THROWS_AS(generate_complete(bad), std::invalid_argument);

  ShapeSpec fat_torus = spec_of(ShapeFamily::kTorus);
  fat_torus.params = {0.3, 0.4};  // minor >= major
  CHECK_THROWS_AS(generate_complete(fat_torus), std::invalid_argument);

  ShapeSpec extra = spec_of(ShapeFamily::kComposite);
  extra.params = {1.0};
  CHECK_THROWS_AS(generate_complete(extra), std::invalid_argument);
}

TEST_CASE("family names round-trip and reject junk") {
  for (ShapeFamily f : {ShapeFamily::kSphere, ShapeFamily::kBox,
                        ShapeFamily::kCylinder, ShapeFamily::kTorus,
                        ShapeFamily::kComposite}) {
    CHECK(shape_family_from_str(shape_family_str(f)) == f);
  }
  CHECK_THROWS_AS(shape_family_from_str("dodecahedron"), std::invalid_argument);
}
