#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "pointmac/corruption.hpp"
#include "test_support.hpp"

using namespace pointmac;

TEST_CASE("occlusion keeps the low-projection half in original order") {
  PointCloud cloud = test::random_cloud(1000, 31);
  CorruptionSpec spec;
  spec.keep_ratio = 0.5;
  spec.view_direction = Eigen::Vector3d(0, 0, 1);

  PointCloud part = occlude(cloud, spec, 0);
  CHECK(part.count() == 500);

  // survivors are exactly the 500 smallest z values
  std::vector<double> z(cloud.points.col(2).data(),
                        cloud.points.col(2).data() + 1000);
  std::sort(z.begin(), z.end());
  double cutoff = z[499];
  for (int i = 0; i < part.count(); ++i) {
    CHECK(part.points(i, 2) <= cutoff + 1e-15);
  }

  // original relative order: each survivor appears later in the source
  int cursor = 0;
  for (int i = 0; i < part.count(); ++i) {
    while (cursor < 1000 && cloud.points.row(cursor) != part.points.row(i))
      ++cursor;
    CHECK(cursor < 1000);
  }
}

TEST_CASE("occlusion respects the view direction") {
  Points p(4, 3);
  p << 0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0;
  CorruptionSpec spec;
  spec.keep_ratio = 0.5;
  spec.view_direction = Eigen::Vector3d(1, 0, 0);
  PointCloud kept = occlude(PointCloud(p), spec, 0);
  REQUIRE(kept.count() == 2);
  CHECK(kept.points(0, 0) == 0.0);
  CHECK(kept.points(1, 0) == 1.0);

  spec.view_direction = Eigen::Vector3d(-1, 0, 0);  // opposite side survives
  PointCloud other = occlude(PointCloud(p), spec, 0);
  CHECK(other.points(0, 0) == 2.0);
  CHECK(other.points(1, 0) == 3.0);
}

TEST_CASE("occlusion always keeps at least one point") {
  PointCloud cloud = test::random_cloud(10, 32);
  CorruptionSpec spec;
  spec.keep_ratio = 0.01;
  CHECK(occlude(cloud, spec, 0).count() == 1);
  spec.keep_ratio = 1.0;
  CHECK(occlude(cloud, spec, 0).count() == 10);
}

TEST_CASE("noise displacement never exceeds the clip bound per axis") {
  PointCloud cloud = test::random_cloud(5000, 33);
  CorruptionSpec spec;
  spec.noise_sigma_range = {0.5, 0.5};  // huge sigma forces clipping
  spec.clip_bound = 0.02;
  PointCloud noisy = inject_noise(cloud, spec, 7);
  // (x + clamp(d)) - x can land one ulp past the bound; allow that much slack
  double max_shift = (noisy.points - cloud.points).cwiseAbs().maxCoeff();
  CHECK(max_shift <= 0.02 + 1e-15);
  // with sigma 0.5 essentially every draw hits the bound somewhere
  CHECK(max_shift > 0.02 - 1e-9);
}

TEST_CASE("noise displacements follow the requested sigma") {
  const int n = 100000;
  PointCloud cloud(Points::Zero(n, 3));
  CorruptionSpec spec;
  spec.noise_sigma_range = {0.003, 0.003};
  spec.clip_bound = 0.02;  // > 6 sigma: clipping is a non-event
  PointCloud noisy = inject_noise(cloud, spec, 11);
  for (int a = 0; a < 3; ++a) {
    double mean = noisy.points.col(a).mean();
    double var = (noisy.points.col(a).array() - mean).square().sum() / (n - 1);
    double sd = std::sqrt(var);
    CAPTURE(a);
    CHECK(sd > 0.0028);
    CHECK(sd < 0.0032);
    CHECK(std::abs(mean) < 1e-4);
  }
}

TEST_CASE("noise is deterministic in the seed") {
  PointCloud cloud = test::random_cloud(200, 34);
  CorruptionSpec spec;
  PointCloud a = inject_noise(cloud, spec, 5);
  PointCloud b = inject_noise(cloud, spec, 5);
  PointCloud c = inject_noise(cloud, spec, 6);
  CHECK(a.points == b.points);
  CHECK(a.points != c.points);
}

TEST_CASE("spatial mask removes whole patches with exact counts") {
  PointCloud cloud = test::random_cloud(1024, 35);
  SpatialMaskResult res = spatial_mask_patches(cloud, 0.4, 3);

  // round(0.4 * 1024 / 32) = 13 patches of 32 points
  CHECK(res.patch_members.size() == 13);
  CHECK(res.masked_indices.size() == 13 * 32);
  CHECK(res.visible_indices.size() == 1024 - 13 * 32);
  for (const auto& patch : res.patch_members) CHECK(patch.size() == 32);

  // visible + masked partition the input exactly
  std::set<int> all(res.visible_indices.begin(), res.visible_indices.end());
  all.insert(res.masked_indices.begin(), res.masked_indices.end());
  CHECK(all.size() == 1024);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 1023);

  CHECK(std::is_sorted(res.visible_indices.begin(), res.visible_indices.end()));
  CHECK(std::is_sorted(res.masked_indices.begin(), res.masked_indices.end()));
}

TEST_CASE("masked patches are spatially tight") {
  // patch members must be nearer their center than almost all other points:
  // check each member is within the patch's max radius and that patches are
  // disjoint
  PointCloud cloud = test::random_cloud(512, 36);
  SpatialMaskResult res = spatial_mask_patches(cloud, 0.25, 4);
  std::set<int> seen;
  for (const auto& patch : res.patch_members) {
    for (int idx : patch) {
      CHECK(seen.insert(idx).second);  // no index claimed twice
    }
  }
}

TEST_CASE("spatial mask never removes everything and can be a no-op") {
  PointCloud cloud = test::random_cloud(100, 37);
  // ratio 0.99 with patch 32: round(3.09)=3 patches but the cap (n-1)/32=3
  // still leaves points visible
  SpatialMaskResult res = spatial_mask_patches(cloud, 0.99, 5);
  CHECK(!res.visible_indices.empty());

  SpatialMaskResult none = spatial_mask_patches(cloud, 0.0, 5);
  CHECK(none.masked_indices.empty());
  CHECK(none.visible_indices.size() == 100);

  auto [vis, masked] = spatial_mask(cloud, 0.4, 5);
  CHECK(vis.count() + masked.count() == 100);
}

TEST_CASE("partial pipeline composes occlusion and bounded noise") {
  PointCloud cloud = test::random_cloud(400, 38);
  CorruptionSpec spec;
  spec.keep_ratio = 0.5;
  spec.noise_sigma_range = {0.001, 0.005};
  spec.clip_bound = 0.02;

  PointCloud part = make_partial(cloud, spec, 21);
  CHECK(part.count() == 200);
  // every partial point sits within the clip box of some source point
  for (int i = 0; i < part.count(); ++i) {
    double best = 1e9;
    for (int j = 0; j < cloud.count(); ++j) {
      best = std::min(
          best, (part.points.row(i) - cloud.points.row(j)).cwiseAbs().maxCoeff());
    }
    CHECK(best <= 0.02 + 1e-15);
  }
  PointCloud again = make_partial(cloud, spec, 21);
  CHECK(part.points == again.points);
}

TEST_CASE("corruption spec validation rejects bad fields") {
  CorruptionSpec ok;
  CHECK_NOTHROW(ok.validate());

  CorruptionSpec bad = ok;
  bad.keep_ratio = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.noise_sigma_range = {0.01, 0.001};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.clip_bound = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.mask_ratio = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.view_direction.setZero();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
