#pragma once

#include <utility>
#include <vector>

#include "pointmac/point_cloud.hpp"

namespace pointmac {

struct CorruptionSpec {
  Eigen::Vector3d view_direction{0.0, 0.0, 1.0};
  double keep_ratio = 0.5;
  std::pair<double, double> noise_sigma_range{0.001, 0.005};
  double clip_bound = 0.02;
  double mask_ratio = 0.4;

  void validate() const;  // throws std::invalid_argument
};

// Viewpoint half-space occlusion: drops the points with the largest
// projection onto view_direction so that round(keep_ratio * count) survive
// (at least one). Survivors keep their original order.
PointCloud occlude(const PointCloud& complete, const CorruptionSpec& corruption,
                   std::uint64_t seed);

// Per point: sigma_p ~ U(noise_sigma_range), then an independent zero-mean
// Gaussian offset per axis with that sigma, clipped to +/- clip_bound.
PointCloud inject_noise(const PointCloud& p, const CorruptionSpec& corruption,
                        std::uint64_t seed);

constexpr int kMaskPatchSize = 32;

struct SpatialMaskResult {
  std::vector<int> visible_indices;             // original order
  std::vector<int> masked_indices;              // original order
  std::vector<std::vector<int>> patch_members;  // one list per removed patch
};

// Region-level masking: round(mask_ratio * count / patch_size) patches are
// grown around farthest-point-sampled centers, each claiming its patch_size
// nearest still-unclaimed points. visible + masked partition the input.
SpatialMaskResult spatial_mask_patches(const PointCloud& p, double mask_ratio,
                                       std::uint64_t seed,
                                       int patch_size = kMaskPatchSize);

std::pair<PointCloud, PointCloud> spatial_mask(const PointCloud& p,
                                               double mask_ratio,
                                               std::uint64_t seed);

// occlude followed by inject_noise: the standard partial-view pipeline.
PointCloud make_partial(const PointCloud& complete,
                        const CorruptionSpec& corruption, std::uint64_t seed);

PointCloud select_rows(const PointCloud& p, const std::vector<int>& indices);

}  // namespace pointmac
