#include "pointmac/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pointmac/fps.hpp"
#include "pointmac/rng.hpp"

namespace pointmac {

void CorruptionSpec::validate() const {
  if (view_direction.norm() < 1e-12) {
    throw std::invalid_argument("corruption: view_direction must be nonzero");
  }
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) {
    throw std::invalid_argument("corruption: keep_ratio must be in (0, 1]");
  }
  if (noise_sigma_range.first < 0.0 ||
      noise_sigma_range.second < noise_sigma_range.first) {
    throw std::invalid_argument("corruption: bad noise_sigma_range");
  }
  if (!(clip_bound > 0.0)) {
    throw std::invalid_argument("corruption: clip_bound must be positive");
  }
  if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) {
    throw std::invalid_argument("corruption: mask_ratio must be in [0, 1)");
  }
}

PointCloud select_rows(const PointCloud& p, const std::vector<int>& indices) {
  PointCloud out;
  out.normalization = p.normalization;
  out.points.resize(static_cast<int>(indices.size()), 3);
  for (size_t i = 0; i < indices.size(); ++i) {
    out.points.row(static_cast<int>(i)) = p.points.row(indices[i]);
  }
  return out;
}

PointCloud occlude(const PointCloud& complete, const CorruptionSpec& corruption,
                   std::uint64_t /*seed*/) {
  corruption.validate();
  require_nonempty(complete, "occlude");
  const int n = complete.count();
  int keep = static_cast<int>(std::lround(corruption.keep_ratio * n));
  keep = std::clamp(keep, 1, n);
  if (keep == n) return complete;

  Eigen::Vector3d dir = corruption.view_direction.normalized();
  Eigen::VectorXd proj = complete.points * dir;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // keep the lowest projections; stable on ties via the index
  std::nth_element(order.begin(), order.begin() + keep, order.end(),
                   [&](int a, int b) {
                     if (proj[a] != proj[b]) return proj[a] < proj[b];
                     return a < b;
                   });
  std::vector<int> kept(order.begin(), order.begin() + keep);
  std::sort(kept.begin(), kept.end());
  return select_rows(complete, kept);
}

PointCloud inject_noise(const PointCloud& p, const CorruptionSpec& corruption,
                        std::uint64_t seed) {
  corruption.validate();
  require_nonempty(p, "inject_noise");
  PointCloud out = p;
  Rng rng(derive_seed(seed, "noise"));
  const auto [lo, hi] = corruption.noise_sigma_range;
  for (int i = 0; i < out.count(); ++i) {
    double sigma = (lo == hi) ? lo : rng.uniform(lo, hi);
    for (int a = 0; a < 3; ++a) {
      double d = sigma == 0.0 ? 0.0 : rng.normal(0.0, sigma);
      d = std::clamp(d, -corruption.clip_bound, corruption.clip_bound);
      out.points(i, a) += d;
    }
  }
  return out;
}

SpatialMaskResult spatial_mask_patches(const PointCloud& p, double mask_ratio,
                                       std::uint64_t seed, int patch_size) {
  if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) {
    throw std::invalid_argument("spatial_mask: mask_ratio must be in [0, 1)");
  }
  if (patch_size <= 0) {
    throw std::invalid_argument("spatial_mask: patch_size must be positive");
  }
  require_nonempty(p, "spatial_mask");

  const int n = p.count();
  SpatialMaskResult res;
  int n_patches =
      static_cast<int>(std::lround(mask_ratio * n / patch_size));
  // never mask everything
  n_patches = std::min(n_patches, (n - 1) / patch_size);
  if (n_patches <= 0) {
    res.visible_indices.resize(n);
    std::iota(res.visible_indices.begin(), res.visible_indices.end(), 0);
    return res;
  }

  std::vector<int> centers =
      farthest_point_indices(p.points, n_patches, derive_seed(seed, "mask"));

  std::vector<char> claimed(n, 0);
  for (int c : centers) {
    Eigen::RowVector3d center = p.points.row(c);
    std::vector<std::pair<double, int>> dist;
    dist.reserve(n);
    for (int i = 0; i < n; ++i) {
      if (claimed[i]) continue;
      dist.emplace_back((p.points.row(i) - center).squaredNorm(), i);
    }
    int take = std::min<int>(patch_size, static_cast<int>(dist.size()));
    std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
    std::vector<int> members;
    members.reserve(take);
    for (int k = 0; k < take; ++k) {
      claimed[dist[k].second] = 1;
      members.push_back(dist[k].second);
    }
    std::sort(members.begin(), members.end());
    res.patch_members.push_back(std::move(members));
  }

  for (int i = 0; i < n; ++i) {
    (claimed[i] ? res.masked_indices : res.visible_indices).push_back(i);
  }
  return res;
}

std::pair<PointCloud, PointCloud> spatial_mask(const PointCloud& p,
                                               double mask_ratio,
                                               std::uint64_t seed) {
  SpatialMaskResult res = spatial_mask_patches(p, mask_ratio, seed);
  return {select_rows(p, res.visible_indices),
          select_rows(p, res.masked_indices)};
}

PointCloud make_partial(const PointCloud& complete,
                        const CorruptionSpec& corruption, std::uint64_t seed) {
  PointCloud occluded = occlude(complete, corruption, derive_seed(seed, "occ"));
  return inject_noise(occluded, corruption, derive_seed(seed, "nz"));
}

}  // namespace pointmac
