#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

namespace pointmac {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Transform that was applied to bring a cloud into the unit cube:
// q = (p - center) / scale.
struct Normalization {
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  double scale = 1.0;
};

// Ordered list of 3D points plus the normalization metadata. The universal
// value type shared by the data generators, the model and the metrics.
struct PointCloud {
  Points points;
  Normalization normalization;

  PointCloud() = default;
  explicit PointCloud(Points p) : points(std::move(p)) {}

  int count() const { return static_cast<int>(points.rows()); }
  bool empty() const { return points.rows() == 0; }

  Eigen::Vector3d point(int i) const { return points.row(i).transpose(); }
};

// Maps the bounding box of `p` into [-0.5, 0.5]^3 (uniform scale on the
// longest extent) and records the transform. Degenerate clouds (single
// point) get scale 1.
PointCloud normalized(const PointCloud& p);

// Inverts the recorded normalization.
PointCloud denormalized(const PointCloud& p);

void require_nonempty(const PointCloud& p, const char* what);

}  // namespace pointmac
