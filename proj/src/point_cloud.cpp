#include "pointmac/point_cloud.hpp"

namespace pointmac {

PointCloud normalized(const PointCloud& p) {
  require_nonempty(p, "normalize");
  Eigen::Vector3d lo = p.points.colwise().minCoeff().transpose();
  Eigen::Vector3d hi = p.points.colwise().maxCoeff().transpose();
  Eigen::Vector3d center = 0.5 * (lo + hi);
  double extent = (hi - lo).maxCoeff();
  double scale = extent > 0.0 ? extent : 1.0;

  PointCloud out;
  out.points = p.points;
  out.points.rowwise() -= center.transpose();
  out.points /= scale;
  out.normalization.center = center;
  out.normalization.scale = scale;
  return out;
}

PointCloud denormalized(const PointCloud& p) {
  require_nonempty(p, "denormalize");
  PointCloud out;
  out.points = p.points * p.normalization.scale;
  out.points.rowwise() += p.normalization.center.transpose();
  out.normalization = Normalization{};
  return out;
}

void require_nonempty(const PointCloud& p, const char* what) {
  if (p.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty point cloud");
  }
}

}  // namespace pointmac
