#include "pointmac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pointmac {

std::string metric_name_str(MetricName n) {
  switch (n) {
    case MetricName::kCdL1: return "cd_l1";
    case MetricName::kCdL2: return "cd_l2";
    case MetricName::kFScore: return "fscore";
    case MetricName::kFidelity: return "fidelity";
    case MetricName::kMmd: return "mmd";
  }
  return "unknown";
}

NearestNeighborIndex::NearestNeighborIndex(const Points& pts) : points_(pts) {
  const int n = static_cast<int>(points_.rows());
  if (n == 0) throw std::invalid_argument("nn index: empty point set");

  Eigen::Vector3d lo = points_.colwise().minCoeff().transpose();
  Eigen::Vector3d hi = points_.colwise().maxCoeff().transpose();
  double extent = std::max((hi - lo).maxCoeff(), 1e-12);

  // aim for a handful of points per cell
  int res = std::max(1, static_cast<int>(std::cbrt(n / 2.0)));
  res = std::min(res, 64);
  cell_ = extent / res;
  origin_ = lo;
  for (int c = 0; c < 3; ++c) {
    double span = hi[c] - lo[c];
    dims_[c] = std::max(1, static_cast<int>(std::floor(span / cell_)) + 1);
  }
  cells_.assign(static_cast<size_t>(dims_[0]) * dims_[1] * dims_[2], {});
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d p = points_.row(i).transpose();
    auto c = clamp_cell(p);
    cells_[cell_of(c[0], c[1], c[2])].push_back(i);
  }
}

std::array<int, 3> NearestNeighborIndex::clamp_cell(
    const Eigen::Vector3d& q) const {
  std::array<int, 3> c;
  for (int a = 0; a < 3; ++a) {
    int idx = static_cast<int>(std::floor((q[a] - origin_[a]) / cell_));
    c[a] = std::clamp(idx, 0, dims_[a] - 1);
  }
  return c;
}

void NearestNeighborIndex::scan_cell(int cx, int cy, int cz,
                                     const Eigen::Vector3d& q, int& best,
                                     double& best_sq) const {
  for (int i : cells_[cell_of(cx, cy, cz)]) {
    double d = (points_.row(i).transpose() - q).squaredNorm();
    if (d < best_sq || (d == best_sq && i < best)) {
      best_sq = d;
      best = i;
    }
  }
}

std::pair<int, double> NearestNeighborIndex::nearest(
    const Eigen::Vector3d& q) const {
  const auto c0 = clamp_cell(q);
  int best = std::numeric_limits<int>::max();
  double best_sq = std::numeric_limits<double>::infinity();

  const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  for (int r = 0; r <= max_ring; ++r) {
    bool any_cell = false;
    for (int dz = -r; dz <= r; ++dz) {
      int cz = c0[2] + dz;
      if (cz < 0 || cz >= dims_[2]) continue;
      for (int dy = -r; dy <= r; ++dy) {
        int cy = c0[1] + dy;
        if (cy < 0 || cy >= dims_[1]) continue;
        for (int dx = -r; dx <= r; ++dx) {
          // shell only: at least one offset at magnitude r
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r)
            continue;
          int cx = c0[0] + dx;
          if (cx < 0 || cx >= dims_[0]) continue;
          any_cell = true;
          // prune cells whose box cannot beat the current best
          Eigen::Vector3d bmin = origin_;
          bmin += Eigen::Vector3d(cx * cell_, cy * cell_, cz * cell_);
          Eigen::Vector3d bmax = bmin + Eigen::Vector3d(cell_, cell_, cell_);
          double dsq = 0.0;
          for (int a = 0; a < 3; ++a) {
            double d = std::max({bmin[a] - q[a], q[a] - bmax[a], 0.0});
            dsq += d * d;
          }
          if (dsq > best_sq) continue;
          scan_cell(cx, cy, cz, q, best, best_sq);
        }
      }
    }
    if (best >= 0 && best_sq < std::numeric_limits<double>::infinity()) {
      // box of cells [c0-r, c0+r]: if q sits inside it with margin beyond
      // the best distance, no farther ring can contain a closer point
      double margin = std::numeric_limits<double>::infinity();
      bool inside = true;
      for (int a = 0; a < 3; ++a) {
        double lo = origin_[a] + std::max(0, c0[a] - r) * cell_;
        double hi = origin_[a] + (std::min(dims_[a] - 1, c0[a] + r) + 1) * cell_;
        bool clipped_lo = (c0[a] - r) >= 0;
        bool clipped_hi = (c0[a] + r) <= dims_[a] - 1;
        if (clipped_lo) {
          if (q[a] < lo) inside = false;
          margin = std::min(margin, q[a] - lo);
        }
        if (clipped_hi) {
          if (q[a] > hi) inside = false;
          margin = std::min(margin, hi - q[a]);
        }
      }
      if (inside && margin >= 0.0 && margin * margin >= best_sq) break;
    }
    if (!any_cell && r > max_ring) break;
  }
  return {best, best_sq};
}

namespace {

double directed_sum_sq(const Points& from, const NearestNeighborIndex& to) {
  double sum = 0.0;
  for (int i = 0; i < from.rows(); ++i) {
    sum += to.nearest(from.row(i).transpose()).second;
  }
  return sum;
}

double directed_sum_euclid(const Points& from, const NearestNeighborIndex& to) {
  double sum = 0.0;
  for (int i = 0; i < from.rows(); ++i) {
    sum += std::sqrt(to.nearest(from.row(i).transpose()).second);
  }
  return sum;
}

}  // namespace

double chamfer_l2(const PointCloud& x, const PointCloud& y) {
  require_nonempty(x, "chamfer_l2");
  require_nonempty(y, "chamfer_l2");
  NearestNeighborIndex ix(x.points), iy(y.points);
  return directed_sum_sq(x.points, iy) / x.count() +
         directed_sum_sq(y.points, ix) / y.count();
}

double chamfer_l1(const PointCloud& x, const PointCloud& y) {
  require_nonempty(x, "chamfer_l1");
  require_nonempty(y, "chamfer_l1");
  NearestNeighborIndex ix(x.points), iy(y.points);
  return directed_sum_euclid(x.points, iy) / x.count() +
         directed_sum_euclid(y.points, ix) / y.count();
}

double fscore(const PointCloud& pred, const PointCloud& gt, double threshold) {
  require_nonempty(pred, "fscore");
  require_nonempty(gt, "fscore");
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("fscore: threshold must be positive");
  }
  const double t_sq = threshold * threshold;
  NearestNeighborIndex ip(pred.points), ig(gt.points);
  int hit_pred = 0;
  for (int i = 0; i < pred.count(); ++i) {
    if (ig.nearest(pred.points.row(i).transpose()).second <= t_sq) ++hit_pred;
  }
  int hit_gt = 0;
  for (int i = 0; i < gt.count(); ++i) {
    if (ip.nearest(gt.points.row(i).transpose()).second <= t_sq) ++hit_gt;
  }
  double precision = static_cast<double>(hit_pred) / pred.count();
  double recall = static_cast<double>(hit_gt) / gt.count();
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double fidelity(const PointCloud& input, const PointCloud& pred) {
  require_nonempty(input, "fidelity");
  require_nonempty(pred, "fidelity");
  NearestNeighborIndex ip(pred.points);
  return directed_sum_euclid(input.points, ip) / input.count();
}

double mmd(const PointCloud& pred, const std::vector<PointCloud>& references) {
  require_nonempty(pred, "mmd");
  if (references.empty()) {
    throw std::invalid_argument("mmd: empty reference set");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ref : references) {
    best = std::min(best, chamfer_l2(pred, ref));
  }
  return best;
}

std::vector<std::pair<int, double>> nearest_neighbor_oracle(
    const PointCloud& x, const PointCloud& y) {
  require_nonempty(x, "nn oracle");
  require_nonempty(y, "nn oracle");
  std::vector<std::pair<int, double>> out;
  out.reserve(x.count());
  for (int i = 0; i < x.count(); ++i) {
    int best = -1;
    double best_sq = std::numeric_limits<double>::infinity();
    for (int j = 0; j < y.count(); ++j) {
      double d = (x.points.row(i) - y.points.row(j)).squaredNorm();
      if (d < best_sq) {
        best_sq = d;
        best = j;
      }
    }
    out.emplace_back(best, best_sq);
  }
  return out;
}

Points chamfer_l2_grad_x(const PointCloud& x, const PointCloud& y) {
  require_nonempty(x, "chamfer grad");
  require_nonempty(y, "chamfer grad");
  NearestNeighborIndex ix(x.points), iy(y.points);
  Points grad = Points::Zero(x.count(), 3);
  const double inv_x = 1.0 / x.count();
  const double inv_y = 1.0 / y.count();
  for (int i = 0; i < x.count(); ++i) {
    auto [j, d] = iy.nearest(x.points.row(i).transpose());
    grad.row(i) += 2.0 * inv_x * (x.points.row(i) - y.points.row(j));
  }
  for (int j = 0; j < y.count(); ++j) {
    auto [i, d] = ix.nearest(y.points.row(j).transpose());
    grad.row(i) += 2.0 * inv_y * (x.points.row(i) - y.points.row(j));
  }
  return grad;
}

}  // namespace pointmac
