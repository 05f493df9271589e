#include "pointmac/fps.hpp"

#include <algorithm>
#include <limits>

#include "pointmac/rng.hpp"

namespace pointmac {

std::vector<int> farthest_point_indices_from(const Points& pts, int n,
                                             int start) {
  const int count = static_cast<int>(pts.rows());
  if (n < 1 || n > count) {
    throw std::invalid_argument("fps: need 1 <= n <= point count");
  }
  if (start < 0 || start >= count) {
    throw std::invalid_argument("fps: start index out of range");
  }
  std::vector<int> selected;
  selected.reserve(n);
  selected.push_back(start);

  std::vector<double> min_sq(count, std::numeric_limits<double>::infinity());
  min_sq[start] = -1.0;  // never re-selected
  for (int step = 1; step < n; ++step) {
    const Eigen::RowVector3d last = pts.row(selected.back());
    int best = -1;
    double best_sq = -1.0;
    for (int i = 0; i < count; ++i) {
      double d = (pts.row(i) - last).squaredNorm();
      if (d < min_sq[i]) min_sq[i] = d;
      // strict > keeps the lowest index on ties
      if (min_sq[i] > best_sq) {
        best_sq = min_sq[i];
        best = i;
      }
    }
    selected.push_back(best);
    min_sq[best] = -1.0;  // never re-selected
  }
  return selected;
}

std::vector<int> farthest_point_indices(const Points& pts, int n,
                                        std::uint64_t seed) {
  const int count = static_cast<int>(pts.rows());
  if (count < 1) throw std::invalid_argument("fps: empty cloud");
  if (n < 1 || n > count) {
    throw std::invalid_argument("fps: need 1 <= n <= point count");
  }
  Rng rng(seed);
  return farthest_point_indices_from(pts, n, rng.uniform_int(0, count - 1));
}

PointCloud farthest_point_sampling(const PointCloud& p, int n,
                                   std::uint64_t seed) {
  require_nonempty(p, "fps");
  auto idx = farthest_point_indices(p.points, n, seed);
  PointCloud out;
  out.points.resize(n, 3);
  for (int i = 0; i < n; ++i) out.points.row(i) = p.points.row(idx[i]);
  out.normalization = p.normalization;
  return out;
}

std::vector<int> farthest_point_indices_canonical(const Points& pts, int n) {
  const int count = static_cast<int>(pts.rows());
  if (count < 1) throw std::invalid_argument("fps: empty cloud");
  if (n < 1 || n > count) {
    throw std::invalid_argument("fps: need 1 <= n <= point count");
  }
  // sort rows lexicographically; ties in the max-min sweep then resolve to
  // the lexicographically smallest position regardless of input order
  std::vector<int> order(count);
  for (int i = 0; i < count; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (int c = 0; c < 3; ++c) {
      if (pts(a, c) != pts(b, c)) return pts(a, c) < pts(b, c);
    }
    return a < b;
  });
  Points sorted(count, 3);
  for (int i = 0; i < count; ++i) sorted.row(i) = pts.row(order[i]);
  std::vector<int> picked = farthest_point_indices_from(sorted, n, 0);
  std::vector<int> out;
  out.reserve(n);
  for (int s : picked) out.push_back(order[s]);
  return out;
}

int lexicographic_min_index(const Points& pts) {
  if (pts.rows() == 0) throw std::invalid_argument("lex min: empty cloud");
  int best = 0;
  for (int i = 1; i < pts.rows(); ++i) {
    for (int c = 0; c < 3; ++c) {
      if (pts(i, c) < pts(best, c)) {
        best = i;
        break;
      }
      if (pts(i, c) > pts(best, c)) break;
    }
  }
  return best;
}

}  // namespace pointmac
