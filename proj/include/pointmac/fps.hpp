#pragma once

#include <cstdint>
#include <vector>

#include "pointmac/point_cloud.hpp"

namespace pointmac {

// Greedy max-min farthest point sampling. The first index is drawn
// uniformly from `seed`; each following pick maximizes the minimum distance
// to the already-selected set, ties broken by lowest input index.
std::vector<int> farthest_point_indices(const Points& pts, int n,
                                        std::uint64_t seed);
PointCloud farthest_point_sampling(const PointCloud& p, int n,
                                   std::uint64_t seed);

// Same greedy scheme with an explicit start index. Used by the encoder with
// a lexicographic start so centroid selection is permutation-invariant.
std::vector<int> farthest_point_indices_from(const Points& pts, int n,
                                             int start);

// Index of the lexicographically smallest point (x, then y, then z).
int lexicographic_min_index(const Points& pts);

// Order-independent farthest point selection: starts at the lexicographic
// minimum and breaks max-min distance ties by lexicographic position, so the
// selected coordinates depend only on the point multiset, not row order.
// Duplicated coordinates never displace a distinct position.
std::vector<int> farthest_point_indices_canonical(const Points& pts, int n);

}  // namespace pointmac
