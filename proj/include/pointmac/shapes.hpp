#pragma once

#include <string>
#include <vector>

#include "pointmac/point_cloud.hpp"

namespace pointmac {

enum class ShapeFamily { kSphere, kBox, kCylinder, kTorus, kComposite };

std::string shape_family_str(ShapeFamily f);
ShapeFamily shape_family_from_str(const std::string& s);

// Family-specific parameters (empty -> per-family defaults):
//   sphere:    {radius}
//   box:       {half_x, half_y, half_z}
//   cylinder:  {radius, half_height}
//   torus:     {major_radius, minor_radius}
//   composite: {} (fixed arrangement of box + bridge + sphere)
struct ShapeSpec {
  ShapeFamily family = ShapeFamily::kSphere;
  std::vector<double> params;
  int point_budget = 1024;
  std::uint64_t seed = 0;
};

// Surface-samples the shape. The output is already normalized: centered at
// the origin with the longest axis spanning exactly [-0.5, 0.5] analytically
// (no data-dependent rescale), and carries identity normalization metadata.
PointCloud generate_complete(const ShapeSpec& spec);

}  // namespace pointmac
