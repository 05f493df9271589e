#include "pointmac/shapes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pointmac/rng.hpp"

namespace pointmac {

namespace {

constexpr double kPi = std::numbers::pi;

void check_budget(const ShapeSpec& spec) {
  if (spec.point_budget < 64) {
    throw std::invalid_argument("generate_complete: point_budget must be >= 64");
  }
}

std::vector<double> resolve_params(const ShapeSpec& spec) {
  std::vector<double> p = spec.params;
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("generate_complete: invalid " +
                                shape_family_str(spec.family) + " params: " +
                                why);
  };
  switch (spec.family) {
    case ShapeFamily::kSphere:
      if (p.empty()) p = {1.0};
      if (p.size() != 1) fail("expected {radius}");
      if (p[0] <= 0) fail("radius must be positive");
      break;
    case ShapeFamily::kBox:
      if (p.empty()) p = {1.0, 0.7, 0.4};
      if (p.size() != 3) fail("expected {half_x, half_y, half_z}");
      for (double v : p)
        if (v <= 0) fail("half extents must be positive");
      break;
    case ShapeFamily::kCylinder:
      if (p.empty()) p = {0.5, 1.0};
      if (p.size() != 2) fail("expected {radius, half_height}");
      if (p[0] <= 0 || p[1] <= 0) fail("dimensions must be positive");
      break;
    case ShapeFamily::kTorus:
      if (p.empty()) p = {1.0, 0.35};
      if (p.size() != 2) fail("expected {major_radius, minor_radius}");
      if (p[0] <= 0 || p[1] <= 0) fail("radii must be positive");
      if (p[1] >= p[0]) fail("minor radius must be smaller than major");
      break;
    case ShapeFamily::kComposite:
      if (!p.empty()) fail("expected no params");
      break;
  }
  return p;
}

Points sample_sphere(int n, double radius, Rng& rng) {
  Points out(n, 3);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d d;
    do {
      d = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    } while (d.norm() < 1e-12);
    out.row(i) = (radius * d.normalized()).transpose();
  }
  return out;
}

// Area-weighted sampling of the six faces of an axis-aligned box.
Points sample_box(int n, double hx, double hy, double hz, Rng& rng) {
  const double areas[3] = {hy * hz, hx * hz, hx * hy};  // faces normal to x,y,z
  const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
  const double half[3] = {hx, hy, hz};
  Points out(n, 3);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform(0.0, total);
    int axis = 0;
    double acc = 2.0 * areas[0];
    while (axis < 2 && u >= acc) {
      ++axis;
      acc += 2.0 * areas[axis];
    }
    double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    int a = (axis + 1) % 3, b = (axis + 2) % 3;
    Eigen::Vector3d p;
    p[axis] = sign * half[axis];
    p[a] = rng.uniform(-half[a], half[a]);
    p[b] = rng.uniform(-half[b], half[b]);
    out.row(i) = p.transpose();
  }
  return out;
}

Points sample_cylinder(int n, double r, double h, Rng& rng) {
  const double side = 2.0 * kPi * r * 2.0 * h;
  const double cap = kPi * r * r;
  const double total = side + 2.0 * cap;
  Points out(n, 3);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform(0.0, total);
    double theta = rng.uniform(0.0, 2.0 * kPi);
    Eigen::Vector3d p;
    if (u < side) {
      p = {r * std::cos(theta), r * std::sin(theta), rng.uniform(-h, h)};
    } else {
      double rad = r * std::sqrt(rng.uniform01());
      double z = (u - side < cap) ? h : -h;
      p = {rad * std::cos(theta), rad * std::sin(theta), z};
    }
    out.row(i) = p.transpose();
  }
  return out;
}

// Uniform-by-area torus sampling: the tube angle v is accepted with
// probability proportional to the local circumference R + r*cos(v).
Points sample_torus(int n, double R, double r, Rng& rng) {
  Points out(n, 3);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform(0.0, 2.0 * kPi);
    double v;
    for (;;) {
      v = rng.uniform(0.0, 2.0 * kPi);
      double accept = (R + r * std::cos(v)) / (R + r);
      if (rng.uniform01() <= accept) break;
    }
    double w = R + r * std::cos(v);
    out.row(i) = Eigen::RowVector3d(w * std::cos(u), w * std::sin(u),
                                    r * std::sin(v));
  }
  return out;
}

// Fixed dumbbell arrangement whose analytic union bounds are exactly the
// unit cube along x: box [-0.5, 0] + bridge cylinder + sphere ending at 0.5.
Points sample_composite(int n, Rng& rng) {
  const Eigen::Vector3d box_c(-0.25, 0.0, 0.0);
  const double bhx = 0.25, bhy = 0.2, bhz = 0.2;
  const Eigen::Vector3d sph_c(0.3, 0.0, 0.0);
  const double sr = 0.2;
  const double cyl_x0 = -0.05, cyl_x1 = 0.15, cr = 0.1;

  const double area_box = 8.0 * (bhx * bhy + bhx * bhz + bhy * bhz);
  const double area_sph = 4.0 * kPi * sr * sr;
  const double area_cyl = 2.0 * kPi * cr * (cyl_x1 - cyl_x0);
  const double total = area_box + area_sph + area_cyl;

  Points out(n, 3);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform(0.0, total);
    Eigen::Vector3d p;
    if (u < area_box) {
      Rng& r2 = rng;
      Points one = sample_box(1, bhx, bhy, bhz, r2);
      p = one.row(0).transpose() + box_c;
    } else if (u < area_box + area_sph) {
      Points one = sample_sphere(1, sr, rng);
      p = one.row(0).transpose() + sph_c;
    } else {
      double theta = rng.uniform(0.0, 2.0 * kPi);
      double x = rng.uniform(cyl_x0, cyl_x1);
      p = {x, cr * std::cos(theta), cr * std::sin(theta)};
    }
    out.row(i) = p.transpose();
  }
  return out;
}

}  // namespace

std::string shape_family_str(ShapeFamily f) {
  switch (f) {
    case ShapeFamily::kSphere: return "sphere";
    case ShapeFamily::kBox: return "box";
    case ShapeFamily::kCylinder: return "cylinder";
    case ShapeFamily::kTorus: return "torus";
    case ShapeFamily::kComposite: return "composite";
  }
  return "unknown";
}

ShapeFamily shape_family_from_str(const std::string& s) {
  if (s == "sphere") return ShapeFamily::kSphere;
  if (s == "box") return ShapeFamily::kBox;
  if (s == "cylinder") return ShapeFamily::kCylinder;
  if (s == "torus") return ShapeFamily::kTorus;
  if (s == "composite") return ShapeFamily::kComposite;
  throw std::invalid_argument("unknown shape family: " + s);
}

PointCloud generate_complete(const ShapeSpec& spec) {
  check_budget(spec);
  std::vector<double> p = resolve_params(spec);
  Rng rng(derive_seed(spec.seed, "shape"));
  const int n = spec.point_budget;

  Points pts;
  double scale = 1.0;  // multiply raw samples so the longest half-extent is 0.5
  switch (spec.family) {
    case ShapeFamily::kSphere:
      scale = 0.5 / p[0];
      pts = sample_sphere(n, p[0], rng);
      break;
    case ShapeFamily::kBox:
      scale = 0.5 / std::max({p[0], p[1], p[2]});
      pts = sample_box(n, p[0], p[1], p[2], rng);
      break;
    case ShapeFamily::kCylinder:
      scale = 0.5 / std::max(p[0], p[1]);
      pts = sample_cylinder(n, p[0], p[1], rng);
      break;
    case ShapeFamily::kTorus:
      scale = 0.5 / (p[0] + p[1]);
      pts = sample_torus(n, p[0], p[1], rng);
      break;
    case ShapeFamily::kComposite:
      scale = 1.0;  // arranged to unit-cube bounds already
      pts = sample_composite(n, rng);
      break;
  }

  PointCloud out;
  out.points = pts * scale;
  out.normalization = Normalization{};  // identity: generated in canonical frame
  return out;
}

}  // namespace pointmac
