#include "pointmac/export_artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace pointmac {
namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

// near points warm, far points cool
Rgb depth_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto lerp = [t](double a, double b) {
    return static_cast<std::uint8_t>(std::lround(a + (b - a) * t));
  };
  return Rgb{lerp(70.0, 230.0), lerp(100.0, 80.0), lerp(230.0, 60.0)};
}

}  // namespace

void render_scatter_ppm(const Points& pts, const std::string& path, int size) {
  if (size < 16) throw std::invalid_argument("render: image size too small");
  const int n = static_cast<int>(pts.rows());

  // fixed oblique view: yaw about y, then tilt about x
  const double cy = std::cos(-0.5), sy = std::sin(-0.5);
  const double cx = std::cos(0.35), sx = std::sin(0.35);
  std::vector<Eigen::Vector3d> view(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = pts(i, 0), y = pts(i, 1), z = pts(i, 2);
    const double x1 = cy * x + sy * z;
    const double z1 = -sy * x + cy * z;
    const double y2 = cx * y - sx * z1;
    const double z2 = sx * y + cx * z1;
    view[static_cast<std::size_t>(i)] = Eigen::Vector3d(x1, y2, z2);
  }

  double zmin = 0.0, zmax = 0.0;
  if (n > 0) {
    zmin = zmax = view[0].z();
    for (const auto& v : view) {
      zmin = std::min(zmin, v.z());
      zmax = std::max(zmax, v.z());
    }
  }
  const double zspan = zmax > zmin ? zmax - zmin : 1.0;

  // draw far-to-near so near points overdraw; stable order for determinism
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double za = view[static_cast<std::size_t>(a)].z();
    const double zb = view[static_cast<std::size_t>(b)].z();
    if (za != zb) return za < zb;
    return a < b;
  });

  std::vector<std::uint8_t> img(
      static_cast<std::size_t>(size) * static_cast<std::size_t>(size) * 3, 255);
  // normalized clouds live in [-0.5, 0.5]^3; after rotation a half-extent of
  // 0.95 covers them with a margin
  const double half = 0.95;
  const int radius = std::max(1, size / 192);
  for (int idx : order) {
    const auto& v = view[static_cast<std::size_t>(idx)];
    const int px = static_cast<int>(
        std::lround((v.x() + half) / (2.0 * half) * (size - 1)));
    const int py = static_cast<int>(
        std::lround((half - v.y()) / (2.0 * half) * (size - 1)));
    const Rgb c = depth_color((zmax - v.z()) / zspan);
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        if (dx * dx + dy * dy > radius * radius) continue;
        const int qx = px + dx, qy = py + dy;
        if (qx < 0 || qx >= size || qy < 0 || qy >= size) continue;
        std::size_t at = (static_cast<std::size_t>(qy) * size + qx) * 3;
        img[at] = c.r;
        img[at + 1] = c.g;
        img[at + 2] = c.b;
      }
    }
  }

  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P6\n" << size << ' ' << size << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()),
            static_cast<std::streamsize>(img.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

ExportResult export_artifacts(const Model& model, const ParameterSet& params,
                              const std::vector<CompletionSample>& samples,
                              const TTAConfig* tta, const std::string& out_dir,
                              CloudFormat format) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string ext = format == CloudFormat::kPlyAscii ? ".ply" : ".xyz";

  std::vector<PointCloud> completions;
  completions.reserve(samples.size());
  if (tta != nullptr) {
    for (auto& r : tta_batch(model, params, samples, *tta)) {
      if (r.completion.count() == 0) {
        throw std::runtime_error("export: no completion for " + r.report.id +
                                 " (" + r.report.fault + ")");
      }
      completions.push_back(std::move(r.completion));
    }
  } else {
    for (const auto& s : samples) {
      completions.push_back(model.complete_cloud(params, s.partial));
    }
  }

  ExportResult res;
  auto emit = [&](const std::string& name) {
    res.files.push_back((fs::path(out_dir) / name).string());
    return res.files.back();
  };
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const CompletionSample& s = samples[i];
    write_cloud(emit(s.id + "_input" + ext), s.partial, format);
    write_cloud(emit(s.id + "_completion" + ext), completions[i], format);
    render_scatter_ppm(s.partial.points, emit(s.id + "_before.ppm"));
    render_scatter_ppm(completions[i].points, emit(s.id + "_after.ppm"));
  }
  return res;
}

}  // namespace pointmac
