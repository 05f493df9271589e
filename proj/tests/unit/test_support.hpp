#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pointmac/point_cloud.hpp"
#include "pointmac/rng.hpp"

namespace pointmac::test {

inline Points random_points(int n, std::uint64_t seed, double extent = 0.5) {
  Rng rng(derive_seed(seed, "test-points"));
  Points p(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) p(i, j) = rng.uniform(-extent, extent);
  return p;
}

inline PointCloud random_cloud(int n, std::uint64_t seed, double extent = 0.5) {
  return PointCloud(random_points(n, seed, extent));
}

// Unique per-test scratch directory under the system temp root, removed on
// destruction so reruns start clean.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    namespace fs = std::filesystem;
    path_ = (fs::temp_directory_path() / ("pointmac_test_" + tag)).string();
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace pointmac::test
