#pragma once

#include <stdexcept>
#include <string>

#include "pointmac/point_cloud.hpp"

namespace pointmac {

enum class CloudFormat { kXyzText, kPlyAscii };

struct ParseError : std::runtime_error {
  ParseError(const std::string& path, int line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        line_number(line) {}
  int line_number;
};

// ".xyz" -> xyz_text, ".ply" -> ply_ascii; anything else throws.
CloudFormat format_from_path(const std::string& path);

PointCloud read_cloud(const std::string& path, CloudFormat format);
PointCloud read_cloud(const std::string& path);

// Coordinates are written with 6 decimal places; PLY is ASCII 1.0 with
// float x,y,z vertex properties only.
void write_cloud(const std::string& path, const PointCloud& cloud,
                 CloudFormat format);
void write_cloud(const std::string& path, const PointCloud& cloud);

}  // namespace pointmac
