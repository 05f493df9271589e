#include "pointmac/cloud_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace pointmac {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool blank(const std::string& s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

bool parse_triple(const std::string& line, Eigen::RowVector3d& out) {
  std::istringstream iss(line);
  double x, y, z;
  if (!(iss >> x >> y >> z)) return false;
  std::string rest;
  if (iss >> rest) return false;  // trailing junk
  out = {x, y, z};
  return true;
}

PointCloud from_rows(const std::vector<Eigen::RowVector3d>& rows) {
  PointCloud out;
  out.points.resize(static_cast<int>(rows.size()), 3);
  for (size_t i = 0; i < rows.size(); ++i) {
    out.points.row(static_cast<int>(i)) = rows[i];
  }
  return out;
}

PointCloud read_xyz(const std::string& path, std::ifstream& in) {
  std::vector<Eigen::RowVector3d> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    Eigen::RowVector3d p;
    if (!parse_triple(line, p)) {
      throw ParseError(path, lineno, "expected three floats: '" + line + "'");
    }
    rows.push_back(p);
  }
  if (rows.empty()) throw ParseError(path, lineno, "no points in file");
  return from_rows(rows);
}

PointCloud read_ply(const std::string& path, std::ifstream& in) {
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!blank(line)) return true;
    }
    return false;
  };
  auto expect = [&](const std::string& what) {
    if (!next_line()) throw ParseError(path, lineno, "unexpected end of header");
    return what;
  };

  expect("magic");
  if (line != "ply") throw ParseError(path, lineno, "missing 'ply' magic");

  long vertex_count = -1;
  bool saw_format = false;
  std::vector<std::string> props;
  for (;;) {
    if (!next_line()) throw ParseError(path, lineno, "unexpected end of header");
    std::istringstream iss(line);
    std::string tok;
    iss >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string kind, version;
      iss >> kind >> version;
      if (kind != "ascii" || version != "1.0") {
        throw ParseError(path, lineno, "only 'format ascii 1.0' is supported");
      }
      saw_format = true;
    } else if (tok == "element") {
      std::string name;
      long count;
      if (!(iss >> name >> count) || name != "vertex" || count < 0) {
        throw ParseError(path, lineno, "expected 'element vertex N'");
      }
      vertex_count = count;
    } else if (tok == "property") {
      std::string type, name;
      if (!(iss >> type >> name)) {
        throw ParseError(path, lineno, "malformed property line");
      }
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    } else {
      throw ParseError(path, lineno, "unexpected header line: '" + line + "'");
    }
  }
  if (!saw_format) throw ParseError(path, lineno, "missing format line");
  if (vertex_count < 0) throw ParseError(path, lineno, "missing vertex element");
  if (props != std::vector<std::string>{"x", "y", "z"}) {
    throw ParseError(path, lineno, "expected exactly x, y, z properties");
  }

  std::vector<Eigen::RowVector3d> rows;
  rows.reserve(static_cast<size_t>(vertex_count));
  for (long i = 0; i < vertex_count; ++i) {
    if (!next_line()) {
      throw ParseError(path, lineno, "fewer vertex rows than declared");
    }
    Eigen::RowVector3d p;
    if (!parse_triple(line, p)) {
      throw ParseError(path, lineno, "expected three floats: '" + line + "'");
    }
    rows.push_back(p);
  }
  if (rows.empty()) throw ParseError(path, lineno, "no points in file");
  return from_rows(rows);
}

}  // namespace

CloudFormat format_from_path(const std::string& path) {
  if (ends_with(path, ".xyz")) return CloudFormat::kXyzText;
  if (ends_with(path, ".ply")) return CloudFormat::kPlyAscii;
  throw std::invalid_argument("cannot infer cloud format from path: " + path);
}

PointCloud read_cloud(const std::string& path, CloudFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  switch (format) {
    case CloudFormat::kXyzText: return read_xyz(path, in);
    case CloudFormat::kPlyAscii: return read_ply(path, in);
  }
  throw std::logic_error("unreachable");
}

PointCloud read_cloud(const std::string& path) {
  return read_cloud(path, format_from_path(path));
}

void write_cloud(const std::string& path, const PointCloud& cloud,
                 CloudFormat format) {
  require_nonempty(cloud, "write_cloud");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  char buf[128];
  if (format == CloudFormat::kPlyAscii) {
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.count()
        << "\nproperty float x\nproperty float y\nproperty float z\n"
           "end_header\n";
  }
  for (int i = 0; i < cloud.count(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f\n", cloud.points(i, 0),
                  cloud.points(i, 1), cloud.points(i, 2));
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_cloud(const std::string& path, const PointCloud& cloud) {
  write_cloud(path, cloud, format_from_path(path));
}

}  // namespace pointmac
