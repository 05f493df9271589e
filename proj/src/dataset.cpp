#include "pointmac/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pointmac/cloud_io.hpp"
#include "pointmac/rng.hpp"

namespace fs = std::filesystem;

namespace pointmac {

namespace {

constexpr ShapeFamily kFamilyCycle[] = {
    ShapeFamily::kSphere, ShapeFamily::kBox, ShapeFamily::kCylinder,
    ShapeFamily::kTorus, ShapeFamily::kComposite};

std::vector<double> random_params(ShapeFamily family, Rng& rng) {
  switch (family) {
    case ShapeFamily::kSphere:
      return {1.0};
    case ShapeFamily::kBox:
      return {rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0),
              rng.uniform(0.3, 1.0)};
    case ShapeFamily::kCylinder:
      return {rng.uniform(0.3, 0.8), rng.uniform(0.4, 1.0)};
    case ShapeFamily::kTorus: {
      double R = rng.uniform(0.7, 1.0);
      return {R, R * rng.uniform(0.2, 0.45)};
    }
    case ShapeFamily::kComposite:
      return {};
  }
  return {};
}

Eigen::Vector3d random_unit_vector(Rng& rng) {
  Eigen::Vector3d v;
  do {
    v = {rng.normal(), rng.normal(), rng.normal()};
  } while (v.norm() < 1e-9);
  return v.normalized();
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void CorpusConfig::validate() const {
  if (train_count < 0 || val_count < 0 || test_count < 0 || total() == 0) {
    throw std::invalid_argument("corpus: split sizes must be nonnegative and "
                                "total positive");
  }
  if (point_budget < 64) {
    throw std::invalid_argument("corpus: point_budget must be >= 64");
  }
  if (!(keep_lo > 0.0 && keep_lo <= keep_hi && keep_hi <= 1.0)) {
    throw std::invalid_argument("corpus: keep range must satisfy "
                                "0 < lo <= hi <= 1");
  }
}

std::string sample_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shape_%05d", index);
  return buf;
}

std::string split_of_index(const CorpusConfig& config, int index) {
  if (index < config.train_count) return "train";
  if (index < config.train_count + config.val_count) return "val";
  return "test";
}

CompletionSample make_sample(const CorpusConfig& config, int index) {
  config.validate();
  if (index < 0 || index >= config.total()) {
    throw std::out_of_range("make_sample: index outside corpus");
  }
  const std::uint64_t sample_seed = derive_seed(config.seed, "sample", index);

  ShapeFamily family = kFamilyCycle[index % 5];
  Rng prm(derive_seed(sample_seed, "params"));

  ShapeSpec spec;
  spec.family = family;
  spec.params = random_params(family, prm);
  spec.point_budget = config.point_budget;
  spec.seed = derive_seed(sample_seed, "surface");

  CorruptionSpec corruption;
  corruption.view_direction = random_unit_vector(prm);
  corruption.keep_ratio = prm.uniform(config.keep_lo, config.keep_hi);
  corruption.noise_sigma_range = config.noise_sigma_range;
  corruption.clip_bound = config.clip_bound;
  corruption.mask_ratio = config.mask_ratio;

  CompletionSample sample;
  sample.complete = generate_complete(spec);
  sample.partial = make_partial(sample.complete, corruption,
                                derive_seed(sample_seed, "partial"));
  sample.corruption = corruption;
  sample.id = sample_id(index);
  sample.category = shape_family_str(family);
  return sample;
}

std::vector<DatasetEntry> generate_corpus(const CorpusConfig& config,
                                          const std::string& out_dir) {
  config.validate();
  fs::create_directories(fs::path(out_dir) / "clouds");

  std::vector<DatasetEntry> entries;
  entries.reserve(config.total());
  for (int i = 0; i < config.total(); ++i) {
    CompletionSample s = make_sample(config, i);
    DatasetEntry e;
    e.id = s.id;
    e.split = split_of_index(config, i);
    e.complete_path = "clouds/" + s.id + "_complete.xyz";
    e.partial_path = "clouds/" + s.id + "_partial.xyz";
    e.family = kFamilyCycle[i % 5];
    e.corruption = s.corruption;
    write_cloud((fs::path(out_dir) / e.complete_path).string(), s.complete);
    write_cloud((fs::path(out_dir) / e.partial_path).string(), s.partial);
    entries.push_back(std::move(e));
  }
  write_manifest((fs::path(out_dir) / "manifest.csv").string(), entries);
  return entries;
}

void write_manifest(const std::string& path,
                    const std::vector<DatasetEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "id,split,complete_path,partial_path,family,view_x,view_y,view_z,"
         "keep_ratio,noise_lo,noise_hi,clip,mask_ratio\n";
  for (const auto& e : entries) {
    const auto& c = e.corruption;
    out << e.id << ',' << e.split << ',' << e.complete_path << ','
        << e.partial_path << ',' << shape_family_str(e.family) << ','
        << fmt_double(c.view_direction.x()) << ','
        << fmt_double(c.view_direction.y()) << ','
        << fmt_double(c.view_direction.z()) << ','
        << fmt_double(c.keep_ratio) << ','
        << fmt_double(c.noise_sigma_range.first) << ','
        << fmt_double(c.noise_sigma_range.second) << ','
        << fmt_double(c.clip_bound) << ',' << fmt_double(c.mask_ratio)
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<DatasetEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty manifest");
  ++lineno;

  std::vector<DatasetEntry> entries;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::vector<std::string> cols;
    std::string col;
    while (std::getline(iss, col, ',')) cols.push_back(col);
    if (cols.size() != 13) {
      throw ParseError(path, lineno, "expected 13 columns, got " +
                                         std::to_string(cols.size()));
    }
    DatasetEntry e;
    try {
      e.id = cols[0];
      e.split = cols[1];
      e.complete_path = cols[2];
      e.partial_path = cols[3];
      e.family = shape_family_from_str(cols[4]);
      e.corruption.view_direction = {std::stod(cols[5]), std::stod(cols[6]),
                                     std::stod(cols[7])};
      e.corruption.keep_ratio = std::stod(cols[8]);
      e.corruption.noise_sigma_range = {std::stod(cols[9]),
                                        std::stod(cols[10])};
      e.corruption.clip_bound = std::stod(cols[11]);
      e.corruption.mask_ratio = std::stod(cols[12]);
    } catch (const std::invalid_argument& ex) {
      throw ParseError(path, lineno, ex.what());
    }
    if (e.split != "train" && e.split != "val" && e.split != "test") {
      throw ParseError(path, lineno, "unknown split '" + e.split + "'");
    }
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw ParseError(path, lineno, "manifest has no rows");
  return entries;
}

CompletionSample load_sample(const DatasetEntry& entry,
                             const std::string& root_dir) {
  CompletionSample s;
  s.complete = read_cloud((fs::path(root_dir) / entry.complete_path).string());
  s.partial = read_cloud((fs::path(root_dir) / entry.partial_path).string());
  s.corruption = entry.corruption;
  s.id = entry.id;
  s.category = shape_family_str(entry.family);
  return s;
}

std::vector<DatasetEntry> entries_for_split(
    const std::vector<DatasetEntry>& entries, const std::string& split) {
  std::vector<DatasetEntry> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(e);
  }
  return out;
}

}  // namespace pointmac
