#pragma once

#include <string>
#include <vector>

#include "pointmac/corruption.hpp"
#include "pointmac/point_cloud.hpp"
#include "pointmac/shapes.hpp"

namespace pointmac {

struct CompletionSample {
  PointCloud partial;
  PointCloud complete;
  CorruptionSpec corruption;
  std::string id;
  std::string category;  // shape family name
};

struct DatasetEntry {
  std::string id;
  std::string split;  // train | val | test
  std::string complete_path;  // relative to the manifest directory
  std::string partial_path;
  ShapeFamily family = ShapeFamily::kSphere;
  CorruptionSpec corruption;
};

struct CorpusConfig {
  int train_count = 2000;
  int val_count = 200;
  int test_count = 200;
  int point_budget = 1024;
  double keep_lo = 0.45;
  double keep_hi = 0.55;
  std::pair<double, double> noise_sigma_range{0.001, 0.005};
  double clip_bound = 0.02;
  double mask_ratio = 0.4;
  std::uint64_t seed = 0;

  int total() const { return train_count + val_count + test_count; }
  void validate() const;
};

// Deterministic in-memory sample for a corpus-global index. The disk corpus
// is exactly these samples written out, so training can regenerate any
// sample bit-identically from (config, index) alone.
CompletionSample make_sample(const CorpusConfig& config, int index);

std::string sample_id(int index);
std::string split_of_index(const CorpusConfig& config, int index);

// Writes <out_dir>/clouds/<id>_{complete,partial}.xyz plus
// <out_dir>/manifest.csv and returns the manifest rows.
std::vector<DatasetEntry> generate_corpus(const CorpusConfig& config,
                                          const std::string& out_dir);

void write_manifest(const std::string& path,
                    const std::vector<DatasetEntry>& entries);
std::vector<DatasetEntry> read_manifest(const std::string& path);

// Loads the cloud pair for a manifest row; root_dir is the manifest's
// directory.
CompletionSample load_sample(const DatasetEntry& entry,
                             const std::string& root_dir);

std::vector<DatasetEntry> entries_for_split(
    const std::vector<DatasetEntry>& entries, const std::string& split);

}  // namespace pointmac
