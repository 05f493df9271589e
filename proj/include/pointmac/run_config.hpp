#pragma once

#include <cstdint>
#include <string>

#include "pointmac/dataset.hpp"
#include "pointmac/model.hpp"
#include "pointmac/training.hpp"
#include "pointmac/tta.hpp"

namespace pointmac {

// All tunables of a run, read from a plain-text file of `section.key = value`
// lines (comments with '#', unknown keys rejected). One `run.seed` feeds the
// corpus, training, and adaptation streams; the POINTMAC_SEED environment
// variable overrides the file, and explicit CLI flags override both.
struct RunConfig {
  std::uint64_t seed = 0;
  CorpusConfig corpus;
  ModelConfig model;
  TrainConfig train;
  double warm_epochs = -1.0;  // < 0: fall back to train.epochs
  double meta_epochs = -1.0;
  TTAConfig tta;
  bool eval_mmd = true;

  // Copies of train/tta with per-phase epochs and the shared seed resolved.
  TrainConfig warm_train_config() const;
  TrainConfig meta_train_config() const;
  TTAConfig resolved_tta_config() const;
  CorpusConfig resolved_corpus_config() const;

  void validate() const;

  std::string serialize() const;  // resolved values, stable key order
  std::uint64_t config_hash() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Applies one `section.key = value` assignment (used for file lines and for
// CLI overrides). Throws std::invalid_argument on unknown keys or bad values.
void apply_run_config_entry(RunConfig& config, const std::string& key,
                            const std::string& value);

// POINTMAC_SEED, when set, replaces config.seed. Returns true if applied.
bool apply_seed_env(RunConfig& config);

// Writes the resolved config (serialize()) to <dir>/config.resolved.txt so
// any output directory can replay its run.
void write_resolved_config(const RunConfig& config, const std::string& dir);

// FNV-1a over a file's raw bytes (used to stamp reports with the corpus
// manifest identity).
std::uint64_t file_content_hash(const std::string& path);

}  // namespace pointmac
