#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pointmac/dataset.hpp"
#include "pointmac/model.hpp"
#include "pointmac/params.hpp"
#include "pointmac/tta.hpp"

namespace pointmac {

// F-Score threshold: 1% of the unit-normalized shape scale.
inline constexpr double kFscoreThreshold = 0.01;

struct EvalRow {
  std::string id;
  std::string category;
  double cd_l1 = 0.0;  // raw scale; the CSV reports chamfer x1000
  double cd_l2 = 0.0;
  double fscore = 0.0;
  double fidelity = 0.0;
  double mmd = 0.0;  // NaN when the reference set is not used
  bool faulted = false;
};

struct MetricAggregate {
  int count = 0;
  double cd_l1 = 0.0;
  double cd_l2 = 0.0;
  double fscore = 0.0;
  double fidelity = 0.0;
  double mmd = 0.0;
};

struct EvalOptions {
  std::string variant = "E_full";  // ladder tag stamped into the report
  std::string split = "test";
  std::uint64_t config_hash = 0;
  std::uint64_t corpus_hash = 0;
  bool use_tta = false;
  TTAConfig tta;  // consulted only when use_tta
  bool with_mmd = true;
  // "absolute" for plain runs; ladder runs mark their numbers "trend" since
  // the toy corpus reproduces orderings, not published magnitudes.
  std::string scale_note = "absolute";
};

struct EvalReport {
  EvalOptions options;
  std::vector<EvalRow> rows;  // one per sample, input order
};

struct EvalOutcome {
  EvalReport report;
  std::vector<TTAReport> tta_reports;  // empty unless options.use_tta
};

// Sample-order mean of the rows (all rows, or one category).
MetricAggregate aggregate_rows(const std::vector<EvalRow>& rows);
MetricAggregate aggregate_category(const std::vector<EvalRow>& rows,
                                   const std::string& category);

// Scores one prediction against its sample: both chamfer forms, F-Score at
// kFscoreThreshold, fidelity of the partial input to the prediction, and,
// when references are given, the minimum chamfer to any reference cloud.
// An empty prediction yields a faulted all-NaN row.
EvalRow score_completion(const PointCloud& prediction,
                         const CompletionSample& sample,
                         const std::vector<PointCloud>* references = nullptr);

// Completes every sample (statically or with per-sample adaptation) and
// scores it: both chamfer forms, F-Score, fidelity of the partial input to
// the prediction, and optionally the minimum chamfer to the split's
// reference clouds.
EvalOutcome evaluate_split(const Model& model, const ParameterSet& checkpoint,
                           const std::vector<CompletionSample>& samples,
                           const EvalOptions& options);

// Deterministic CSV: commented provenance header, one row per sample, then
// per-category summary rows and a final overall row.
void write_eval_report(const std::string& path, const EvalReport& report);

}  // namespace pointmac
