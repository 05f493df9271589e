#pragma once

#include <string>
#include <vector>

#include "pointmac/dataset.hpp"
#include "pointmac/lambda_calibration.hpp"
#include "pointmac/model.hpp"
#include "pointmac/params.hpp"

namespace pointmac {

// How the frozen logits weight the two self-supervised losses during
// adaptation: normalized convex weights (consistent with training) or the
// raw logits themselves.
enum class TtaWeightForm { kNormalized, kRawLambda };

TtaWeightForm tta_weight_form_from_str(const std::string& s);
std::string tta_weight_form_str(TtaWeightForm f);

struct TTAConfig {
  int k = 3;
  double eta = 2.5e-4;
  std::uint64_t seed = 0;
  CorruptionSpec corruption;  // mask ratio + noise spec for the aux draws
  TtaWeightForm weight_form = TtaWeightForm::kNormalized;
  LambdaFormKind lambda_form = LambdaFormKind::kSoftmax;
  // Default: corruption draws are fixed once per sample, so the k steps
  // descend a fixed objective. When set, fresh draws are made each step.
  bool redraw_per_step = false;
  int workers = 1;

  void validate() const;
};

struct TTAReport {
  std::string id;
  int k = 0;
  bool faulted = false;
  std::string fault;
  // adaptation-loss trajectory, exactly k+1 entries; entries after a fault
  // are NaN
  std::vector<double> trajectory;
  double cd_before = 0.0;  // squared chamfer vs reference, NaN if none given
  double cd_after = 0.0;
  double encoder_delta_norm = 0.0;
  std::vector<double> wall_ms;  // per adaptation step
};

struct TTAResult {
  PointCloud completion;
  TTAReport report;
};

// Per-sample adaptation: k gradient steps on a private copy of the shared
// encoder driven by the two self-supervised losses under the frozen logit
// weights; decoder, aux heads, and logits stay bit-identical. k = 0 equals
// static inference exactly. A non-finite loss falls back to the static
// completion and flags the report. When adapted_out is given it receives
// the post-adaptation parameter state (the untouched checkpoint on fault),
// so callers can verify which groups moved.
TTAResult tta_adapt(const Model& model, const ParameterSet& checkpoint,
                    const PointCloud& partial, const TTAConfig& config,
                    const std::string& sample_id,
                    const Points* reference = nullptr,
                    ParameterSet* adapted_out = nullptr);

// Independent per-sample adaptation over a split; results are identical for
// any worker count and any sample order. Per-sample failures are isolated.
std::vector<TTAResult> tta_batch(const Model& model,
                                 const ParameterSet& checkpoint,
                                 const std::vector<CompletionSample>& samples,
                                 const TTAConfig& config);

// <dir>/<base>.csv (deterministic summary), <dir>/<base>_traj/<id>.csv
// trajectory sidecars, <dir>/<base>.timing.csv wall-clock rows.
void write_tta_reports(const std::string& dir, const std::string& base,
                       const std::vector<TTAReport>& reports);

}  // namespace pointmac
