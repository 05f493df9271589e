#pragma once

#include <string>
#include <vector>

#include "pointmac/evaluate.hpp"
#include "pointmac/run_config.hpp"
#include "pointmac/training.hpp"

namespace pointmac {

// The five-rung ladder, weakest to strongest:
//   A_baseline  - completion loss only
//   B_biaux     - joint training with both self-supervised losses
//   C_no_tsi    - B with a private integrator per head
//   D_no_lambda - warm start + meta phase with the logits frozen at equal
//                 weights, evaluated with adaptation
//   E_full      - the whole method, evaluated with adaptation
enum class LadderVariant { kABaseline, kBBiaux, kCNoTsi, kDNoLambda, kEFull };

inline constexpr LadderVariant kAllLadderVariants[] = {
    LadderVariant::kABaseline, LadderVariant::kBBiaux, LadderVariant::kCNoTsi,
    LadderVariant::kDNoLambda, LadderVariant::kEFull};

std::string ladder_variant_tag(LadderVariant v);
LadderVariant ladder_variant_from_tag(const std::string& tag);

struct VariantOutcome {
  ModelConfig model_config;
  ParameterSet params;
  std::vector<TrainRecord> log;
  std::string phase;  // phase label for the saved checkpoint
  long iterations = 0;
};

// Trains one rung from scratch under the shared seed. Every rung consumes
// the same number of completion-loss updates (warm + meta iterations); the
// rungs differ only in which companion machinery runs alongside. Aborted
// training (divergence, non-finite loss) throws std::runtime_error.
VariantOutcome train_ladder_variant(LadderVariant v, const RunConfig& config,
                                    const std::vector<CompletionSample>& train);

// Trains and evaluates every rung, writing per-rung artifacts (resolved
// config, checkpoint, training log, report, adaptation reports for D/E)
// under <out_dir>/<tag>/. Returns the reports in rung order A..E.
std::vector<EvalReport> run_ablation_ladder(
    const std::vector<CompletionSample>& train,
    const std::vector<CompletionSample>& test, const RunConfig& config,
    const std::string& out_dir, std::uint64_t corpus_hash);

}  // namespace pointmac
