#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pointmac/dataset.hpp"
#include "pointmac/lambda_calibration.hpp"
#include "pointmac/model.hpp"
#include "pointmac/params.hpp"

namespace pointmac {

struct TrainConfig {
  // single-sample auxiliary adaptation rates (group-restricted step)
  double alpha = 2.5e-4;
  double beta = 2.5e-4;
  // outer completion-loss rate
  double gamma = 1e-3;
  // meta-phase auxiliary and logit rates
  double eta_phi = 1e-3;
  double eta_lambda = 1e-3;
  // warm-start weight on the auxiliary losses
  double mu = 0.5;
  int k_train = 1;  // inner steps per meta iteration
  int batch_size = 4;
  double epochs = 1.0;  // per phase; fractions allowed
  std::uint64_t seed = 0;
  double clip_norm = 10.0;  // global-norm gradient clip, 0 disables
  double divergence_factor = 1e3;  // abort when loss exceeds this x initial
  std::string inner_target = "aux_heads";  // or "shared_encoder"
  LambdaFormKind lambda_form = LambdaFormKind::kSoftmax;
  bool freeze_lambda = false;  // keep the logits fixed during the meta phase
  int checkpoint_every = 0;  // iterations between snapshot hooks, 0 = off

  void validate() const;  // throws std::invalid_argument
};

struct TrainRecord {
  long step = 0;
  std::string phase;  // warmstart | meta
  double l_pri = 0.0;
  double l_smr = 0.0;
  double l_ad = 0.0;
  double l_ada = 0.0;
  double w_smr = 0.5;
  double w_ad = 0.5;
  double gnorm[kNumParamGroups] = {};
  double wall_ms = 0.0;  // excluded from the deterministic log file
};

struct TrainResult {
  ParameterSet params;
  std::vector<TrainRecord> log;
  bool aborted = false;
  std::string fault;
  long iterations_done = 0;
};

using CheckpointHook = std::function<void(
    long iter, const std::string& phase, const ParameterSet& params)>;

// Iterations implied by epochs/batch_size for a split of n samples.
long iterations_for(const TrainConfig& config, int n_samples);

// Warm start: batch-mean of (completion loss + mu * (both auxiliary
// losses)) minimized over every group with plain gradient descent at gamma.
// The logits are untouched. A non-finite loss aborts, keeping the last
// finite parameters.
TrainResult joint_pretrain(const Model& model,
                           const std::vector<CompletionSample>& train,
                           const TrainConfig& config, ParameterSet init,
                           const CheckpointHook& hook = {});

// Completion loss alone, batch-mean gradient descent at gamma on the
// primary groups; auxiliary parameters and logits never move. Auxiliary
// columns of the log are NaN (left empty in the CSV).
TrainResult primary_only_train(const Model& model,
                               const std::vector<CompletionSample>& train,
                               const TrainConfig& config, ParameterSet init,
                               const CheckpointHook& hook = {});

// Meta phase, resumable: iterations [start_iter, total) with per-iteration
// seeds derived statelessly from config.seed, so a resumed run reproduces
// the tail of a full run bit-identically. Each iteration: draw batch, adapt
// the auxiliary groups on one sample with eta_phi against the
// logit-weighted auxiliary loss (k_train steps, logits updated
// simultaneously with eta_lambda), then take the outer batch-mean
// completion-loss step on the primary groups at gamma.
TrainResult meta_train(const Model& model,
                       const std::vector<CompletionSample>& train,
                       const TrainConfig& config, ParameterSet warm,
                       long start_iter = 0, const CheckpointHook& hook = {});

// Single-sample auxiliary adaptation: the masked-reconstruction head moves
// by alpha against its loss, the denoising head by beta against its loss;
// every other group (and the logits) is bit-identical afterwards.
struct InnerAdaptResult {
  ParameterSet params;
  double l_smr = 0.0;
  double l_ad = 0.0;
  bool ok = true;
  std::string fault;
};
InnerAdaptResult inner_adapt_step(const Model& model,
                                  const CompletionSample& sample,
                                  const TrainConfig& config,
                                  const ParameterSet& params,
                                  std::uint64_t seed);

// Batch-mean completion-loss step on the primary groups only (shared
// encoder + decoder), treating all auxiliary parameters as constants.
struct OuterAlignResult {
  ParameterSet params;
  double l_pri = 0.0;
  GradientSet grads;  // of the batch-mean loss, before clipping
  bool ok = true;
  std::string fault;
};
OuterAlignResult outer_align_step(const Model& model,
                                  const std::vector<const CompletionSample*>& batch,
                                  const TrainConfig& config,
                                  const ParameterSet& params);

// Deterministic CSV (no timing): header documents the column meaning.
// Wall-clock per step goes to <path>.timing.csv.
void write_train_log(const std::string& path,
                     const std::vector<TrainRecord>& log);

}  // namespace pointmac
