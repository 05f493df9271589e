#include "pointmac/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "pointmac/rng.hpp"

namespace pointmac {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<int> draw_batch(Rng& rng, int n_samples, int batch_size) {
  std::vector<int> idx(batch_size);
  for (int i = 0; i < batch_size; ++i) idx[i] = rng.uniform_int(0, n_samples - 1);
  return idx;
}

void clip_gradients(GradientSet& grads, double clip_norm) {
  if (clip_norm <= 0.0) return;
  double norm = std::sqrt(grads.squared_norm());
  if (norm > clip_norm) grads.scale(clip_norm / norm);
}

double group_norm(const GradientSet& grads, ParamGroup g) {
  double sum = 0.0;
  for (const auto& [name, m] : grads.group(g)) sum += m.squaredNorm();
  return std::sqrt(sum);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// NaN marks a column that does not apply to the phase; leave it empty.
std::string fmt_opt(double v) { return std::isnan(v) ? std::string() : fmt17(v); }

}  // namespace

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) {
      throw std::invalid_argument(std::string("train config: ") + name +
                                  " must be positive");
    }
  };
  positive(alpha, "alpha");
  positive(beta, "beta");
  positive(gamma, "gamma");
  positive(eta_phi, "eta_phi");
  positive(eta_lambda, "eta_lambda");
  if (!(mu > 0.0 && mu <= 1.0)) {
    throw std::invalid_argument("train config: mu must be in (0, 1]");
  }
  if (k_train < 1) {
    throw std::invalid_argument("train config: k_train must be >= 1");
  }
  if (batch_size < 1) {
    throw std::invalid_argument("train config: batch_size must be >= 1");
  }
  if (!(epochs >= 0.0)) {
    throw std::invalid_argument("train config: epochs must be nonnegative");
  }
  if (clip_norm < 0.0) {
    throw std::invalid_argument("train config: clip_norm must be >= 0");
  }
  if (divergence_factor <= 1.0) {
    throw std::invalid_argument("train config: divergence_factor must be > 1");
  }
  if (inner_target != "aux_heads" && inner_target != "shared_encoder") {
    throw std::invalid_argument(
        "train config: inner_target must be aux_heads or shared_encoder");
  }
  if (checkpoint_every < 0) {
    throw std::invalid_argument("train config: checkpoint_every must be >= 0");
  }
}

long iterations_for(const TrainConfig& config, int n_samples) {
  if (n_samples < 1) throw std::invalid_argument("iterations_for: no samples");
  long per_epoch = (n_samples + config.batch_size - 1) / config.batch_size;
  return static_cast<long>(std::ceil(config.epochs * per_epoch));
}

TrainResult joint_pretrain(const Model& model,
                           const std::vector<CompletionSample>& train,
                           const TrainConfig& config, ParameterSet init,
                           const CheckpointHook& hook) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("joint_pretrain: no samples");
  const long iters = iterations_for(config, static_cast<int>(train.size()));

  TrainResult res;
  res.params = std::move(init);
  double initial_loss = -1.0;

  for (long t = 0; t < iters; ++t) {
    auto t0 = Clock::now();
    const std::uint64_t iter_seed = derive_seed(config.seed, "warm-iter", t);
    Rng rng(iter_seed);
    std::vector<int> batch =
        draw_batch(rng, static_cast<int>(train.size()), config.batch_size);

    ForwardCtx ctx(res.params);
    Tape& tape = ctx.tape;
    std::vector<int> combined;
    double sum_pri = 0.0, sum_smr = 0.0, sum_ad = 0.0;
    for (size_t j = 0; j < batch.size(); ++j) {
      const CompletionSample& s = train[batch[j]];
      auto pri = model.primary_forward(ctx, s.partial, s.complete.points);
      auto smr = model.smr_forward(
          ctx, s.partial, s.corruption.mask_ratio,
          derive_seed(iter_seed, "smr", static_cast<std::uint64_t>(j)));
      auto ad = model.ad_forward(
          ctx, s.partial, s.corruption,
          derive_seed(iter_seed, "ad", static_cast<std::uint64_t>(j)));
      int aux = tape.add(smr.loss, ad.loss);
      combined.push_back(tape.add(pri.loss, tape.scale(aux, config.mu)));
      sum_pri += tape.scalar(pri.loss);
      sum_smr += tape.scalar(smr.loss);
      sum_ad += tape.scalar(ad.loss);
    }
    int total = tape.scale(tape.add_n(combined), 1.0 / batch.size());
    double loss = tape.scalar(total);

    if (!std::isfinite(loss)) {
      res.aborted = true;
      res.fault = "non-finite loss at warmstart step " + std::to_string(t);
      break;
    }
    if (initial_loss < 0.0) initial_loss = loss;
    if (loss > config.divergence_factor * initial_loss) {
      res.aborted = true;
      res.fault = "diverged at warmstart step " + std::to_string(t);
      break;
    }

    tape.backward(total);
    GradientSet grads = ctx.harvest();
    if (!grads.all_finite()) {
      res.aborted = true;
      res.fault = "non-finite gradient at warmstart step " + std::to_string(t);
      break;
    }
    clip_gradients(grads, config.clip_norm);
    res.params.sgd_step(grads,
                        {ParamGroup::kPriShared, ParamGroup::kPriDecoder,
                         ParamGroup::kAuxShared, ParamGroup::kAuxSmr,
                         ParamGroup::kAuxAd},
                        config.gamma);

    TrainRecord rec;
    rec.step = t;
    rec.phase = "warmstart";
    rec.l_pri = sum_pri / batch.size();
    rec.l_smr = sum_smr / batch.size();
    rec.l_ad = sum_ad / batch.size();
    rec.l_ada = config.mu * (rec.l_smr + rec.l_ad);
    LambdaWeights w = compute_weights(res.params.lambda_smr,
                                      res.params.lambda_ad,
                                      config.lambda_form);
    rec.w_smr = w.w_smr;
    rec.w_ad = w.w_ad;
    for (ParamGroup g : kAllParamGroups) {
      rec.gnorm[static_cast<int>(g)] = group_norm(grads, g);
    }
    rec.wall_ms = ms_since(t0);
    res.log.push_back(std::move(rec));
    res.iterations_done = t + 1;

    if (hook && config.checkpoint_every > 0 &&
        (t + 1) % config.checkpoint_every == 0) {
      hook(t + 1, "warmstart", res.params);
    }
  }
  if (hook) hook(res.iterations_done, "warmstart", res.params);
  return res;
}

TrainResult primary_only_train(const Model& model,
                               const std::vector<CompletionSample>& train,
                               const TrainConfig& config, ParameterSet init,
                               const CheckpointHook& hook) {
  config.validate();
  if (train.empty()) {
    throw std::invalid_argument("primary_only_train: no samples");
  }
  const long iters = iterations_for(config, static_cast<int>(train.size()));
  const double nan = std::numeric_limits<double>::quiet_NaN();

  TrainResult res;
  res.params = std::move(init);
  double initial_loss = -1.0;

  for (long t = 0; t < iters; ++t) {
    auto t0 = Clock::now();
    const std::uint64_t iter_seed = derive_seed(config.seed, "warm-iter", t);
    Rng rng(iter_seed);
    std::vector<int> batch =
        draw_batch(rng, static_cast<int>(train.size()), config.batch_size);
    std::vector<const CompletionSample*> batch_ptrs;
    batch_ptrs.reserve(batch.size());
    for (int b : batch) batch_ptrs.push_back(&train[b]);

    OuterAlignResult step = outer_align_step(model, batch_ptrs, config,
                                             res.params);
    if (!step.ok) {
      res.aborted = true;
      res.fault = step.fault + " at primary step " + std::to_string(t);
      break;
    }
    if (initial_loss < 0.0) initial_loss = step.l_pri;
    if (step.l_pri > config.divergence_factor * initial_loss) {
      res.aborted = true;
      res.fault = "diverged at primary step " + std::to_string(t);
      break;
    }
    res.params = std::move(step.params);

    TrainRecord rec;
    rec.step = t;
    rec.phase = "primary";
    rec.l_pri = step.l_pri;
    rec.l_smr = nan;
    rec.l_ad = nan;
    rec.l_ada = nan;
    LambdaWeights w = compute_weights(res.params.lambda_smr,
                                      res.params.lambda_ad,
                                      config.lambda_form);
    rec.w_smr = w.w_smr;
    rec.w_ad = w.w_ad;
    for (ParamGroup g : kAllParamGroups) {
      rec.gnorm[static_cast<int>(g)] = group_norm(step.grads, g);
    }
    rec.wall_ms = ms_since(t0);
    res.log.push_back(std::move(rec));
    res.iterations_done = t + 1;

    if (hook && config.checkpoint_every > 0 &&
        (t + 1) % config.checkpoint_every == 0) {
      hook(t + 1, "primary", res.params);
    }
  }
  if (hook) hook(res.iterations_done, "primary", res.params);
  return res;
}

InnerAdaptResult inner_adapt_step(const Model& model,
                                  const CompletionSample& sample,
                                  const TrainConfig& config,
                                  const ParameterSet& params,
                                  std::uint64_t seed) {
  config.validate();
  InnerAdaptResult res;
  res.params = params;

  ForwardCtx ctx(params);
  auto smr = model.smr_forward(ctx, sample.partial,
                               sample.corruption.mask_ratio,
                               derive_seed(seed, "smr"));
  auto ad =
      model.ad_forward(ctx, sample.partial, sample.corruption,
                       derive_seed(seed, "ad"));
  res.l_smr = ctx.tape.scalar(smr.loss);
  res.l_ad = ctx.tape.scalar(ad.loss);
  // the two head groups are disjoint across the two losses, so one backward
  // of the sum yields exactly the per-loss gradients for each head
  int total = ctx.tape.add(smr.loss, ad.loss);
  if (!std::isfinite(ctx.tape.scalar(total))) {
    res.ok = false;
    res.fault = "non-finite auxiliary loss";
    return res;
  }
  ctx.tape.backward(total);
  GradientSet grads = ctx.harvest();
  if (!grads.all_finite()) {
    res.ok = false;
    res.fault = "non-finite auxiliary gradient";
    return res;
  }
  clip_gradients(grads, config.clip_norm);
  res.params.sgd_step(grads, {ParamGroup::kAuxSmr}, config.alpha);
  res.params.sgd_step(grads, {ParamGroup::kAuxAd}, config.beta);
  return res;
}

OuterAlignResult outer_align_step(
    const Model& model, const std::vector<const CompletionSample*>& batch,
    const TrainConfig& config, const ParameterSet& params) {
  config.validate();
  if (batch.empty()) throw std::invalid_argument("outer step: empty batch");
  OuterAlignResult res;
  res.params = params;

  ForwardCtx ctx(params);
  Tape& tape = ctx.tape;
  std::vector<int> losses;
  losses.reserve(batch.size());
  for (const CompletionSample* s : batch) {
    losses.push_back(
        model.primary_forward(ctx, s->partial, s->complete.points).loss);
  }
  int mean = tape.scale(tape.add_n(losses), 1.0 / batch.size());
  res.l_pri = tape.scalar(mean);
  if (!std::isfinite(res.l_pri)) {
    res.ok = false;
    res.fault = "non-finite completion loss";
    return res;
  }
  tape.backward(mean);
  res.grads = ctx.harvest();
  if (!res.grads.all_finite()) {
    res.ok = false;
    res.fault = "non-finite completion gradient";
    return res;
  }
  GradientSet clipped = res.grads;
  clip_gradients(clipped, config.clip_norm);
  res.params.sgd_step(clipped,
                      {ParamGroup::kPriShared, ParamGroup::kPriDecoder},
                      config.gamma);
  return res;
}

TrainResult meta_train(const Model& model,
                       const std::vector<CompletionSample>& train,
                       const TrainConfig& config, ParameterSet warm,
                       long start_iter, const CheckpointHook& hook) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("meta_train: no samples");
  const long iters = iterations_for(config, static_cast<int>(train.size()));

  TrainResult res;
  res.params = std::move(warm);
  res.iterations_done = start_iter;
  double initial_loss = -1.0;

  std::vector<ParamGroup> inner_groups;
  if (config.inner_target == "aux_heads") {
    inner_groups = {ParamGroup::kAuxShared, ParamGroup::kAuxSmr,
                    ParamGroup::kAuxAd};
  } else {
    inner_groups = {ParamGroup::kPriShared};
  }

  for (long t = start_iter; t < iters; ++t) {
    auto t0 = Clock::now();
    const std::uint64_t iter_seed = derive_seed(config.seed, "meta-iter", t);
    Rng rng(iter_seed);
    std::vector<int> batch =
        draw_batch(rng, static_cast<int>(train.size()), config.batch_size);
    const CompletionSample& inner = train[batch[0]];

    double l_smr = 0.0, l_ad = 0.0, l_ada = 0.0;
    LambdaWeights used_w = compute_weights(
        res.params.lambda_smr, res.params.lambda_ad, config.lambda_form);
    GradientSet inner_grads;
    bool fault = false;
    for (int k = 0; k < config.k_train && !fault; ++k) {
      ForwardCtx ctx(res.params);
      auto smr = model.smr_forward(
          ctx, inner.partial, inner.corruption.mask_ratio,
          derive_seed(iter_seed, "inner-smr", static_cast<std::uint64_t>(k)));
      auto ad = model.ad_forward(
          ctx, inner.partial, inner.corruption,
          derive_seed(iter_seed, "inner-ad", static_cast<std::uint64_t>(k)));
      l_smr = ctx.tape.scalar(smr.loss);
      l_ad = ctx.tape.scalar(ad.loss);
      used_w = compute_weights(res.params.lambda_smr, res.params.lambda_ad,
                               config.lambda_form);
      int weighted = ctx.tape.add(ctx.tape.scale(smr.loss, used_w.w_smr),
                                  ctx.tape.scale(ad.loss, used_w.w_ad));
      l_ada = ctx.tape.scalar(weighted);
      if (!std::isfinite(l_ada)) {
        res.fault = "non-finite adaptive auxiliary loss at meta step " +
                    std::to_string(t);
        fault = true;
        break;
      }
      ctx.tape.backward(weighted);
      inner_grads = ctx.harvest();
      if (!inner_grads.all_finite()) {
        res.fault =
            "non-finite auxiliary gradient at meta step " + std::to_string(t);
        fault = true;
        break;
      }
      clip_gradients(inner_grads, config.clip_norm);
      // parameter and logit updates both read the pre-step state
      LambdaGrad lg =
          adaptive_aux_loss_grad(l_smr, l_ad, res.params.lambda_smr,
                                 res.params.lambda_ad, config.lambda_form);
      res.params.sgd_step(inner_grads, inner_groups, config.eta_phi);
      if (!config.freeze_lambda) {
        update_lambda(res.params.lambda_smr, res.params.lambda_ad, lg,
                      config.eta_lambda);
      }
    }
    if (fault) {
      res.aborted = true;
      break;
    }

    std::vector<const CompletionSample*> batch_ptrs;
    batch_ptrs.reserve(batch.size());
    for (int b : batch) batch_ptrs.push_back(&train[b]);
    OuterAlignResult outer =
        outer_align_step(model, batch_ptrs, config, res.params);
    if (!outer.ok) {
      res.aborted = true;
      res.fault = outer.fault + " at meta step " + std::to_string(t);
      break;
    }
    res.params = std::move(outer.params);

    if (initial_loss < 0.0) initial_loss = outer.l_pri;
    if (outer.l_pri > config.divergence_factor * initial_loss) {
      res.aborted = true;
      res.fault = "diverged at meta step " + std::to_string(t);
      break;
    }

    TrainRecord rec;
    rec.step = t;
    rec.phase = "meta";
    rec.l_pri = outer.l_pri;
    rec.l_smr = l_smr;
    rec.l_ad = l_ad;
    rec.l_ada = l_ada;
    rec.w_smr = used_w.w_smr;
    rec.w_ad = used_w.w_ad;
    for (ParamGroup g : kAllParamGroups) {
      // groups are reported from the step that updates them
      double from_inner = group_norm(inner_grads, g);
      double from_outer = group_norm(outer.grads, g);
      bool outer_group =
          g == ParamGroup::kPriShared || g == ParamGroup::kPriDecoder;
      rec.gnorm[static_cast<int>(g)] = outer_group ? from_outer : from_inner;
    }
    rec.wall_ms = ms_since(t0);
    res.log.push_back(std::move(rec));
    res.iterations_done = t + 1;

    if (hook && config.checkpoint_every > 0 &&
        (t + 1) % config.checkpoint_every == 0) {
      hook(t + 1, "meta", res.params);
    }
  }
  if (hook) hook(res.iterations_done, "meta", res.params);
  return res;
}

void write_train_log(const std::string& path,
                     const std::vector<TrainRecord>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "# one row per optimization step; wall-clock milliseconds are kept "
         "in the .timing.csv sidecar\n";
  out << "step,phase,l_pri,l_smr,l_ad,l_ada,w_smr,w_ad,gnorm_pri_shared,"
         "gnorm_pri_decoder,gnorm_aux_shared,gnorm_aux_smr,gnorm_aux_ad\n";
  for (const auto& r : log) {
    out << r.step << ',' << r.phase << ',' << fmt17(r.l_pri) << ','
        << fmt_opt(r.l_smr) << ',' << fmt_opt(r.l_ad) << ',' << fmt_opt(r.l_ada)
        << ',' << fmt17(r.w_smr) << ',' << fmt17(r.w_ad);
    for (int g = 0; g < kNumParamGroups; ++g) out << ',' << fmt17(r.gnorm[g]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);

  std::ofstream timing(path + ".timing.csv");
  if (!timing) {
    throw std::runtime_error("cannot open for writing: " + path +
                             ".timing.csv");
  }
  timing << "step,phase,wall_ms\n";
  char buf[64];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%.3f", r.wall_ms);
    timing << r.step << ',' << r.phase << ',' << buf << '\n';
  }
}

}  // namespace pointmac
