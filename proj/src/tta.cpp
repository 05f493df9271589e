#include "pointmac/tta.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>
#include <utility>

#include "pointmac/metrics.hpp"
#include "pointmac/rng.hpp"

namespace pointmac {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  auto dt = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double, std::milli>(dt).count();
}

PointCloud as_cloud(const Points& p) {
  PointCloud c;
  c.points = p;
  return c;
}

double group_delta_norm(const ParameterSet& a, const ParameterSet& b,
                        ParamGroup g) {
  double acc = 0.0;
  const auto& ga = a.group(g);
  const auto& gb = b.group(g);
  for (const auto& [name, ma] : ga) {
    auto it = gb.find(name);
    if (it == gb.end()) throw std::runtime_error("parameter set mismatch: " + name);
    acc += (ma - it->second).squaredNorm();
  }
  return std::sqrt(acc);
}

}  // namespace

TtaWeightForm tta_weight_form_from_str(const std::string& s) {
  if (s == "normalized") return TtaWeightForm::kNormalized;
  if (s == "raw_lambda") return TtaWeightForm::kRawLambda;
  throw std::invalid_argument("unknown adaptation weight form: " + s);
}

std::string tta_weight_form_str(TtaWeightForm f) {
  return f == TtaWeightForm::kNormalized ? "normalized" : "raw_lambda";
}

void TTAConfig::validate() const {
  if (k < 0) throw std::invalid_argument("adaptation steps must be >= 0");
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("adaptation learning rate must be positive");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  corruption.validate();
}

TTAResult tta_adapt(const Model& model, const ParameterSet& checkpoint,
                    const PointCloud& partial, const TTAConfig& config,
                    const std::string& sample_id, const Points* reference,
                    ParameterSet* adapted_out) {
  config.validate();
  require_nonempty(partial, "adaptation input");

  TTAResult out;
  TTAReport& rep = out.report;
  rep.id = sample_id;
  rep.k = config.k;
  rep.trajectory.assign(static_cast<std::size_t>(config.k) + 1, kNaN);
  rep.cd_before = kNaN;
  rep.cd_after = kNaN;

  // Static completion from the unmodified checkpoint: the k = 0 answer and
  // the fallback whenever adaptation goes non-finite.
  const PointCloud static_completion = model.complete_cloud(checkpoint, partial);

  double w_smr = 0.0;
  double w_ad = 0.0;
  if (config.weight_form == TtaWeightForm::kNormalized) {
    LambdaWeights w = compute_weights(checkpoint.lambda_smr,
                                      checkpoint.lambda_ad, config.lambda_form);
    w_smr = w.w_smr;
    w_ad = w.w_ad;
  } else {
    w_smr = checkpoint.lambda_smr;
    w_ad = checkpoint.lambda_ad;
  }

  const std::uint64_t sample_seed = derive_seed(config.seed, "tta-" + sample_id);

  ParameterSet adapted = checkpoint;
  static const std::vector<ParamGroup> kSharedOnly = {ParamGroup::kPriShared};

  // One combined forward of both self-supervised heads under the frozen
  // weights; returns the weighted loss node.
  auto objective = [&](ForwardCtx& ctx, int step) {
    const int draw = config.redraw_per_step ? step : 0;
    auto smr = model.smr_forward(ctx, partial, config.corruption.mask_ratio,
                                 derive_seed(sample_seed, "smr", draw));
    auto ad = model.ad_forward(ctx, partial, config.corruption,
                               derive_seed(sample_seed, "ad", draw));
    return ctx.tape.add(ctx.tape.scale(smr.loss, w_smr),
                        ctx.tape.scale(ad.loss, w_ad));
  };

  bool fault = false;
  for (int t = 0; t < config.k && !fault; ++t) {
    auto t0 = std::chrono::steady_clock::now();
    ForwardCtx ctx(adapted);
    const int loss = objective(ctx, t);
    const double l = ctx.tape.scalar(loss);
    rep.trajectory[static_cast<std::size_t>(t)] = l;
    if (!std::isfinite(l)) {
      fault = true;
      rep.fault = "non-finite adaptation loss at step " + std::to_string(t);
      break;
    }
    ctx.tape.backward(loss);
    GradientSet grads = ctx.harvest();
    if (!grads.all_finite()) {
      fault = true;
      rep.fault = "non-finite gradient at step " + std::to_string(t);
      break;
    }
    // Only the shared encoder moves; decoder, heads, and logits are frozen.
    adapted.sgd_step(grads, kSharedOnly, config.eta);
    rep.wall_ms.push_back(elapsed_ms(t0));
  }

  if (fault) {
    rep.faulted = true;
    out.completion = static_completion;
    rep.encoder_delta_norm = 0.0;
    adapted = checkpoint;  // a faulted run reports the untouched state
  } else {
    {
      ForwardCtx ctx(adapted);
      rep.trajectory[static_cast<std::size_t>(config.k)] =
          ctx.tape.scalar(objective(ctx, config.k));
    }
    out.completion = config.k == 0 ? static_completion
                                   : model.complete_cloud(adapted, partial);
    rep.encoder_delta_norm =
        group_delta_norm(adapted, checkpoint, ParamGroup::kPriShared);
  }

  if (reference != nullptr && reference->rows() > 0) {
    const PointCloud ref = as_cloud(*reference);
    rep.cd_before = chamfer_l2(static_completion, ref);
    rep.cd_after = chamfer_l2(out.completion, ref);
  }
  if (adapted_out != nullptr) *adapted_out = std::move(adapted);
  return out;
}

std::vector<TTAResult> tta_batch(const Model& model,
                                 const ParameterSet& checkpoint,
                                 const std::vector<CompletionSample>& samples,
                                 const TTAConfig& config) {
  config.validate();
  const int n = static_cast<int>(samples.size());
  std::vector<TTAResult> results(static_cast<std::size_t>(n));

  auto run_one = [&](int i) {
    const CompletionSample& s = samples[static_cast<std::size_t>(i)];
    const Points* ref = s.complete.count() > 0 ? &s.complete.points : nullptr;
    TTAResult& slot = results[static_cast<std::size_t>(i)];
    try {
      slot = tta_adapt(model, checkpoint, s.partial, config, s.id, ref);
    } catch (const std::exception& e) {
      slot.report.id = s.id;
      slot.report.k = config.k;
      slot.report.faulted = true;
      slot.report.fault = e.what();
      slot.report.trajectory.assign(static_cast<std::size_t>(config.k) + 1, kNaN);
      slot.report.cd_before = kNaN;
      slot.report.cd_after = kNaN;
      try {
        slot.completion = model.complete_cloud(checkpoint, s.partial);
        if (ref != nullptr)
          slot.report.cd_after = slot.report.cd_before =
              chamfer_l2(slot.completion, as_cloud(*ref));
      } catch (const std::exception&) {
        // completion stays empty; the report carries the fault
      }
    }
  };

  const int workers = std::min(config.workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) run_one(i);
  } else {
    // Samples are independent and each thread writes only its own slots, so
    // the result is identical to the sequential order for any worker count.
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return results;
}

void write_tta_reports(const std::string& dir, const std::string& base,
                       const std::vector<TTAReport>& reports) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path traj_dir = fs::path(dir) / (base + "_traj");
  fs::create_directories(traj_dir);

  const fs::path summary_path = fs::path(dir) / (base + ".csv");
  std::ofstream summary(summary_path);
  if (!summary) throw std::runtime_error("cannot write " + summary_path.string());
  summary << "# per-sample adaptation summary; wall-clock milliseconds are "
             "kept in the .timing.csv sidecar\n";
  summary << "id,steps,faulted,l_ada_first,l_ada_last,cd_before,cd_after,"
             "encoder_delta_norm\n";
  for (const auto& r : reports) {
    const double first = r.trajectory.empty() ? kNaN : r.trajectory.front();
    const double last = r.trajectory.empty() ? kNaN : r.trajectory.back();
    summary << r.id << ',' << r.k << ',' << (r.faulted ? 1 : 0) << ','
            << fmt17(first) << ',' << fmt17(last) << ',' << fmt17(r.cd_before)
            << ',' << fmt17(r.cd_after) << ',' << fmt17(r.encoder_delta_norm)
            << '\n';
  }
  summary.close();
  if (!summary) throw std::runtime_error("failed writing " + summary_path.string());

  for (const auto& r : reports) {
    const fs::path p = traj_dir / (r.id + ".csv");
    std::ofstream traj(p);
    if (!traj) throw std::runtime_error("cannot write " + p.string());
    traj << "step,l_ada\n";
    for (std::size_t t = 0; t < r.trajectory.size(); ++t)
      traj << t << ',' << fmt17(r.trajectory[t]) << '\n';
  }

  const fs::path timing_path = fs::path(dir) / (base + ".timing.csv");
  std::ofstream timing(timing_path);
  if (!timing) throw std::runtime_error("cannot write " + timing_path.string());
  timing << "id,step,wall_ms\n";
  char buf[64];
  for (const auto& r : reports) {
    for (std::size_t t = 0; t < r.wall_ms.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%.3f", r.wall_ms[t]);
      timing << r.id << ',' << t << ',' << buf << '\n';
    }
  }
}

}  // namespace pointmac
