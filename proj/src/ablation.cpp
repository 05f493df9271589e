#include "pointmac/ablation.hpp"

#include <filesystem>
#include <stdexcept>

#include "pointmac/checkpoint.hpp"
#include "pointmac/tta.hpp"

namespace pointmac {
namespace {

// A rung's configuration: the shared base with the rung's switches applied.
RunConfig variant_run_config(LadderVariant v, const RunConfig& base) {
  RunConfig c = base;
  switch (v) {
    case LadderVariant::kABaseline:
    case LadderVariant::kBBiaux:
      break;
    case LadderVariant::kCNoTsi:
      c.model.shared_tsi = false;
      break;
    case LadderVariant::kDNoLambda:
      c.train.freeze_lambda = true;
      break;
    case LadderVariant::kEFull:
      break;
  }
  return c;
}

double resolved_epochs(const TrainConfig& c) { return c.epochs; }

}  // namespace

std::string ladder_variant_tag(LadderVariant v) {
  switch (v) {
    case LadderVariant::kABaseline: return "A_baseline";
    case LadderVariant::kBBiaux: return "B_biaux";
    case LadderVariant::kCNoTsi: return "C_no_tsi";
    case LadderVariant::kDNoLambda: return "D_no_lambda";
    case LadderVariant::kEFull: return "E_full";
  }
  throw std::invalid_argument("unknown ladder variant");
}

LadderVariant ladder_variant_from_tag(const std::string& tag) {
  for (LadderVariant v : kAllLadderVariants) {
    if (ladder_variant_tag(v) == tag) return v;
  }
  throw std::invalid_argument("unknown ladder variant tag: " + tag);
}

VariantOutcome train_ladder_variant(LadderVariant v, const RunConfig& base,
                                    const std::vector<CompletionSample>& train) {
  const RunConfig config = variant_run_config(v, base);
  const TrainConfig warm_cfg = config.warm_train_config();
  const TrainConfig meta_cfg = config.meta_train_config();

  Model model(config.model);
  ParameterSet init = model.init_params(config.seed);

  VariantOutcome out;
  out.model_config = config.model;

  auto finish_single_phase = [&](TrainResult&& res, const std::string& phase) {
    if (res.aborted) {
      throw std::runtime_error("ladder variant " + ladder_variant_tag(v) +
                               " aborted: " + res.fault);
    }
    out.params = std::move(res.params);
    out.log = std::move(res.log);
    out.phase = phase;
    out.iterations = res.iterations_done;
  };

  // A/B/C spend the warm + meta budget in one phase so that every rung gets
  // the same number of completion-loss updates.
  TrainConfig joint_cfg = warm_cfg;
  joint_cfg.epochs = resolved_epochs(warm_cfg) + resolved_epochs(meta_cfg);

  switch (v) {
    case LadderVariant::kABaseline:
      finish_single_phase(primary_only_train(model, train, joint_cfg, init),
                          "primary");
      break;
    case LadderVariant::kBBiaux:
    case LadderVariant::kCNoTsi:
      finish_single_phase(joint_pretrain(model, train, joint_cfg, init),
                          "warmstart");
      break;
    case LadderVariant::kDNoLambda:
    case LadderVariant::kEFull: {
      TrainResult warm = joint_pretrain(model, train, warm_cfg, init);
      if (warm.aborted) {
        throw std::runtime_error("ladder variant " + ladder_variant_tag(v) +
                                 " aborted in warm start: " + warm.fault);
      }
      TrainResult meta =
          meta_train(model, train, meta_cfg, std::move(warm.params));
      if (meta.aborted) {
        throw std::runtime_error("ladder variant " + ladder_variant_tag(v) +
                                 " aborted in meta phase: " + meta.fault);
      }
      out.params = std::move(meta.params);
      out.log = std::move(warm.log);
      out.log.insert(out.log.end(), meta.log.begin(), meta.log.end());
      out.phase = "meta";
      out.iterations = warm.iterations_done + meta.iterations_done;
      break;
    }
  }
  return out;
}

std::vector<EvalReport> run_ablation_ladder(
    const std::vector<CompletionSample>& train,
    const std::vector<CompletionSample>& test, const RunConfig& base,
    const std::string& out_dir, std::uint64_t corpus_hash) {
  namespace fs = std::filesystem;
  if (train.empty() || test.empty()) {
    throw std::invalid_argument("ablation ladder: empty split");
  }

  std::vector<EvalReport> reports;
  for (LadderVariant v : kAllLadderVariants) {
    const std::string tag = ladder_variant_tag(v);
    const RunConfig config = variant_run_config(v, base);
    const fs::path vdir = fs::path(out_dir) / tag;
    fs::create_directories(vdir);
    write_resolved_config(config, vdir.string());

    VariantOutcome trained = train_ladder_variant(v, base, train);
    write_train_log((vdir / "train_log.csv").string(), trained.log);

    Checkpoint ckpt;
    ckpt.model_config = trained.model_config;
    ckpt.config_hash = config.config_hash();
    ckpt.phase = trained.phase;
    ckpt.iteration = trained.iterations;
    ckpt.params = trained.params;
    save_checkpoint((vdir / "checkpoint.bin").string(), ckpt);

    const bool with_tta =
        v == LadderVariant::kDNoLambda || v == LadderVariant::kEFull;
    Model model(trained.model_config);
    EvalOptions opts;
    opts.variant = tag;
    opts.split = "test";
    opts.config_hash = ckpt.config_hash;
    opts.corpus_hash = corpus_hash;
    opts.use_tta = with_tta;
    if (with_tta) opts.tta = config.resolved_tta_config();
    opts.with_mmd = config.eval_mmd;
    opts.scale_note = "trend";

    EvalOutcome eval = evaluate_split(model, trained.params, test, opts);
    write_eval_report((vdir / "report.csv").string(), eval.report);
    if (with_tta) {
      write_tta_reports(vdir.string(), "tta_report", eval.tta_reports);
    }
    reports.push_back(std::move(eval.report));
  }
  return reports;
}

}  // namespace pointmac
