#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pointmac/ablation.hpp"
#include "pointmac/checkpoint.hpp"
#include "pointmac/cloud_io.hpp"
#include "pointmac/dataset.hpp"
#include "pointmac/evaluate.hpp"
#include "pointmac/export_artifacts.hpp"
#include "pointmac/run_config.hpp"
#include "pointmac/tta.hpp"

namespace fs = std::filesystem;
using namespace pointmac;

namespace {

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw std::invalid_argument(what + " not found: " + path);
  }
}

// file < POINTMAC_SEED < explicit --seed flag
RunConfig resolve_config(const std::string& config_path,
                         const std::optional<std::uint64_t>& seed_flag) {
  RunConfig cfg;
  if (!config_path.empty()) {
    require_file(config_path, "config file");
    cfg = load_run_config(config_path);
  }
  apply_seed_env(cfg);
  if (seed_flag.has_value()) cfg.seed = *seed_flag;
  return cfg;
}

std::vector<CompletionSample> load_split(const std::string& data_dir,
                                         const std::string& split) {
  const std::string manifest = (fs::path(data_dir) / "manifest.csv").string();
  require_file(manifest, "corpus manifest");
  std::vector<DatasetEntry> entries =
      entries_for_split(read_manifest(manifest), split);
  if (entries.empty()) {
    throw std::invalid_argument("split '" + split + "' is empty in " + manifest);
  }
  std::vector<CompletionSample> samples;
  samples.reserve(entries.size());
  for (const auto& e : entries) samples.push_back(load_sample(e, data_dir));
  return samples;
}

std::uint64_t manifest_hash(const std::string& data_dir) {
  return file_content_hash((fs::path(data_dir) / "manifest.csv").string());
}

CheckpointHook snapshot_hook(const std::string& out_dir,
                             const ModelConfig& model_config,
                             std::uint64_t config_hash, int every) {
  if (every <= 0) return {};
  return [out_dir, model_config, config_hash, every](
             long iter, const std::string& phase, const ParameterSet& params) {
    if (iter <= 0 || iter % every != 0) return;
    char name[64];
    std::snprintf(name, sizeof(name), "ckpt_%s_%07ld.bin", phase.c_str(), iter);
    Checkpoint c;
    c.model_config = model_config;
    c.config_hash = config_hash;
    c.phase = phase;
    c.iteration = iter;
    c.params = params;
    save_checkpoint((fs::path(out_dir) / name).string(), c);
  };
}

void save_final(const std::string& path, const ModelConfig& model_config,
                std::uint64_t config_hash, const std::string& phase, long iter,
                const ParameterSet& params) {
  Checkpoint c;
  c.model_config = model_config;
  c.config_hash = config_hash;
  c.phase = phase;
  c.iteration = iter;
  c.params = params;
  save_checkpoint(path, c);
}

void check_train_result(const TrainResult& res, const std::string& phase) {
  if (res.aborted) {
    throw std::runtime_error(phase + " aborted after " +
                             std::to_string(res.iterations_done) +
                             " iterations: " + res.fault);
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{
      "pointmac: point cloud completion with per-sample test-time adaptation"};
  app.require_subcommand(1);
  app.fallthrough();  // accept --config/--seed after the subcommand too

  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  app.add_option("--config", config_path,
                 "run configuration file (section.key = value)");
  app.add_option("--seed", seed_flag,
                 "root seed (overrides config file and POINTMAC_SEED)");

  // gen-data ---------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic corpus");
  std::string gen_out;
  std::optional<int> gen_train, gen_val, gen_test, gen_budget;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--train", gen_train, "training sample count");
  gen->add_option("--val", gen_val, "validation sample count");
  gen->add_option("--test", gen_test, "test sample count");
  gen->add_option("--budget", gen_budget, "points per complete cloud");
  gen->callback([&]() {
    RunConfig cfg = resolve_config(config_path, seed_flag);
    if (gen_train) cfg.corpus.train_count = *gen_train;
    if (gen_val) cfg.corpus.val_count = *gen_val;
    if (gen_test) cfg.corpus.test_count = *gen_test;
    if (gen_budget) cfg.corpus.point_budget = *gen_budget;
    cfg.validate();
    CorpusConfig corpus = cfg.resolved_corpus_config();
    std::vector<DatasetEntry> entries = generate_corpus(corpus, gen_out);
    write_resolved_config(cfg, gen_out);
    std::cout << "gen-data: wrote " << entries.size() << " samples ("
              << corpus.train_count << " train, " << corpus.val_count
              << " val, " << corpus.test_count << " test) to " << gen_out
              << "\n";
  });

  // pretrain ---------------------------------------------------------------
  auto* pre = app.add_subcommand(
      "pretrain", "joint warm start of all parameter groups");
  std::string pre_data, pre_out;
  std::optional<double> pre_epochs;
  pre->add_option("--data", pre_data, "corpus directory")->required();
  pre->add_option("--out", pre_out, "output directory")->required();
  pre->add_option("--epochs", pre_epochs, "override warm-start epochs");
  pre->callback([&]() {
    RunConfig cfg = resolve_config(config_path, seed_flag);
    if (pre_epochs) cfg.warm_epochs = *pre_epochs;
    cfg.validate();
    std::vector<CompletionSample> train = load_split(pre_data, "train");
    Model model(cfg.model);
    ParameterSet init = model.init_params(cfg.seed);
    TrainConfig tc = cfg.warm_train_config();
    fs::create_directories(pre_out);
    write_resolved_config(cfg, pre_out);
    TrainResult res = joint_pretrain(
        model, train, tc, std::move(init),
        snapshot_hook(pre_out, cfg.model, cfg.config_hash(),
                      tc.checkpoint_every));
    write_train_log((fs::path(pre_out) / "train_log.csv").string(), res.log);
    check_train_result(res, "warm start");
    save_final((fs::path(pre_out) / "checkpoint_warm.bin").string(), cfg.model,
               cfg.config_hash(), "warmstart", res.iterations_done, res.params);
    std::cout << "pretrain: " << res.iterations_done << " iterations, final "
              << "completion loss "
              << (res.log.empty() ? 0.0 : res.log.back().l_pri) << "\n";
  });

  // metatrain --------------------------------------------------------------
  auto* meta = app.add_subcommand(
      "metatrain", "meta phase: inner auxiliary adaptation + outer alignment");
  std::string meta_data, meta_ckpt, meta_out;
  std::optional<double> meta_epochs_flag;
  bool meta_resume = false;
  meta->add_option("--data", meta_data, "corpus directory")->required();
  meta->add_option("--ckpt", meta_ckpt, "warm-start checkpoint")->required();
  meta->add_option("--out", meta_out, "output directory")->required();
  meta->add_option("--epochs", meta_epochs_flag, "override meta epochs");
  meta->add_flag("--resume", meta_resume,
                 "continue a meta checkpoint from its recorded iteration");
  meta->callback([&]() {
    RunConfig cfg = resolve_config(config_path, seed_flag);
    if (meta_epochs_flag) cfg.meta_epochs = *meta_epochs_flag;
    cfg.validate();
    require_file(meta_ckpt, "checkpoint");
    Checkpoint start = load_checkpoint(meta_ckpt);
    std::vector<CompletionSample> train = load_split(meta_data, "train");
    Model model(start.model_config);
    TrainConfig tc = cfg.meta_train_config();
    long start_iter = 0;
    if (meta_resume) {
      if (start.phase != "meta") {
        throw std::invalid_argument(
            "--resume requires a checkpoint from the meta phase, got '" +
            start.phase + "'");
      }
      start_iter = start.iteration;
    }
    fs::create_directories(meta_out);
    write_resolved_config(cfg, meta_out);
    TrainResult res = meta_train(
        model, train, tc, std::move(start.params), start_iter,
        snapshot_hook(meta_out, start.model_config, cfg.config_hash(),
                      tc.checkpoint_every));
    write_train_log((fs::path(meta_out) / "train_log.csv").string(), res.log);
    check_train_result(res, "meta training");
    save_final((fs::path(meta_out) / "checkpoint_meta.bin").string(),
               start.model_config, cfg.config_hash(), "meta",
               res.iterations_done, res.params);
    std::cout << "metatrain: iterations " << start_iter << ".."
              << res.iterations_done << ", final completion loss "
              << (res.log.empty() ? 0.0 : res.log.back().l_pri) << "\n";
  });

  // tta --------------------------------------------------------------------
  auto* tta_cmd = app.add_subcommand(
      "tta", "per-sample test-time adaptation over a split");
  std::string tta_data, tta_ckpt, tta_out, tta_split = "test";
  std::optional<int> tta_k, tta_workers;
  std::optional<double> tta_lr;
  tta_cmd->add_option("--data", tta_data, "corpus directory")->required();
  tta_cmd->add_option("--ckpt", tta_ckpt, "checkpoint")->required();
  tta_cmd->add_option("--out", tta_out, "output directory")->required();
  tta_cmd->add_option("--split", tta_split, "corpus split (default test)");
  tta_cmd->add_option("--k", tta_k, "adaptation steps");
  tta_cmd->add_option("--lr", tta_lr, "adaptation step size");
  tta_cmd->add_option("--workers", tta_workers, "parallel workers");
  tta_cmd->callback([&]() {
    RunConfig cfg = resolve_config(config_path, seed_flag);
    if (tta_k) cfg.tta.k = *tta_k;
    if (tta_lr) cfg.tta.eta = *tta_lr;
    if (tta_workers) cfg.tta.workers = *tta_workers;
    cfg.validate();
    require_file(tta_ckpt, "checkpoint");
    Checkpoint ckpt = load_checkpoint(tta_ckpt);
    std::vector<CompletionSample> samples = load_split(tta_data, tta_split);
    Model model(ckpt.model_config);
    TTAConfig tc = cfg.resolved_tta_config();
    std::vector<TTAResult> results = tta_batch(model, ckpt.params, samples, tc);
    std::vector<TTAReport> reports;
    reports.reserve(results.size());
    int improved = 0, faulted = 0;
    for (auto& r : results) {
      if (r.report.faulted) ++faulted;
      if (!r.report.trajectory.empty() &&
          r.report.trajectory.back() < r.report.trajectory.front()) {
        ++improved;
      }
      reports.push_back(std::move(r.report));
    }
    fs::create_directories(tta_out);
    write_resolved_config(cfg, tta_out);
    write_tta_reports(tta_out, "tta_report", reports);
    std::cout << "tta: k = " << tc.k << ", " << improved << "/"
              << reports.size() << " samples improved their adaptation loss, "
              << faulted << " faulted\n";
  });

  // eval -------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "score completions over a split");
  std::string ev_data, ev_ckpt, ev_out, ev_split = "test";
  std::string ev_variant = "E_full";
  bool ev_tta = false, ev_no_mmd = false;
  ev->add_option("--data", ev_data, "corpus directory")->required();
  ev->add_option("--ckpt", ev_ckpt, "checkpoint")->required();
  ev->add_option("--out", ev_out, "output directory")->required();
  ev->add_option("--split", ev_split, "corpus split (default test)");
  ev->add_option("--variant", ev_variant, "report tag");
  ev->add_flag("--tta", ev_tta, "adapt each sample before scoring");
  ev->add_flag("--no-mmd", ev_no_mmd, "skip the reference-set metric");
  ev->callback([&]() {
    RunConfig cfg = resolve_config(config_path, seed_flag);
    if (ev_no_mmd) cfg.eval_mmd = false;
    cfg.validate();
    require_file(ev_ckpt, "checkpoint");
    Checkpoint ckpt = load_checkpoint(ev_ckpt);
    std::vector<CompletionSample> samples = load_split(ev_data, ev_split);
    Model model(ckpt.model_config);
    EvalOptions opts;
    opts.variant = ev_variant;
    opts.split = ev_split;
    opts.config_hash = cfg.config_hash();
    opts.corpus_hash = manifest_hash(ev_data);
    opts.use_tta = ev_tta;
    if (ev_tta) opts.tta = cfg.resolved_tta_config();
    opts.with_mmd = cfg.eval_mmd;
    EvalOutcome out = evaluate_split(model, ckpt.params, samples, opts);
    fs::create_directories(ev_out);
    write_resolved_config(cfg, ev_out);
    write_eval_report((fs::path(ev_out) / "report.csv").string(), out.report);
    if (ev_tta) write_tta_reports(ev_out, "tta_report", out.tta_reports);
    MetricAggregate a = aggregate_rows(out.report.rows);
    std::cout << "eval: " << a.count << " samples, cd_l2 x1000 = "
              << a.cd_l2 * 1000.0 << ", fscore = " << a.fscore << "\n";
  });

  // ablate -----------------------------------------------------------------
  auto* ab = app.add_subcommand(
      "ablate", "train and score the five-rung ablation ladder");
  std::string ab_data, ab_out;
  ab->add_option("--data", ab_data, "corpus directory")->required();
  ab->add_option("--out", ab_out, "output directory")->required();
  ab->callback([&]() {
    RunConfig cfg = resolve_config(config_path, seed_flag);
    cfg.validate();
    std::vector<CompletionSample> train = load_split(ab_data, "train");
    std::vector<CompletionSample> test = load_split(ab_data, "test");
    std::vector<EvalReport> reports = run_ablation_ladder(
        train, test, cfg, ab_out, manifest_hash(ab_data));
    for (const auto& r : reports) {
      MetricAggregate a = aggregate_rows(r.rows);
      std::cout << "ablate: " << r.options.variant << " cd_l2 x1000 = "
                << a.cd_l2 * 1000.0 << "\n";
    }
  });

  // export -----------------------------------------------------------------
  auto* ex = app.add_subcommand(
      "export", "write completion clouds and before/after renders");
  std::string ex_data, ex_ckpt, ex_out, ex_split = "test";
  std::string ex_format = "ply";
  int ex_count = 8;
  bool ex_tta = false;
  ex->add_option("--data", ex_data, "corpus directory")->required();
  ex->add_option("--ckpt", ex_ckpt, "checkpoint")->required();
  ex->add_option("--out", ex_out, "output directory")->required();
  ex->add_option("--split", ex_split, "corpus split (default test)");
  ex->add_option("--count", ex_count, "samples to export (default 8)");
  ex->add_option("--format", ex_format, "cloud format: ply or xyz");
  ex->add_flag("--tta", ex_tta, "adapt each sample before exporting");
  ex->callback([&]() {
    RunConfig cfg = resolve_config(config_path, seed_flag);
    cfg.validate();
    if (ex_count < 1) throw std::invalid_argument("--count must be >= 1");
    CloudFormat format;
    if (ex_format == "ply") format = CloudFormat::kPlyAscii;
    else if (ex_format == "xyz") format = CloudFormat::kXyzText;
    else throw std::invalid_argument("--format must be ply or xyz");
    require_file(ex_ckpt, "checkpoint");
    Checkpoint ckpt = load_checkpoint(ex_ckpt);
    std::vector<CompletionSample> samples = load_split(ex_data, ex_split);
    if (static_cast<int>(samples.size()) > ex_count) samples.resize(ex_count);
    Model model(ckpt.model_config);
    TTAConfig tc = cfg.resolved_tta_config();
    ExportResult res = export_artifacts(model, ckpt.params, samples,
                                        ex_tta ? &tc : nullptr, ex_out, format);
    write_resolved_config(cfg, ex_out);
    std::cout << "export: wrote " << res.files.size() << " files for "
              << samples.size() << " samples to " << ex_out << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the error and usage pointer
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
