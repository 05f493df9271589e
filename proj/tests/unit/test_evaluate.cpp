#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pointmac/evaluate.hpp"
#include "pointmac/metrics.hpp"
#include "test_support.hpp"

using namespace pointmac;
using pointmac::test::TempDir;

namespace {

std::vector<CompletionSample> eval_samples(int n, int budget = 112,
                                           std::uint64_t seed = 2024) {
  CorpusConfig cfg;
  cfg.train_count = 0;
  cfg.val_count = 0;
  cfg.test_count = n;
  cfg.point_budget = budget;
  cfg.seed = seed;
  std::vector<CompletionSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(make_sample(cfg, i));
  return out;
}

}  // namespace

TEST_CASE("a ground-truth prediction scores perfectly") {
  auto samples = eval_samples(3);
  std::vector<PointCloud> refs;
  for (const auto& s : samples) refs.push_back(s.complete);

  for (const auto& s : samples) {
    EvalRow row = score_completion(s.complete, s, &refs);
    CHECK(row.cd_l1 == 0.0);
    CHECK(row.cd_l2 == 0.0);
    CHECK(row.fscore == 1.0);
    CHECK(row.mmd == 0.0);  // the reference set contains the target itself
    CHECK(std::isfinite(row.fidelity));
    CHECK(!row.faulted);
    CHECK(row.id == s.id);
    CHECK(row.category == s.category);
  }
}

TEST_CASE("an empty prediction is a faulted all-blank row") {
  auto samples = eval_samples(1);
  EvalRow row = score_completion(PointCloud{}, samples[0], nullptr);
  CHECK(row.faulted);
  CHECK(std::isnan(row.cd_l2));
  CHECK(std::isnan(row.fscore));
  CHECK(std::isnan(row.mmd));
}

TEST_CASE("the reference set is optional") {
  auto samples = eval_samples(1);
  EvalRow row = score_completion(samples[0].complete, samples[0], nullptr);
  CHECK(std::isnan(row.mmd));
  CHECK(row.cd_l2 == 0.0);
}

TEST_CASE("aggregation is the plain mean over finite entries") {
  std::vector<EvalRow> rows(3);
  rows[0] = {"a", "sphere", 1.0, 2.0, 0.5, 0.1, 4.0, false};
  rows[1] = {"b", "sphere", 3.0, 4.0, 0.7, 0.3, 8.0, false};
  rows[2] = {"c", "box", 5.0, 6.0, 0.9, 0.5, std::nan(""), false};

  MetricAggregate all = aggregate_rows(rows);
  CHECK(all.count == 3);
  CHECK(all.cd_l1 == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(all.cd_l2 == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(all.fscore == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(all.mmd == doctest::Approx(6.0).epsilon(1e-9));  // NaN row skipped

  MetricAggregate spheres = aggregate_category(rows, "sphere");
  CHECK(spheres.count == 2);
  CHECK(spheres.cd_l1 == doctest::Approx(2.0).epsilon(1e-9));

  MetricAggregate none = aggregate_category(rows, "torus");
  CHECK(none.count == 0);
  CHECK(std::isnan(none.cd_l2));
}

TEST_CASE("evaluating a split produces one scored row per sample") {
  Model model(tiny_model_config());
  ParameterSet params = model.init_params(41);
  auto samples = eval_samples(4);

  EvalOptions opt;
  opt.split = "test";
  opt.variant = "E_full";
  EvalOutcome out = evaluate_split(model, params, samples, opt);
  REQUIRE(out.report.rows.size() == 4);
  CHECK(out.tta_reports.empty());
  for (std::size_t i = 0; i < 4; ++i) {
    const EvalRow& r = out.report.rows[i];
    CHECK(r.id == samples[i].id);
    CHECK(std::isfinite(r.cd_l2));
    CHECK(r.cd_l2 >= 0.0);
    CHECK(r.fscore >= 0.0);
    CHECK(r.fscore <= 1.0);
    CHECK(std::isfinite(r.mmd));
    CHECK(!r.faulted);
  }

  // the static path scores exactly the static completions
  EvalRow direct = score_completion(
      model.complete_cloud(params, samples[0].partial), samples[0], nullptr);
  CHECK(out.report.rows[0].cd_l2 == direct.cd_l2);

  EvalOptions no_mmd = opt;
  no_mmd.with_mmd = false;
  EvalOutcome out2 = evaluate_split(model, params, samples, no_mmd);
  for (const auto& r : out2.report.rows) CHECK(std::isnan(r.mmd));
}

TEST_CASE("adaptive evaluation carries the adaptation reports") {
  Model model(tiny_model_config());
  ParameterSet params = model.init_params(42);
  auto samples = eval_samples(2);

  EvalOptions opt;
  opt.use_tta = true;
  opt.tta.k = 1;
  opt.tta.eta = 2.5e-4;
  EvalOutcome out = evaluate_split(model, params, samples, opt);
  REQUIRE(out.tta_reports.size() == 2);
  CHECK(out.tta_reports[0].trajectory.size() == 2);
  CHECK(out.report.rows.size() == 2);
}

TEST_CASE("the report file scales chamfer by a thousand and sums up") {
  EvalReport report;
  report.options.variant = "E_full";
  report.options.split = "test";
  report.options.scale_note = "absolute";
  EvalRow r;
  r.id = "a";
  r.category = "sphere";
  r.cd_l1 = 0.5;       // -> 500 in the file
  r.cd_l2 = 0.25;      // -> 250
  r.fscore = 0.5;
  r.fidelity = 0.0625;
  r.mmd = std::nan("");  // -> empty cell
  report.rows = {r, r};
  report.rows[1].id = "b";
  report.rows[1].category = "box";
  report.rows[1].cd_l2 = 0.75;

  TempDir dir("eval_report");
  std::string path = dir.file("report.csv");
  write_eval_report(path, report);
  std::string text = test::slurp(path);

  CHECK(text.find("a,sphere,500,250,0.5,0.0625,\n") != std::string::npos);
  CHECK(text.find("b,box,500,750,0.5,0.0625,\n") != std::string::npos);
  CHECK(text.find("summary_box,box,") != std::string::npos);
  CHECK(text.find("summary_sphere,sphere,") != std::string::npos);
  CHECK(text.find("summary_overall,all,500,500,0.5,0.0625,\n") !=
        std::string::npos);
  CHECK(text.find("id,category,cd_l1_x1000") != std::string::npos);

  write_eval_report(dir.file("again.csv"), report);
  CHECK(test::slurp(dir.file("again.csv")) == text);
}

// Frozen end-to-end scoring run: a fixed corpus slice pushed through a
// fixed, untrained network. Guards the whole completion-and-scoring chain
// against silent numeric drift. Regenerate deliberately with
// POINTMAC_WRITE_GOLDEN=1 after an intentional change.
TEST_CASE("the frozen scoring fixture still reproduces") {
  const std::string golden_path =
      std::string(POINTMAC_TEST_DATA_DIR) + "/golden_eval.csv";

  Model model(tiny_model_config());
  ParameterSet params = model.init_params(77);
  auto samples = eval_samples(20);
  EvalOptions opt;
  opt.variant = "E_full";
  opt.split = "test";
  opt.scale_note = "absolute";
  EvalOutcome out = evaluate_split(model, params, samples, opt);

  if (std::getenv("POINTMAC_WRITE_GOLDEN") != nullptr) {
    write_eval_report(golden_path, out.report);
    MESSAGE("rewrote " << golden_path);
    return;
  }
  REQUIRE_MESSAGE(std::filesystem::exists(golden_path),
                  "fixture missing; run once with POINTMAC_WRITE_GOLDEN=1");

  // parse the data rows of the fixture
  std::ifstream in(golden_path);
  std::string line;
  std::size_t row_idx = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("id,", 0) == 0) continue;
    if (line.rfind("summary_", 0) == 0) break;
    REQUIRE(row_idx < out.report.rows.size());
    const EvalRow& now = out.report.rows[row_idx];

    std::istringstream ss(line);
    std::string id, cat, cell;
    std::getline(ss, id, ',');
    std::getline(ss, cat, ',');
    CHECK(id == now.id);
    CHECK(cat == now.category);
    double want[5];
    for (double& w : want) {
      std::getline(ss, cell, ',');
      w = cell.empty() ? std::nan("") : std::stod(cell);
    }
    double got[5] = {now.cd_l1 * 1000.0, now.cd_l2 * 1000.0, now.fscore,
                     now.fidelity, now.mmd};
    for (int m = 0; m < 5; ++m) {
      CAPTURE(now.id);
      CAPTURE(m);
      if (std::isnan(want[m])) {
        CHECK(std::isnan(got[m]));
      } else {
        CHECK(std::abs(got[m] - want[m]) <=
              1e-6 * std::max(1.0, std::abs(want[m])));
      }
    }
    ++row_idx;
  }
  CHECK(row_idx == out.report.rows.size());
}
