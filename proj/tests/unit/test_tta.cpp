#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "pointmac/tta.hpp"
#include "pointmac/training.hpp"
#include "test_support.hpp"

using namespace pointmac;
using pointmac::test::TempDir;

namespace {

struct Fixture {
  Model model{tiny_model_config()};
  ParameterSet params;
  std::vector<CompletionSample> samples;

  Fixture() {
    params = model.init_params(31);
    CorpusConfig cfg;
    cfg.train_count = 0;
    cfg.val_count = 0;
    cfg.test_count = 4;
    // partials stay below the tiny model's 8x8 folding grid
    cfg.point_budget = 112;
    cfg.seed = 808;
    for (int i = 0; i < 4; ++i) samples.push_back(make_sample(cfg, i));
  }

  TTAConfig tta(int k) const {
    TTAConfig c;
    c.k = k;
    c.eta = 2.5e-4;
    c.seed = 17;
    return c;
  }
};

}  // namespace

TEST_CASE("zero adaptation steps reproduce static inference bit-for-bit") {
  Fixture f;
  const auto& s = f.samples[0];
  TTAResult res = tta_adapt(f.model, f.params, s.partial, f.tta(0), s.id);
  PointCloud direct = f.model.complete_cloud(f.params, s.partial);
  CHECK(res.completion.points == direct.points);
  CHECK(res.report.trajectory.size() == 1);
  CHECK(std::isfinite(res.report.trajectory[0]));
  CHECK(res.report.encoder_delta_norm == 0.0);
  CHECK(!res.report.faulted);
}

TEST_CASE("adaptation moves the shared encoder and nothing else") {
  Fixture f;
  const auto& s = f.samples[0];
  ParameterSet adapted;
  TTAResult res = tta_adapt(f.model, f.params, s.partial, f.tta(3), s.id,
                            &s.complete.points, &adapted);
  REQUIRE(!res.report.faulted);

  CHECK(!bitwise_equal_group(f.params, adapted, ParamGroup::kPriShared));
  CHECK(bitwise_equal_group(f.params, adapted, ParamGroup::kPriDecoder));
  CHECK(bitwise_equal_group(f.params, adapted, ParamGroup::kAuxShared));
  CHECK(bitwise_equal_group(f.params, adapted, ParamGroup::kAuxSmr));
  CHECK(bitwise_equal_group(f.params, adapted, ParamGroup::kAuxAd));
  CHECK(adapted.lambda_smr == f.params.lambda_smr);
  CHECK(adapted.lambda_ad == f.params.lambda_ad);
  CHECK(res.report.encoder_delta_norm > 0.0);

  // the caller's checkpoint was never touched
  CHECK(bitwise_equal(f.params, f.model.init_params(31)));
}

TEST_CASE("trajectory has exactly k + 1 entries and descends the objective") {
  Fixture f;
  const auto& s = f.samples[1];
  TTAResult res = tta_adapt(f.model, f.params, s.partial, f.tta(5), s.id);
  REQUIRE(!res.report.faulted);
  REQUIRE(res.report.trajectory.size() == 6);
  for (double v : res.report.trajectory) CHECK(std::isfinite(v));
  // fixed draws (the default): the k steps descend one objective
  CHECK(res.report.trajectory.back() < res.report.trajectory.front());
  CHECK(res.report.k == 5);
  CHECK(res.report.wall_ms.size() == 5);
}

TEST_CASE("adaptation reports chamfer before and after against a reference") {
  Fixture f;
  const auto& s = f.samples[2];
  TTAResult res = tta_adapt(f.model, f.params, s.partial, f.tta(2), s.id,
                            &s.complete.points);
  CHECK(std::isfinite(res.report.cd_before));
  CHECK(std::isfinite(res.report.cd_after));

  TTAResult blind = tta_adapt(f.model, f.params, s.partial, f.tta(2), s.id);
  CHECK(std::isnan(blind.report.cd_before));
  CHECK(std::isnan(blind.report.cd_after));
  // the completion itself does not depend on whether a reference was given
  CHECK(blind.completion.points == res.completion.points);
}

TEST_CASE("fresh draws per step change the trajectory but stay deterministic") {
  Fixture f;
  const auto& s = f.samples[3];
  TTAConfig fixed = f.tta(4);
  TTAConfig redraw = f.tta(4);
  redraw.redraw_per_step = true;

  TTAResult a = tta_adapt(f.model, f.params, s.partial, fixed, s.id);
  TTAResult b = tta_adapt(f.model, f.params, s.partial, redraw, s.id);
  CHECK(a.report.trajectory != b.report.trajectory);

  TTAResult b2 = tta_adapt(f.model, f.params, s.partial, redraw, s.id);
  CHECK(b.report.trajectory == b2.report.trajectory);
  CHECK(b.completion.points == b2.completion.points);
}

TEST_CASE("raw zero logits turn the objective off entirely") {
  Fixture f;
  ParameterSet zeroed = f.params;
  zeroed.lambda_smr = 0.0;
  zeroed.lambda_ad = 0.0;
  TTAConfig cfg = f.tta(3);
  cfg.weight_form = TtaWeightForm::kRawLambda;

  const auto& s = f.samples[0];
  ParameterSet adapted;
  TTAResult res =
      tta_adapt(f.model, zeroed, s.partial, cfg, s.id, nullptr, &adapted);
  REQUIRE(!res.report.faulted);
  // weighted loss is identically zero -> zero gradient -> no movement
  CHECK(bitwise_equal(adapted, zeroed));
  CHECK(res.completion.points ==
        f.model.complete_cloud(zeroed, s.partial).points);
  for (double v : res.report.trajectory) CHECK(v == 0.0);
}

TEST_CASE("weight forms agree when the logits make them coincide") {
  Fixture f;
  // normalized weights of (1, 1) are (0.5, 0.5); raw logits (0.5, 0.5)
  // produce the same objective, so the whole adaptation coincides
  ParameterSet raw = f.params;
  raw.lambda_smr = 0.5;
  raw.lambda_ad = 0.5;
  TTAConfig norm_cfg = f.tta(2);
  TTAConfig raw_cfg = f.tta(2);
  raw_cfg.weight_form = TtaWeightForm::kRawLambda;

  const auto& s = f.samples[1];
  TTAResult a = tta_adapt(f.model, f.params, s.partial, norm_cfg, s.id);
  TTAResult b = tta_adapt(f.model, raw, s.partial, raw_cfg, s.id);
  CHECK(a.report.trajectory == b.report.trajectory);
  CHECK(a.completion.points == b.completion.points);
}

TEST_CASE("batched adaptation equals one-at-a-time, at any worker count") {
  Fixture f;
  TTAConfig cfg = f.tta(2);

  std::vector<TTAResult> seq = tta_batch(f.model, f.params, f.samples, cfg);
  REQUIRE(seq.size() == 4);

  TTAConfig par_cfg = cfg;
  par_cfg.workers = 4;
  std::vector<TTAResult> par = tta_batch(f.model, f.params, f.samples, par_cfg);
  REQUIRE(par.size() == 4);

  for (int i = 0; i < 4; ++i) {
    CHECK(par[i].completion.points == seq[i].completion.points);
    CHECK(par[i].report.trajectory == seq[i].report.trajectory);
    CHECK(par[i].report.id == seq[i].report.id);
  }

  // per-sample results do not depend on batch order
  std::vector<CompletionSample> reversed(f.samples.rbegin(), f.samples.rend());
  std::vector<TTAResult> rev = tta_batch(f.model, f.params, reversed, cfg);
  for (int i = 0; i < 4; ++i) {
    CHECK(rev[3 - i].completion.points == seq[i].completion.points);
  }

  for (const auto& r : seq) {
    CHECK(std::isfinite(r.report.cd_before));  // references came from samples
  }
}

TEST_CASE("a sample that cannot be encoded faults without sinking the batch") {
  Fixture f;
  std::vector<CompletionSample> mixed = f.samples;
  CompletionSample broken;
  broken.id = "broken_sample";
  broken.partial = test::random_cloud(3, 1);  // below the encoder minimum
  broken.complete = test::random_cloud(64, 2);
  mixed.insert(mixed.begin() + 1, broken);

  std::vector<TTAResult> results =
      tta_batch(f.model, f.params, mixed, f.tta(2));
  REQUIRE(results.size() == 5);
  CHECK(results[1].report.faulted);
  CHECK(!results[1].report.fault.empty());
  CHECK(results[1].report.trajectory.size() == 3);
  for (double v : results[1].report.trajectory) CHECK(std::isnan(v));
  // the neighbours are untouched
  CHECK(!results[0].report.faulted);
  CHECK(!results[2].report.faulted);
  std::vector<TTAResult> clean = tta_batch(f.model, f.params, f.samples, f.tta(2));
  CHECK(results[0].completion.points == clean[0].completion.points);
  CHECK(results[2].completion.points == clean[1].completion.points);
}

TEST_CASE("report files are deterministic and carry the trajectories") {
  Fixture f;
  std::vector<TTAResult> results =
      tta_batch(f.model, f.params, f.samples, f.tta(2));
  std::vector<TTAReport> reports;
  for (auto& r : results) reports.push_back(r.report);

  TempDir dir("tta_reports");
  write_tta_reports(dir.path(), "tta_report", reports);
  CHECK(std::filesystem::exists(dir.file("tta_report.csv")));
  CHECK(std::filesystem::exists(dir.file("tta_report.timing.csv")));
  CHECK(std::filesystem::exists(
      dir.file("tta_report_traj/" + f.samples[0].id + ".csv")));

  std::string first = test::slurp(dir.file("tta_report.csv"));
  CHECK(first.find("id,steps,faulted") != std::string::npos);

  // wall-clock jitter stays out of the canonical files
  for (auto& r : reports)
    for (auto& w : r.wall_ms) w += 55.5;
  write_tta_reports(dir.path(), "tta_report", reports);
  CHECK(test::slurp(dir.file("tta_report.csv")) == first);
}

TEST_CASE("invalid adaptation configs are rejected") {
  TTAConfig c;
  c.k = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TTAConfig{};
  c.eta = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TTAConfig{};
  c.workers = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(tta_weight_form_from_str("normalized") == TtaWeightForm::kNormalized);
  CHECK(tta_weight_form_from_str("raw_lambda") == TtaWeightForm::kRawLambda);
  CHECK_THROWS_AS(tta_weight_form_from_str("unit"), std::invalid_argument);
}
