#include "pointmac/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include "pointmac/metrics.hpp"

namespace pointmac {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// NaN marks a metric that was not computed; its CSV cell stays empty.
std::string fmt_opt(double v) { return std::isnan(v) ? std::string() : fmt17(v); }

std::string hex16(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Mean over the finite entries of one metric column, in row order.
struct ColumnMean {
  double sum = 0.0;
  int n = 0;
  void add(double v) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  double mean() const { return n == 0 ? kNaN : sum / n; }
};

MetricAggregate aggregate_impl(const std::vector<EvalRow>& rows,
                               const std::string* category) {
  MetricAggregate agg;
  ColumnMean l1, l2, fs, fid, md;
  for (const auto& r : rows) {
    if (category != nullptr && r.category != *category) continue;
    ++agg.count;
    l1.add(r.cd_l1);
    l2.add(r.cd_l2);
    fs.add(r.fscore);
    fid.add(r.fidelity);
    md.add(r.mmd);
  }
  agg.cd_l1 = l1.mean();
  agg.cd_l2 = l2.mean();
  agg.fscore = fs.mean();
  agg.fidelity = fid.mean();
  agg.mmd = md.mean();
  return agg;
}

}  // namespace

MetricAggregate aggregate_rows(const std::vector<EvalRow>& rows) {
  return aggregate_impl(rows, nullptr);
}

MetricAggregate aggregate_category(const std::vector<EvalRow>& rows,
                                   const std::string& category) {
  return aggregate_impl(rows, &category);
}

EvalRow score_completion(const PointCloud& prediction,
                         const CompletionSample& sample,
                         const std::vector<PointCloud>* references) {
  EvalRow row;
  row.id = sample.id;
  row.category = sample.category;
  if (prediction.count() == 0) {
    row.faulted = true;
    row.cd_l1 = row.cd_l2 = row.fscore = row.fidelity = row.mmd = kNaN;
    return row;
  }
  row.cd_l1 = chamfer_l1(prediction, sample.complete);
  row.cd_l2 = chamfer_l2(prediction, sample.complete);
  row.fscore = fscore(prediction, sample.complete, kFscoreThreshold);
  row.fidelity = fidelity(sample.partial, prediction);
  row.mmd = references != nullptr ? mmd(prediction, *references) : kNaN;
  return row;
}

EvalOutcome evaluate_split(const Model& model, const ParameterSet& checkpoint,
                           const std::vector<CompletionSample>& samples,
                           const EvalOptions& options) {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");

  EvalOutcome out;
  out.report.options = options;

  std::vector<PointCloud> references;
  if (options.with_mmd) {
    references.reserve(samples.size());
    for (const auto& s : samples) references.push_back(s.complete);
  }

  std::vector<PointCloud> completions(samples.size());
  std::vector<bool> faulted(samples.size(), false);
  if (options.use_tta) {
    std::vector<TTAResult> results =
        tta_batch(model, checkpoint, samples, options.tta);
    for (std::size_t i = 0; i < results.size(); ++i) {
      completions[i] = std::move(results[i].completion);
      faulted[i] = results[i].report.faulted;
      out.tta_reports.push_back(std::move(results[i].report));
    }
  } else {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      completions[i] = model.complete_cloud(checkpoint, samples[i].partial);
    }
  }

  out.report.rows.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EvalRow row = score_completion(completions[i], samples[i],
                                   options.with_mmd ? &references : nullptr);
    row.faulted = row.faulted || faulted[i];
    out.report.rows.push_back(std::move(row));
  }
  return out;
}

void write_eval_report(const std::string& path, const EvalReport& report) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + path);

  const EvalOptions& o = report.options;
  int n_faulted = 0;
  for (const auto& r : report.rows) n_faulted += r.faulted ? 1 : 0;

  out << "# completion quality report\n";
  out << "# split = " << o.split << "\n";
  out << "# variant = " << o.variant << "\n";
  out << "# config_hash = " << hex16(o.config_hash) << "\n";
  out << "# corpus_hash = " << hex16(o.corpus_hash) << "\n";
  out << "# tta = " << (o.use_tta ? 1 : 0);
  if (o.use_tta) out << " (k = " << o.tta.k << ")";
  out << "\n";
  out << "# scale = " << o.scale_note;
  if (o.scale_note == "trend") {
    out << " (toy-corpus run: orderings are meaningful, magnitudes are not)";
  }
  out << "\n";
  out << "# chamfer columns are x1000: cd_l1 averages absolute distances, "
         "cd_l2 squared distances\n";
  out << "# fscore threshold = " << fmt17(kFscoreThreshold)
      << "; fidelity = mean distance from each input point to the "
         "prediction; mmd = min squared chamfer to the reference set\n";
  out << "# summary rows average the finite entries of each column\n";
  out << "# faulted_samples = " << n_faulted << "\n";
  out << "id,category,cd_l1_x1000,cd_l2_x1000,fscore,fidelity,mmd\n";

  auto emit = [&](const std::string& id, const std::string& category,
                  double l1, double l2, double fsc, double fid, double md) {
    out << id << ',' << category << ',' << fmt_opt(l1 * 1000.0) << ','
        << fmt_opt(l2 * 1000.0) << ',' << fmt_opt(fsc) << ',' << fmt_opt(fid)
        << ',' << fmt_opt(md) << '\n';
  };

  for (const auto& r : report.rows) {
    emit(r.id, r.category, r.cd_l1, r.cd_l2, r.fscore, r.fidelity, r.mmd);
  }

  std::set<std::string> categories;
  for (const auto& r : report.rows) categories.insert(r.category);
  for (const auto& c : categories) {
    MetricAggregate a = aggregate_category(report.rows, c);
    emit("summary_" + c, c, a.cd_l1, a.cd_l2, a.fscore, a.fidelity, a.mmd);
  }
  MetricAggregate a = aggregate_rows(report.rows);
  emit("summary_overall", "all", a.cd_l1, a.cd_l2, a.fscore, a.fidelity, a.mmd);

  out.close();
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace pointmac
