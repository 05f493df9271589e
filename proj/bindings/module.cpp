#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "pointmac/checkpoint.hpp"
#include "pointmac/cloud_io.hpp"
#include "pointmac/dataset.hpp"
#include "pointmac/fps.hpp"
#include "pointmac/lambda_calibration.hpp"
#include "pointmac/metrics.hpp"
#include "pointmac/model.hpp"
#include "pointmac/rng.hpp"
#include "pointmac/shapes.hpp"
#include "pointmac/tta.hpp"

namespace py = pybind11;
using namespace pointmac;

namespace {

PointCloud as_cloud(const Points& p) {
  PointCloud c;
  c.points = p;
  return c;
}

// Inference handle around a checkpoint: static completion and per-sample
// adaptation from Python without touching the C++ training loop.
class Completer {
 public:
  explicit Completer(const std::string& checkpoint_path)
      : ckpt_(load_checkpoint(checkpoint_path)), model_(ckpt_.model_config) {}

  Points complete(const Points& partial) const {
    return model_.complete_cloud(ckpt_.params, as_cloud(partial)).points;
  }

  py::tuple adapt_complete(const Points& partial, const std::string& sample_id,
                           int k, double lr, std::uint64_t seed,
                           double mask_ratio, double noise_lo, double noise_hi,
                           double clip) const {
    TTAConfig cfg;
    cfg.k = k;
    cfg.eta = lr;
    cfg.seed = seed;
    cfg.corruption.mask_ratio = mask_ratio;
    cfg.corruption.noise_sigma_range = {noise_lo, noise_hi};
    cfg.corruption.clip_bound = clip;
    TTAResult res =
        tta_adapt(model_, ckpt_.params, as_cloud(partial), cfg, sample_id);
    return py::make_tuple(res.completion.points, res.report.trajectory,
                          res.report.faulted);
  }

  std::string phase() const { return ckpt_.phase; }
  long iteration() const { return ckpt_.iteration; }
  py::tuple lambda_logits() const {
    return py::make_tuple(ckpt_.params.lambda_smr, ckpt_.params.lambda_ad);
  }

 private:
  Checkpoint ckpt_;
  Model model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Point cloud completion with meta-auxiliary per-sample test-time "
      "adaptation: metrics, sampling, synthetic shapes, and checkpoint "
      "inference.";

  m.def(
      "chamfer_l1",
      [](const Points& x, const Points& y) {
        return chamfer_l1(as_cloud(x), as_cloud(y));
      },
      py::arg("x"), py::arg("y"),
      "Symmetric mean nearest-neighbor distance (unsquared).");
  m.def(
      "chamfer_l2",
      [](const Points& x, const Points& y) {
        return chamfer_l2(as_cloud(x), as_cloud(y));
      },
      py::arg("x"), py::arg("y"),
      "Symmetric mean squared nearest-neighbor distance.");
  m.def(
      "fscore",
      [](const Points& pred, const Points& gt, double threshold) {
        return fscore(as_cloud(pred), as_cloud(gt), threshold);
      },
      py::arg("pred"), py::arg("gt"), py::arg("threshold") = 0.01,
      "Harmonic mean of precision and recall at the distance threshold.");
  m.def(
      "fidelity",
      [](const Points& input, const Points& pred) {
        return fidelity(as_cloud(input), as_cloud(pred));
      },
      py::arg("input"), py::arg("pred"),
      "Mean distance from each input point to its nearest predicted point.");

  m.def(
      "farthest_point_indices",
      [](const Points& pts, int n, std::uint64_t seed) {
        return farthest_point_indices(pts, n, seed);
      },
      py::arg("points"), py::arg("n"), py::arg("seed") = 0,
      "Greedy max-min subset; the seed picks the starting point.");

  m.def(
      "generate_shape",
      [](const std::string& family, const std::vector<double>& params,
         int budget, std::uint64_t seed) {
        ShapeSpec spec;
        spec.family = shape_family_from_str(family);
        spec.params = params;
        spec.point_budget = budget;
        spec.seed = seed;
        return generate_complete(spec).points;
      },
      py::arg("family"), py::arg("params") = std::vector<double>{},
      py::arg("budget") = 1024, py::arg("seed") = 0,
      "Sample a normalized surface cloud: sphere, box, cylinder, torus, or "
      "composite.");

  m.def(
      "make_training_pair",
      [](int index, int budget, std::uint64_t seed) {
        CorpusConfig cfg;
        cfg.point_budget = budget;
        cfg.seed = seed;
        CompletionSample s = make_sample(cfg, index);
        return py::make_tuple(s.partial.points, s.complete.points, s.category);
      },
      py::arg("index"), py::arg("budget") = 1024, py::arg("seed") = 0,
      "Deterministic (partial, complete, family) sample of the synthetic "
      "corpus.");

  m.def(
      "compute_weights",
      [](double lambda_smr, double lambda_ad, const std::string& form) {
        LambdaWeights w =
            compute_weights(lambda_smr, lambda_ad, lambda_form_from_str(form));
        return py::make_tuple(w.w_smr, w.w_ad);
      },
      py::arg("lambda_smr"), py::arg("lambda_ad"),
      py::arg("form") = "softmax",
      "Normalized loss-balance weights from the two logits; always sums to "
      "1.");

  m.def("derive_seed", &derive_seed, py::arg("root"), py::arg("stream"),
        py::arg("index") = 0,
        "Stateless child seed for a named stream and index.");

  m.def(
      "read_cloud",
      [](const std::string& path) { return read_cloud(path).points; },
      py::arg("path"), "Load an .xyz or ascii .ply cloud as an (n, 3) array.");
  m.def(
      "write_cloud",
      [](const std::string& path, const Points& pts) {
        write_cloud(path, as_cloud(pts));
      },
      py::arg("path"), py::arg("points"),
      "Write an (n, 3) array as .xyz or ascii .ply, by extension.");

  py::class_<Completer>(m, "Completer",
                        "Checkpoint-backed completion with optional "
                        "per-sample test-time adaptation.")
      .def(py::init<const std::string&>(), py::arg("checkpoint_path"))
      .def("complete", &Completer::complete, py::arg("partial"),
           "Static completion of an (n, 3) partial cloud.")
      .def("adapt_complete", &Completer::adapt_complete, py::arg("partial"),
           py::arg("sample_id") = "sample", py::arg("k") = 3,
           py::arg("lr") = 2.5e-4, py::arg("seed") = 0,
           py::arg("mask_ratio") = 0.4, py::arg("noise_lo") = 0.001,
           py::arg("noise_hi") = 0.005, py::arg("clip") = 0.02,
           "Adapt a private encoder copy for k steps, then complete. Returns "
           "(completion, loss_trajectory, faulted).")
      .def_property_readonly("phase", &Completer::phase)
      .def_property_readonly("iteration", &Completer::iteration)
      .def_property_readonly("lambda_logits", &Completer::lambda_logits);

  m.attr("__version__") = "0.1.0";
}
