#pragma once

#include <string>
#include <vector>

#include "pointmac/cloud_io.hpp"
#include "pointmac/dataset.hpp"
#include "pointmac/model.hpp"
#include "pointmac/params.hpp"
#include "pointmac/tta.hpp"

namespace pointmac {

// Depth-shaded orthographic scatter render of a cloud, written as a binary
// PPM image. Pure function of the points: identical clouds give identical
// bytes.
void render_scatter_ppm(const Points& pts, const std::string& path,
                        int size = 384);

struct ExportResult {
  std::vector<std::string> files;  // paths written, in write order
};

// For every sample: completes the partial input (statically, or with
// adaptation when tta is non-null), writes the input and completion clouds
// in the requested format, and renders before/after scatter images.
ExportResult export_artifacts(const Model& model, const ParameterSet& params,
                              const std::vector<CompletionSample>& samples,
                              const TTAConfig* tta, const std::string& out_dir,
                              CloudFormat format);

}  // namespace pointmac
