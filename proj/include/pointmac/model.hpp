#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pointmac/corruption.hpp"
#include "pointmac/params.hpp"
#include "pointmac/point_cloud.hpp"

namespace pointmac {

struct ModelConfig {
  int token_dim = 128;  // D: global code and token width
  int n_tokens = 64;    // N: group tokens emitted by the integrator

  // hierarchical encoder: two set-abstraction stages with ball grouping
  int sa1_centroids = 128;
  double sa1_radius = 0.15;
  int sa1_hidden = 64;
  int sa2_centroids = 32;
  double sa2_radius = 0.30;
  int group_cap = 48;  // max distinct member positions per ball
  int min_input_points = 64;

  // coarse-to-fine completion decoder
  int coarse_points = 128;  // N_c
  int refine_factor = 8;    // output = N_c * refine_factor points
  int decoder_hidden = 256;
  int refine_hidden = 64;

  // masked-reconstruction head
  int pe_hidden = 64;
  int heads = 4;
  double attn_keep = 0.9;  // Bernoulli keep probability of the dual mask
  bool shared_qkv = true;  // one shared projection vs separate Q/K/V
  int fold_grid = 32;      // folding seed grid is fold_grid^2 points
  int fold_hidden = 64;

  // denoising head
  int ad_expansion = 4;  // children per input point
  int ad_hidden = 64;

  // One token integrator serving both aux heads (default) or a private
  // integrator per head.
  bool shared_tsi = true;

  double offset_scale = 0.05;  // tanh-bounded coordinate offsets

  int complete_points() const { return coarse_points * refine_factor; }
  void validate() const;  // throws std::invalid_argument

  std::string serialize() const;  // key = value lines, stable order
  static ModelConfig deserialize(const std::string& text);
};

// Small configuration for fast tests; every pathway exercised.
ModelConfig tiny_model_config();

struct DecodeDetail {
  int coarse = -1;  // N_c x 3 node
  int fine = -1;    // complete_points() x 3 node
  std::vector<int> anchor_index;  // fine row -> coarse row it refines
};

class Model {
 public:
  explicit Model(ModelConfig config);
  const ModelConfig& cfg() const { return cfg_; }

  ParameterSet init_params(std::uint64_t seed) const;

  // Shared encoder: point cloud -> 1 x D global code node. The global
  // vector depends only on the point multiset (order- and duplicate-
  // invariant bitwise).
  int encode(ForwardCtx& ctx, const Points& pts) const;

  // Completion decoder: global code -> coarse anchors -> refined cloud.
  DecodeDetail decode(ForwardCtx& ctx, int z) const;

  // Token integrator: 1 x D -> N x D. The prefix names the parameter block
  // ("tsi" when shared, "tsi_smr"/"tsi_ad" with private integrators).
  int tsi_tokens(ForwardCtx& ctx, int z,
                 const std::string& prefix = "tsi") const;

  struct SmrResult {
    int reconstruction = -1;  // |P| x 3 node
    int loss = -1;            // symmetric squared chamfer vs the input
  };
  SmrResult smr_forward(ForwardCtx& ctx, const PointCloud& input,
                        double mask_ratio, std::uint64_t seed) const;

  struct AdResult {
    int denoised = -1;  // (expansion * |P|) x 3 node
    int loss = -1;      // symmetric squared chamfer vs the clean input
  };
  AdResult ad_forward(ForwardCtx& ctx, const PointCloud& input,
                      const CorruptionSpec& corruption,
                      std::uint64_t seed) const;

  // encode + decode + chamfer against the reference cloud.
  struct PrimaryResult {
    int prediction = -1;
    int loss = -1;
  };
  PrimaryResult primary_forward(ForwardCtx& ctx, const PointCloud& partial,
                                const Points& complete) const;

  // Convenience inference without gradient bookkeeping.
  PointCloud complete_cloud(const ParameterSet& params,
                            const PointCloud& partial) const;

 private:
  int mlp2(ForwardCtx& ctx, int x, ParamGroup g, const std::string& prefix,
           bool relu_out) const;
  int sa_stage(ForwardCtx& ctx, const Points& positions, int features,
               int n_centroids, double radius, const std::string& prefix,
               Points* out_positions) const;

  ModelConfig cfg_;
};

// Single-mask multi-head attention over L tokens. q, k, v are L x D nodes,
// mask is an L x L 0/1 matrix applied to the logits of every head; fully
// masked rows produce zero vectors. Scale is 1/sqrt(D/heads).
int masked_attention(Tape& tape, int q, int k, int v, const Mat& mask,
                     int heads);

// Draws the 0/1 keep mask (i.i.d. Bernoulli per entry).
Mat draw_attention_mask(int l, double keep_prob, std::uint64_t seed);

}  // namespace pointmac
