#include "pointmac/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pointmac/fps.hpp"
#include "pointmac/rng.hpp"

namespace pointmac {

namespace {

bool lex_less(const Points& pts, int a, int b) {
  for (int c = 0; c < 3; ++c) {
    if (pts(a, c) != pts(b, c)) return pts(a, c) < pts(b, c);
  }
  return false;
}

// Ball membership over distinct coordinates only, ordered by (distance,
// lexicographic position): the result depends on the point multiset, never
// on row order, and duplicated rows cannot crowd out distinct neighbors.
struct Grouping {
  std::vector<int> member_rows;
  std::vector<int> segment_ids;
  Mat rel;
};

Grouping build_groups(const Points& src, const Points& centers, double radius,
                      int cap) {
  const int n = static_cast<int>(src.rows());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (lex_less(src, a, b)) return true;
    if (lex_less(src, b, a)) return false;
    return a < b;
  });
  std::vector<int> distinct;
  distinct.reserve(n);
  for (int k = 0; k < n; ++k) {
    if (k > 0 && src.row(order[k]) == src.row(order[k - 1])) continue;
    distinct.push_back(order[k]);
  }

  const double r_sq = radius * radius;
  Grouping g;
  std::vector<std::pair<double, int>> cand;
  std::vector<Eigen::RowVector3d> rel_rows;
  for (int c = 0; c < centers.rows(); ++c) {
    const Eigen::RowVector3d ctr = centers.row(c);
    cand.clear();
    for (int j : distinct) {
      double d = (src.row(j) - ctr).squaredNorm();
      if (d <= r_sq) cand.emplace_back(d, j);
    }
    std::sort(cand.begin(), cand.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      if (lex_less(src, a.second, b.second)) return true;
      if (lex_less(src, b.second, a.second)) return false;
      return a.second < b.second;
    });
    int take = std::min<int>(cap, static_cast<int>(cand.size()));
    for (int k = 0; k < take; ++k) {
      g.member_rows.push_back(cand[k].second);
      g.segment_ids.push_back(c);
      rel_rows.push_back(src.row(cand[k].second) - ctr);
    }
  }
  g.rel.resize(static_cast<int>(rel_rows.size()), 3);
  for (size_t i = 0; i < rel_rows.size(); ++i) {
    g.rel.row(static_cast<int>(i)) = rel_rows[i];
  }
  return g;
}

Mat he_matrix(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  const double s = std::sqrt(2.0 / rows);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal() * s;
  }
  return m;
}

// 2D lattice coordinates in [-1, 1]^2, row-major, truncated to n rows.
Mat lattice_2d(int grid_cols, int grid_rows, int n) {
  Mat out(n, 2);
  for (int i = 0; i < n; ++i) {
    int gx = i % grid_cols;
    int gy = i / grid_cols;
    out(i, 0) = grid_cols == 1 ? 0.0 : -1.0 + 2.0 * gx / (grid_cols - 1);
    out(i, 1) = grid_rows == 1 ? 0.0 : -1.0 + 2.0 * gy / (grid_rows - 1);
  }
  return out;
}

// one lattice cell pattern per refined child of a coarse anchor
Mat refine_offsets(int factor, int n_rows) {
  int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(factor))));
  int rows = (factor + cols - 1) / cols;
  Mat cell = lattice_2d(cols, rows, factor);
  Mat out(n_rows, 2);
  for (int i = 0; i < n_rows; ++i) out.row(i) = cell.row(i % factor);
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  auto pos = [](int v, const char* name) {
    if (v < 1) {
      throw std::invalid_argument(std::string("model config: ") + name +
                                  " must be positive");
    }
  };
  pos(token_dim, "token_dim");
  pos(n_tokens, "n_tokens");
  pos(sa1_centroids, "sa1_centroids");
  pos(sa1_hidden, "sa1_hidden");
  pos(sa2_centroids, "sa2_centroids");
  pos(group_cap, "group_cap");
  pos(min_input_points, "min_input_points");
  pos(coarse_points, "coarse_points");
  pos(refine_factor, "refine_factor");
  pos(decoder_hidden, "decoder_hidden");
  pos(refine_hidden, "refine_hidden");
  pos(pe_hidden, "pe_hidden");
  pos(heads, "heads");
  pos(fold_grid, "fold_grid");
  pos(fold_hidden, "fold_hidden");
  pos(ad_expansion, "ad_expansion");
  pos(ad_hidden, "ad_hidden");
  if (sa1_radius <= 0 || sa2_radius <= 0) {
    throw std::invalid_argument("model config: radii must be positive");
  }
  if (token_dim % heads != 0) {
    throw std::invalid_argument("model config: token_dim must divide by heads");
  }
  if (!(attn_keep > 0.0 && attn_keep <= 1.0)) {
    throw std::invalid_argument("model config: attn_keep must be in (0, 1]");
  }
  if (offset_scale <= 0) {
    throw std::invalid_argument("model config: offset_scale must be positive");
  }
  if (min_input_points < n_tokens) {
    throw std::invalid_argument(
        "model config: min_input_points must cover n_tokens region centroids");
  }
}

std::string ModelConfig::serialize() const {
  std::ostringstream os;
  os.precision(17);
  os << "token_dim = " << token_dim << "\n";
  os << "n_tokens = " << n_tokens << "\n";
  os << "sa1_centroids = " << sa1_centroids << "\n";
  os << "sa1_radius = " << sa1_radius << "\n";
  os << "sa1_hidden = " << sa1_hidden << "\n";
  os << "sa2_centroids = " << sa2_centroids << "\n";
  os << "sa2_radius = " << sa2_radius << "\n";
  os << "group_cap = " << group_cap << "\n";
  os << "min_input_points = " << min_input_points << "\n";
  os << "coarse_points = " << coarse_points << "\n";
  os << "refine_factor = " << refine_factor << "\n";
  os << "decoder_hidden = " << decoder_hidden << "\n";
  os << "refine_hidden = " << refine_hidden << "\n";
  os << "pe_hidden = " << pe_hidden << "\n";
  os << "heads = " << heads << "\n";
  os << "attn_keep = " << attn_keep << "\n";
  os << "shared_qkv = " << (shared_qkv ? 1 : 0) << "\n";
  os << "fold_grid = " << fold_grid << "\n";
  os << "fold_hidden = " << fold_hidden << "\n";
  os << "ad_expansion = " << ad_expansion << "\n";
  os << "ad_hidden = " << ad_hidden << "\n";
  os << "shared_tsi = " << (shared_tsi ? 1 : 0) << "\n";
  os << "offset_scale = " << offset_scale << "\n";
  return os.str();
}

ModelConfig ModelConfig::deserialize(const std::string& text) {
  ModelConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("model config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    }
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t");
      size_t b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "token_dim") c.token_dim = std::stoi(val);
      else if (key == "n_tokens") c.n_tokens = std::stoi(val);
      else if (key == "sa1_centroids") c.sa1_centroids = std::stoi(val);
      else if (key == "sa1_radius") c.sa1_radius = std::stod(val);
      else if (key == "sa1_hidden") c.sa1_hidden = std::stoi(val);
      else if (key == "sa2_centroids") c.sa2_centroids = std::stoi(val);
      else if (key == "sa2_radius") c.sa2_radius = std::stod(val);
      else if (key == "group_cap") c.group_cap = std::stoi(val);
      else if (key == "min_input_points") c.min_input_points = std::stoi(val);
      else if (key == "coarse_points") c.coarse_points = std::stoi(val);
      else if (key == "refine_factor") c.refine_factor = std::stoi(val);
      else if (key == "decoder_hidden") c.decoder_hidden = std::stoi(val);
      else if (key == "refine_hidden") c.refine_hidden = std::stoi(val);
      else if (key == "pe_hidden") c.pe_hidden = std::stoi(val);
      else if (key == "heads") c.heads = std::stoi(val);
      else if (key == "attn_keep") c.attn_keep = std::stod(val);
      else if (key == "shared_qkv") c.shared_qkv = std::stoi(val) != 0;
      else if (key == "fold_grid") c.fold_grid = std::stoi(val);
      else if (key == "fold_hidden") c.fold_hidden = std::stoi(val);
      else if (key == "ad_expansion") c.ad_expansion = std::stoi(val);
      else if (key == "ad_hidden") c.ad_hidden = std::stoi(val);
      else if (key == "shared_tsi") c.shared_tsi = std::stoi(val) != 0;
      else if (key == "offset_scale") c.offset_scale = std::stod(val);
      else {
        throw std::invalid_argument("model config: unknown key '" + key + "'");
      }
    } catch (const std::logic_error& e) {
      throw std::invalid_argument("model config line " +
                                  std::to_string(lineno) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.token_dim = 32;
  c.n_tokens = 8;
  c.sa1_centroids = 16;
  c.sa1_radius = 0.30;
  c.sa1_hidden = 16;
  c.sa2_centroids = 8;
  c.sa2_radius = 0.55;
  c.group_cap = 16;
  c.min_input_points = 8;
  c.coarse_points = 16;
  c.refine_factor = 4;
  c.decoder_hidden = 32;
  c.refine_hidden = 16;
  c.pe_hidden = 16;
  c.heads = 2;
  c.fold_grid = 8;
  c.fold_hidden = 16;
  c.ad_expansion = 4;
  c.ad_hidden = 16;
  c.validate();
  return c;
}

Model::Model(ModelConfig config) : cfg_(std::move(config)) { cfg_.validate(); }

ParameterSet Model::init_params(std::uint64_t seed) const {
  Rng rng(derive_seed(seed, "init"));
  ParameterSet p;
  const int d = cfg_.token_dim;

  auto two_layer = [&](ParamGroup g, const std::string& prefix, int in,
                       int hidden, int out) {
    p.create(g, prefix + ".w1", he_matrix(in, hidden, rng));
    p.create(g, prefix + ".b1", Mat::Zero(1, hidden));
    p.create(g, prefix + ".w2", he_matrix(hidden, out, rng));
    p.create(g, prefix + ".b2", Mat::Zero(1, out));
  };

  // shared encoder
  two_layer(ParamGroup::kPriShared, "sa1", 3, cfg_.sa1_hidden, cfg_.sa1_hidden);
  two_layer(ParamGroup::kPriShared, "sa2", cfg_.sa1_hidden + 3, d, d);

  // completion decoder
  two_layer(ParamGroup::kPriDecoder, "coarse", d, cfg_.decoder_hidden,
            3 * cfg_.coarse_points);
  two_layer(ParamGroup::kPriDecoder, "refine", d + 3 + 2, cfg_.refine_hidden,
            3);

  // token integrator(s); one block when shared, one per head otherwise
  auto make_tsi = [&](const std::string& prefix) {
    p.create(ParamGroup::kAuxShared, prefix + ".w1", he_matrix(d, 2 * d, rng));
    p.create(ParamGroup::kAuxShared, prefix + ".b1", Mat::Zero(1, 2 * d));
    p.create(ParamGroup::kAuxShared, prefix + ".gain", Mat::Ones(1, 2 * d));
    p.create(ParamGroup::kAuxShared, prefix + ".bias", Mat::Zero(1, 2 * d));
    p.create(ParamGroup::kAuxShared, prefix + ".w2",
             he_matrix(2 * d, cfg_.n_tokens * d, rng));
    p.create(ParamGroup::kAuxShared, prefix + ".b2",
             Mat::Zero(1, cfg_.n_tokens * d));
  };
  if (cfg_.shared_tsi) {
    make_tsi("tsi");
  } else {
    make_tsi("tsi_smr");
    make_tsi("tsi_ad");
  }

  // masked-reconstruction head
  two_layer(ParamGroup::kAuxSmr, "pe", 3, cfg_.pe_hidden, d);
  if (cfg_.shared_qkv) {
    p.create(ParamGroup::kAuxSmr, "attn.w", he_matrix(d, d, rng));
  } else {
    p.create(ParamGroup::kAuxSmr, "attn.wq", he_matrix(d, d, rng));
    p.create(ParamGroup::kAuxSmr, "attn.wk", he_matrix(d, d, rng));
    p.create(ParamGroup::kAuxSmr, "attn.wv", he_matrix(d, d, rng));
  }
  two_layer(ParamGroup::kAuxSmr, "fold1", d + 2, cfg_.fold_hidden, 3);
  two_layer(ParamGroup::kAuxSmr, "fold2", d + 3, cfg_.fold_hidden, 3);

  // denoising head
  two_layer(ParamGroup::kAuxAd, "ref", d + 3, cfg_.ad_hidden,
            3 * cfg_.ad_expansion);

  // Start the loss-balance logits at 1: the weights still open at an even
  // 0.5/0.5 split (1 + 1^2 on both sides), but unlike 0 this is not a
  // stationary point of the weight form, so calibration can actually move.
  p.lambda_smr = 1.0;
  p.lambda_ad = 1.0;
  return p;
}

int Model::mlp2(ForwardCtx& ctx, int x, ParamGroup g, const std::string& prefix,
                bool relu_out) const {
  Tape& t = ctx.tape;
  int h = t.relu(t.add_bias_row(t.matmul(x, ctx.param(g, prefix + ".w1")),
                                ctx.param(g, prefix + ".b1")));
  int o = t.add_bias_row(t.matmul(h, ctx.param(g, prefix + ".w2")),
                         ctx.param(g, prefix + ".b2"));
  return relu_out ? t.relu(o) : o;
}

int Model::sa_stage(ForwardCtx& ctx, const Points& positions, int features,
                    int n_centroids, double radius, const std::string& prefix,
                    Points* out_positions) const {
  const int n = std::min<int>(n_centroids, static_cast<int>(positions.rows()));
  std::vector<int> cidx = farthest_point_indices_canonical(positions, n);
  Points centers(n, 3);
  for (int i = 0; i < n; ++i) centers.row(i) = positions.row(cidx[i]);

  Grouping g = build_groups(positions, centers, radius, cfg_.group_cap);
  Tape& t = ctx.tape;
  int rel = t.constant(g.rel);
  int in_node = rel;
  if (features >= 0) {
    in_node = t.concat_cols({t.gather_rows(features, g.member_rows), rel});
  }
  int h = mlp2(ctx, in_node, ParamGroup::kPriShared, prefix, true);
  int pooled = t.segment_max_rows(h, g.segment_ids, n);
  if (out_positions) *out_positions = centers;
  return pooled;
}

int Model::encode(ForwardCtx& ctx, const Points& pts) const {
  if (pts.rows() < cfg_.min_input_points) {
    throw std::invalid_argument(
        "encoder: input smaller than the grouping hierarchy supports (" +
        std::to_string(pts.rows()) + " < " +
        std::to_string(cfg_.min_input_points) + ")");
  }
  Points p1;
  int f1 = sa_stage(ctx, pts, -1, cfg_.sa1_centroids, cfg_.sa1_radius, "sa1",
                    &p1);
  int f2 = sa_stage(ctx, p1, f1, cfg_.sa2_centroids, cfg_.sa2_radius, "sa2",
                    nullptr);
  return ctx.tape.max_over_rows(f2);
}

DecodeDetail Model::decode(ForwardCtx& ctx, int z) const {
  Tape& t = ctx.tape;
  const int nc = cfg_.coarse_points;
  const int k = cfg_.refine_factor;
  const int n_fine = nc * k;

  int flat = mlp2(ctx, z, ParamGroup::kPriDecoder, "coarse", false);
  DecodeDetail out;
  out.coarse = t.reshape_rowmajor(flat, nc, 3);

  int zrep = t.broadcast_row(z, n_fine);
  int anchors = t.repeat_rows_interleave(out.coarse, k);
  int grid = t.constant(refine_offsets(k, n_fine));
  int feat = t.concat_cols({zrep, anchors, grid});
  int h = t.relu(
      t.add_bias_row(t.matmul(feat, ctx.param(ParamGroup::kPriDecoder,
                                              "refine.w1")),
                     ctx.param(ParamGroup::kPriDecoder, "refine.b1")));
  int off = t.tanh_(
      t.add_bias_row(t.matmul(h, ctx.param(ParamGroup::kPriDecoder,
                                           "refine.w2")),
                     ctx.param(ParamGroup::kPriDecoder, "refine.b2")));
  out.fine = t.add(anchors, t.scale(off, cfg_.offset_scale));
  out.anchor_index.resize(n_fine);
  for (int i = 0; i < n_fine; ++i) out.anchor_index[i] = i / k;
  return out;
}

int Model::tsi_tokens(ForwardCtx& ctx, int z, const std::string& prefix) const {
  Tape& t = ctx.tape;
  if (t.value(z).rows() != 1 || t.value(z).cols() != cfg_.token_dim) {
    throw std::invalid_argument("tsi: expected a 1 x token_dim code");
  }
  auto par = [&](const char* name) {
    return ctx.param(ParamGroup::kAuxShared, prefix + "." + name);
  };
  int h = t.add_bias_row(t.matmul(z, par("w1")), par("b1"));
  int ln = t.layer_norm_rows(h);
  int affine = t.add(t.cmul(ln, par("gain")), par("bias"));
  int a = t.relu(affine);
  int o = t.add_bias_row(t.matmul(a, par("w2")), par("b2"));
  return t.reshape_rowmajor(o, cfg_.n_tokens, cfg_.token_dim);
}

int masked_attention(Tape& tape, int q, int k, int v, const Mat& mask,
                     int heads) {
  const int d = static_cast<int>(tape.value(q).cols());
  if (heads < 1 || d % heads != 0) {
    throw std::invalid_argument("attention: token dim must divide by heads");
  }
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<int> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    int qh = tape.slice_cols(q, h * dh, dh);
    int kh = tape.slice_cols(k, h * dh, dh);
    int vh = tape.slice_cols(v, h * dh, dh);
    int logits = tape.scale(tape.matmul_nt(qh, kh), scale);
    int weights = tape.rows_softmax_masked(logits, mask);
    outs.push_back(tape.matmul(weights, vh));
  }
  return heads == 1 ? outs[0] : tape.concat_cols(outs);
}

Mat draw_attention_mask(int l, double keep_prob, std::uint64_t seed) {
  if (l < 1) throw std::invalid_argument("attention mask: empty");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw std::invalid_argument("attention mask: keep_prob in (0, 1]");
  }
  Rng rng(derive_seed(seed, "attn-mask"));
  Mat m(l, l);
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) {
      m(i, j) = rng.uniform01() < keep_prob ? 1.0 : 0.0;
    }
  }
  return m;
}

Model::SmrResult Model::smr_forward(ForwardCtx& ctx, const PointCloud& input,
                                    double mask_ratio,
                                    std::uint64_t seed) const {
  require_nonempty(input, "smr");
  const int n_in = input.count();
  if (n_in > cfg_.fold_grid * cfg_.fold_grid) {
    throw std::invalid_argument(
        "smr: folding grid smaller than the input cloud");
  }
  auto [visible, masked] =
      spatial_mask(input, mask_ratio, derive_seed(seed, "smr-mask"));
  if (visible.count() < cfg_.min_input_points) {
    throw std::invalid_argument(
        "smr: visible remainder too small for the encoder");
  }

  Tape& t = ctx.tape;
  int z = encode(ctx, visible.points);
  int group_tokens =
      tsi_tokens(ctx, z, cfg_.shared_tsi ? "tsi" : "tsi_smr");  // N x D

  // region tokens: learned positional encoding of visible-space centroids
  std::vector<int> qidx =
      farthest_point_indices_canonical(visible.points, cfg_.n_tokens);
  Points centroids(cfg_.n_tokens, 3);
  for (int i = 0; i < cfg_.n_tokens; ++i) {
    centroids.row(i) = visible.points.row(qidx[i]);
  }
  int region = mlp2(ctx, t.constant(centroids), ParamGroup::kAuxSmr, "pe",
                    false);  // N x D

  int tokens = t.concat_rows({group_tokens, region});  // L = 2N
  const int l = 2 * cfg_.n_tokens;
  int q, k, v;
  if (cfg_.shared_qkv) {
    int proj = t.matmul(tokens, ctx.param(ParamGroup::kAuxSmr, "attn.w"));
    q = k = v = proj;
  } else {
    q = t.matmul(tokens, ctx.param(ParamGroup::kAuxSmr, "attn.wq"));
    k = t.matmul(tokens, ctx.param(ParamGroup::kAuxSmr, "attn.wk"));
    v = t.matmul(tokens, ctx.param(ParamGroup::kAuxSmr, "attn.wv"));
  }
  Mat mask =
      draw_attention_mask(l, cfg_.attn_keep, derive_seed(seed, "smr-attn"));
  int att = masked_attention(t, q, k, v, mask, cfg_.heads);
  int pooled = t.max_over_rows(att);  // 1 x D

  // two-fold decoding of the full cloud from the pooled token feature
  Mat grid = lattice_2d(cfg_.fold_grid, cfg_.fold_grid, n_in);
  int gb = t.broadcast_row(pooled, n_in);
  int f1in = t.concat_cols({gb, t.constant(grid)});
  int f1 = mlp2(ctx, f1in, ParamGroup::kAuxSmr, "fold1", false);
  int f2in = t.concat_cols({gb, f1});
  int rec = mlp2(ctx, f2in, ParamGroup::kAuxSmr, "fold2", false);

  SmrResult out;
  out.reconstruction = rec;
  out.loss = t.chamfer_l2_to_const(rec, input.points);
  return out;
}

Model::AdResult Model::ad_forward(ForwardCtx& ctx, const PointCloud& input,
                                  const CorruptionSpec& corruption,
                                  std::uint64_t seed) const {
  require_nonempty(input, "ad");
  PointCloud noisy =
      inject_noise(input, corruption, derive_seed(seed, "ad-noise"));

  Tape& t = ctx.tape;
  int z = encode(ctx, noisy.points);
  int tokens = tsi_tokens(ctx, z, cfg_.shared_tsi ? "tsi" : "tsi_ad");
  int pooled = t.max_over_rows(tokens);  // 1 x D

  const int m = noisy.count();
  const int eps = cfg_.ad_expansion;
  int gb = t.broadcast_row(pooled, m);
  int feat = t.concat_cols({gb, t.constant(noisy.points)});
  int h = t.relu(
      t.add_bias_row(t.matmul(feat, ctx.param(ParamGroup::kAuxAd, "ref.w1")),
                     ctx.param(ParamGroup::kAuxAd, "ref.b1")));
  int off = t.tanh_(
      t.add_bias_row(t.matmul(h, ctx.param(ParamGroup::kAuxAd, "ref.w2")),
                     ctx.param(ParamGroup::kAuxAd, "ref.b2")));
  int off3 = t.reshape_rowmajor(off, m * eps, 3);

  Mat anchors(m * eps, 3);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < eps; ++j) anchors.row(i * eps + j) = noisy.points.row(i);
  }
  int out_pts = t.add(t.scale(off3, cfg_.offset_scale), t.constant(anchors));

  AdResult out;
  out.denoised = out_pts;
  out.loss = t.chamfer_l2_to_const(out_pts, input.points);
  return out;
}

Model::PrimaryResult Model::primary_forward(ForwardCtx& ctx,
                                            const PointCloud& partial,
                                            const Points& complete) const {
  require_nonempty(partial, "primary");
  if (complete.rows() < 1) {
    throw std::invalid_argument("primary: empty reference");
  }
  int z = encode(ctx, partial.points);
  DecodeDetail d = decode(ctx, z);
  PrimaryResult out;
  out.prediction = d.fine;
  out.loss = ctx.tape.chamfer_l2_to_const(d.fine, complete);
  return out;
}

PointCloud Model::complete_cloud(const ParameterSet& params,
                                 const PointCloud& partial) const {
  ForwardCtx ctx(params);
  int z = encode(ctx, partial.points);
  DecodeDetail d = decode(ctx, z);
  PointCloud out;
  out.points = ctx.tape.value(d.fine);
  out.normalization = partial.normalization;
  return out;
}

}  // namespace pointmac
