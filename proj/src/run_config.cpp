#include "pointmac/run_config.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pointmac/rng.hpp"

namespace pointmac {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("config: bad value '" + value + "' for " + key);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    int v = std::stoi(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  bad_value(key, value);
}

}  // namespace

TrainConfig RunConfig::warm_train_config() const {
  TrainConfig c = train;
  c.seed = seed;
  if (warm_epochs >= 0.0) c.epochs = warm_epochs;
  return c;
}

TrainConfig RunConfig::meta_train_config() const {
  TrainConfig c = train;
  c.seed = seed;
  if (meta_epochs >= 0.0) c.epochs = meta_epochs;
  return c;
}

TTAConfig RunConfig::resolved_tta_config() const {
  TTAConfig c = tta;
  c.seed = seed;
  c.lambda_form = train.lambda_form;
  // adaptation reuses the corpus corruption settings for its own mask and
  // noise draws; no occlusion is applied at test time
  c.corruption.mask_ratio = corpus.mask_ratio;
  c.corruption.noise_sigma_range = corpus.noise_sigma_range;
  c.corruption.clip_bound = corpus.clip_bound;
  return c;
}

CorpusConfig RunConfig::resolved_corpus_config() const {
  CorpusConfig c = corpus;
  c.seed = seed;
  return c;
}

void RunConfig::validate() const {
  resolved_corpus_config().validate();
  model.validate();
  warm_train_config().validate();
  meta_train_config().validate();
  resolved_tta_config().validate();
}

void apply_run_config_entry(RunConfig& c, const std::string& key,
                            const std::string& value) {
  if (key == "run.seed") c.seed = parse_u64(key, value);

  else if (key == "corpus.train_count") c.corpus.train_count = parse_int(key, value);
  else if (key == "corpus.val_count") c.corpus.val_count = parse_int(key, value);
  else if (key == "corpus.test_count") c.corpus.test_count = parse_int(key, value);
  else if (key == "corpus.point_budget") c.corpus.point_budget = parse_int(key, value);
  else if (key == "corpus.keep_lo") c.corpus.keep_lo = parse_double(key, value);
  else if (key == "corpus.keep_hi") c.corpus.keep_hi = parse_double(key, value);
  else if (key == "corpus.noise_lo") c.corpus.noise_sigma_range.first = parse_double(key, value);
  else if (key == "corpus.noise_hi") c.corpus.noise_sigma_range.second = parse_double(key, value);
  else if (key == "corpus.clip") c.corpus.clip_bound = parse_double(key, value);
  else if (key == "corpus.mask_ratio") c.corpus.mask_ratio = parse_double(key, value);

  else if (key == "model.token_dim") c.model.token_dim = parse_int(key, value);
  else if (key == "model.n_tokens") c.model.n_tokens = parse_int(key, value);
  else if (key == "model.sa1_centroids") c.model.sa1_centroids = parse_int(key, value);
  else if (key == "model.sa1_radius") c.model.sa1_radius = parse_double(key, value);
  else if (key == "model.sa1_hidden") c.model.sa1_hidden = parse_int(key, value);
  else if (key == "model.sa2_centroids") c.model.sa2_centroids = parse_int(key, value);
  else if (key == "model.sa2_radius") c.model.sa2_radius = parse_double(key, value);
  else if (key == "model.group_cap") c.model.group_cap = parse_int(key, value);
  else if (key == "model.min_input_points") c.model.min_input_points = parse_int(key, value);
  else if (key == "model.coarse_points") c.model.coarse_points = parse_int(key, value);
  else if (key == "model.refine_factor") c.model.refine_factor = parse_int(key, value);
  else if (key == "model.decoder_hidden") c.model.decoder_hidden = parse_int(key, value);
  else if (key == "model.refine_hidden") c.model.refine_hidden = parse_int(key, value);
  else if (key == "model.pe_hidden") c.model.pe_hidden = parse_int(key, value);
  else if (key == "model.heads") c.model.heads = parse_int(key, value);
  else if (key == "model.attn_keep") c.model.attn_keep = parse_double(key, value);
  else if (key == "model.shared_qkv") c.model.shared_qkv = parse_bool(key, value);
  else if (key == "model.fold_grid") c.model.fold_grid = parse_int(key, value);
  else if (key == "model.fold_hidden") c.model.fold_hidden = parse_int(key, value);
  else if (key == "model.ad_expansion") c.model.ad_expansion = parse_int(key, value);
  else if (key == "model.ad_hidden") c.model.ad_hidden = parse_int(key, value);
  else if (key == "model.shared_tsi") c.model.shared_tsi = parse_bool(key, value);
  else if (key == "model.offset_scale") c.model.offset_scale = parse_double(key, value);

  else if (key == "train.alpha") c.train.alpha = parse_double(key, value);
  else if (key == "train.beta") c.train.beta = parse_double(key, value);
  else if (key == "train.gamma") c.train.gamma = parse_double(key, value);
  else if (key == "train.eta_phi") c.train.eta_phi = parse_double(key, value);
  else if (key == "train.mu") c.train.mu = parse_double(key, value);
  else if (key == "train.k_train") c.train.k_train = parse_int(key, value);
  else if (key == "train.batch_size") c.train.batch_size = parse_int(key, value);
  else if (key == "train.epochs") c.train.epochs = parse_double(key, value);
  else if (key == "train.warm_epochs") c.warm_epochs = parse_double(key, value);
  else if (key == "train.meta_epochs") c.meta_epochs = parse_double(key, value);
  else if (key == "train.clip_norm") c.train.clip_norm = parse_double(key, value);
  else if (key == "train.divergence_factor") c.train.divergence_factor = parse_double(key, value);
  else if (key == "train.checkpoint_every") c.train.checkpoint_every = parse_int(key, value);
  else if (key == "train.freeze_lambda") c.train.freeze_lambda = parse_bool(key, value);

  else if (key == "lambda.form") {
    c.train.lambda_form = lambda_form_from_str(value);
    c.tta.lambda_form = c.train.lambda_form;
  }
  else if (key == "lambda.lr") c.train.eta_lambda = parse_double(key, value);

  else if (key == "meta.inner_target") {
    if (value != "aux_heads" && value != "shared_encoder") bad_value(key, value);
    c.train.inner_target = value;
  }

  else if (key == "tta.k") c.tta.k = parse_int(key, value);
  else if (key == "tta.lr") c.tta.eta = parse_double(key, value);
  else if (key == "tta.weight_form") c.tta.weight_form = tta_weight_form_from_str(value);
  else if (key == "tta.redraw_per_step") c.tta.redraw_per_step = parse_bool(key, value);
  else if (key == "tta.workers") c.tta.workers = parse_int(key, value);

  else if (key == "eval.mmd") c.eval_mmd = parse_bool(key, value);

  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'section.key = value'");
    }
    try {
      apply_run_config_entry(c, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": " + e.what());
    }
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

bool apply_seed_env(RunConfig& config) {
  const char* env = std::getenv("POINTMAC_SEED");
  if (env == nullptr || *env == '\0') return false;
  config.seed = parse_u64("POINTMAC_SEED", env);
  return true;
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  os << "run.seed = " << seed << "\n";

  os << "corpus.train_count = " << corpus.train_count << "\n";
  os << "corpus.val_count = " << corpus.val_count << "\n";
  os << "corpus.test_count = " << corpus.test_count << "\n";
  os << "corpus.point_budget = " << corpus.point_budget << "\n";
  os << "corpus.keep_lo = " << fmt17(corpus.keep_lo) << "\n";
  os << "corpus.keep_hi = " << fmt17(corpus.keep_hi) << "\n";
  os << "corpus.noise_lo = " << fmt17(corpus.noise_sigma_range.first) << "\n";
  os << "corpus.noise_hi = " << fmt17(corpus.noise_sigma_range.second) << "\n";
  os << "corpus.clip = " << fmt17(corpus.clip_bound) << "\n";
  os << "corpus.mask_ratio = " << fmt17(corpus.mask_ratio) << "\n";

  {
    // reuse the model's own stable serialization, one key per line
    std::istringstream ms(model.serialize());
    std::string line;
    while (std::getline(ms, line)) {
      if (!line.empty()) os << "model." << line << "\n";
    }
  }

  os << "train.alpha = " << fmt17(train.alpha) << "\n";
  os << "train.beta = " << fmt17(train.beta) << "\n";
  os << "train.gamma = " << fmt17(train.gamma) << "\n";
  os << "train.eta_phi = " << fmt17(train.eta_phi) << "\n";
  os << "train.mu = " << fmt17(train.mu) << "\n";
  os << "train.k_train = " << train.k_train << "\n";
  os << "train.batch_size = " << train.batch_size << "\n";
  os << "train.epochs = " << fmt17(train.epochs) << "\n";
  os << "train.warm_epochs = "
     << fmt17(warm_epochs >= 0.0 ? warm_epochs : train.epochs) << "\n";
  os << "train.meta_epochs = "
     << fmt17(meta_epochs >= 0.0 ? meta_epochs : train.epochs) << "\n";
  os << "train.clip_norm = " << fmt17(train.clip_norm) << "\n";
  os << "train.divergence_factor = " << fmt17(train.divergence_factor) << "\n";
  os << "train.checkpoint_every = " << train.checkpoint_every << "\n";
  os << "train.freeze_lambda = " << (train.freeze_lambda ? 1 : 0) << "\n";

  os << "lambda.form = " << lambda_form_str(train.lambda_form) << "\n";
  os << "lambda.lr = " << fmt17(train.eta_lambda) << "\n";
  os << "meta.inner_target = " << train.inner_target << "\n";

  os << "tta.k = " << tta.k << "\n";
  os << "tta.lr = " << fmt17(tta.eta) << "\n";
  os << "tta.weight_form = " << tta_weight_form_str(tta.weight_form) << "\n";
  os << "tta.redraw_per_step = " << (tta.redraw_per_step ? 1 : 0) << "\n";
  os << "tta.workers = " << tta.workers << "\n";

  os << "eval.mmd = " << (eval_mmd ? 1 : 0) << "\n";
  return os.str();
}

std::uint64_t RunConfig::config_hash() const { return hash_str(serialize()); }

void write_resolved_config(const RunConfig& config, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path p = fs::path(dir) / "config.resolved.txt";
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << config.serialize();
  if (!out) throw std::runtime_error("failed writing " + p.string());
}

std::uint64_t file_content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hash_str(ss.str());
}

}  // namespace pointmac
