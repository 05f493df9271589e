#include "pointmac/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pointmac {

namespace {

constexpr char kMagic[8] = {'P', 'M', 'A', 'C', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_i64(std::ostream& os, std::int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::int64_t get_i64(std::istream& is) {
  std::int64_t v;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
double get_f64(std::istream& is) {
  double v;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::string get_str(std::istream& is) {
  std::uint32_t n = get_u32(is);
  if (n > (1u << 24)) throw std::runtime_error("checkpoint: oversized string");
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  put_u32(os, kVersion);
  put_u64(os, ckpt.config_hash);
  put_str(os, ckpt.phase);
  put_i64(os, ckpt.iteration);
  put_str(os, ckpt.model_config.serialize());
  put_f64(os, ckpt.params.lambda_smr);
  put_f64(os, ckpt.params.lambda_ad);
  put_u32(os, kNumParamGroups);
  for (ParamGroup g : kAllParamGroups) {
    put_str(os, param_group_str(g));
    const auto& grp = ckpt.params.group(g);
    put_u32(os, static_cast<std::uint32_t>(grp.size()));
    for (const auto& [name, m] : grp) {
      put_str(os, name);
      put_i64(os, m.rows());
      put_i64(os, m.cols());
      os.write(reinterpret_cast<const char*>(m.data()),
               static_cast<std::streamsize>(sizeof(double) * m.size()));
    }
  }
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  std::uint32_t version = get_u32(is);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " +
                             std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config_hash = get_u64(is);
  ckpt.phase = get_str(is);
  ckpt.iteration = static_cast<long>(get_i64(is));
  ckpt.model_config = ModelConfig::deserialize(get_str(is));
  ckpt.params.lambda_smr = get_f64(is);
  ckpt.params.lambda_ad = get_f64(is);
  std::uint32_t n_groups = get_u32(is);
  if (n_groups != kNumParamGroups) {
    throw std::runtime_error("checkpoint: expected " +
                             std::to_string(kNumParamGroups) + " groups, got " +
                             std::to_string(n_groups));
  }
  bool seen[kNumParamGroups] = {};
  for (std::uint32_t gi = 0; gi < n_groups; ++gi) {
    ParamGroup g = param_group_from_str(get_str(is));
    seen[static_cast<int>(g)] = true;
    std::uint32_t n_tensors = get_u32(is);
    for (std::uint32_t ti = 0; ti < n_tensors; ++ti) {
      std::string name = get_str(is);
      long rows = static_cast<long>(get_i64(is));
      long cols = static_cast<long>(get_i64(is));
      if (rows < 0 || cols < 0 || rows * cols > (1L << 28)) {
        throw std::runtime_error("checkpoint: implausible tensor shape");
      }
      Mat m(rows, cols);
      is.read(reinterpret_cast<char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
      ckpt.params.create(g, name, std::move(m));
    }
  }
  if (!is) throw std::runtime_error("checkpoint: truncated file " + path);
  for (ParamGroup g : kAllParamGroups) {
    if (!seen[static_cast<int>(g)]) {
      throw std::runtime_error("checkpoint: missing group " +
                               param_group_str(g));
    }
  }
  return ckpt;
}

}  // namespace pointmac
