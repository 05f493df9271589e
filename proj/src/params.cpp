#include "pointmac/params.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace pointmac {

namespace {

int gi(ParamGroup g) { return static_cast<int>(g); }

bool same_bits(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

std::string param_group_str(ParamGroup g) {
  switch (g) {
    case ParamGroup::kPriShared: return "pri_shared";
    case ParamGroup::kPriDecoder: return "pri_decoder";
    case ParamGroup::kAuxShared: return "aux_shared";
    case ParamGroup::kAuxSmr: return "aux_smr";
    case ParamGroup::kAuxAd: return "aux_ad";
  }
  return "unknown";
}

ParamGroup param_group_from_str(const std::string& s) {
  for (ParamGroup g : kAllParamGroups) {
    if (param_group_str(g) == s) return g;
  }
  throw std::invalid_argument("unknown parameter group: " + s);
}

void GradientSet::accumulate(ParamGroup g, const std::string& name,
                             const Mat& grad) {
  auto& slot = groups_[gi(g)][name];
  if (slot.size() == 0) {
    slot = grad;
  } else {
    if (slot.rows() != grad.rows() || slot.cols() != grad.cols()) {
      throw std::invalid_argument("gradient shape mismatch for " + name);
    }
    slot += grad;
  }
}

void GradientSet::add(const GradientSet& other) {
  for (ParamGroup g : kAllParamGroups) {
    for (const auto& [name, grad] : other.groups_[gi(g)]) {
      accumulate(g, name, grad);
    }
  }
}

void GradientSet::scale(double s) {
  for (auto& grp : groups_) {
    for (auto& [name, grad] : grp) grad *= s;
  }
}

const Mat* GradientSet::find(ParamGroup g, const std::string& name) const {
  const auto& grp = groups_[gi(g)];
  auto it = grp.find(name);
  return it == grp.end() ? nullptr : &it->second;
}

double GradientSet::squared_norm() const {
  double sum = 0.0;
  for (const auto& grp : groups_) {
    for (const auto& [name, grad] : grp) sum += grad.squaredNorm();
  }
  return sum;
}

bool GradientSet::all_finite() const {
  for (const auto& grp : groups_) {
    for (const auto& [name, grad] : grp) {
      if (!grad.allFinite()) return false;
    }
  }
  return true;
}

const std::map<std::string, Mat>& GradientSet::group(ParamGroup g) const {
  return groups_[gi(g)];
}

void ParameterSet::create(ParamGroup g, const std::string& name, Mat init) {
  auto& grp = groups_[gi(g)];
  if (grp.count(name)) {
    throw std::invalid_argument("parameter already exists: " + name);
  }
  grp[name] = std::move(init);
}

Mat& ParameterSet::at(ParamGroup g, const std::string& name) {
  auto& grp = groups_[gi(g)];
  auto it = grp.find(name);
  if (it == grp.end()) {
    throw std::out_of_range("no parameter " + param_group_str(g) + "/" + name);
  }
  return it->second;
}

const Mat& ParameterSet::at(ParamGroup g, const std::string& name) const {
  const auto& grp = groups_[gi(g)];
  auto it = grp.find(name);
  if (it == grp.end()) {
    throw std::out_of_range("no parameter " + param_group_str(g) + "/" + name);
  }
  return it->second;
}

bool ParameterSet::has(ParamGroup g, const std::string& name) const {
  return groups_[gi(g)].count(name) > 0;
}

const std::map<std::string, Mat>& ParameterSet::group(ParamGroup g) const {
  return groups_[gi(g)];
}

std::map<std::string, Mat>& ParameterSet::group_mut(ParamGroup g) {
  return groups_[gi(g)];
}

void ParameterSet::sgd_step(const GradientSet& grads,
                            const std::vector<ParamGroup>& groups, double lr) {
  for (ParamGroup g : groups) {
    for (const auto& [name, grad] : grads.group(g)) {
      Mat& p = at(g, name);  // throws on unknown names
      if (p.rows() != grad.rows() || p.cols() != grad.cols()) {
        throw std::invalid_argument("sgd_step: shape mismatch for " + name);
      }
      p -= lr * grad;
    }
  }
}

int ParameterSet::tensor_count() const {
  int n = 0;
  for (const auto& grp : groups_) n += static_cast<int>(grp.size());
  return n;
}

long ParameterSet::scalar_count() const {
  long n = 0;
  for (const auto& grp : groups_) {
    for (const auto& [name, m] : grp) n += m.size();
  }
  return n;
}

bool bitwise_equal_group(const ParameterSet& a, const ParameterSet& b,
                         ParamGroup g) {
  const auto& ga = a.group(g);
  const auto& gb = b.group(g);
  if (ga.size() != gb.size()) return false;
  auto ia = ga.begin();
  auto ib = gb.begin();
  for (; ia != ga.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !same_bits(ia->second, ib->second)) {
      return false;
    }
  }
  return true;
}

bool bitwise_equal(const ParameterSet& a, const ParameterSet& b) {
  for (ParamGroup g : kAllParamGroups) {
    if (!bitwise_equal_group(a, b, g)) return false;
  }
  return std::memcmp(&a.lambda_smr, &b.lambda_smr, sizeof(double)) == 0 &&
         std::memcmp(&a.lambda_ad, &b.lambda_ad, sizeof(double)) == 0;
}

int ForwardCtx::param(ParamGroup g, const std::string& name) {
  auto key = std::make_pair(static_cast<int>(g), name);
  auto it = lookup_.find(key);
  if (it != lookup_.end()) return it->second;
  int node = tape.input(params_->at(g, name));
  lookup_.emplace(key, node);
  bindings_.push_back({g, name, node});
  return node;
}

GradientSet ForwardCtx::harvest() const {
  GradientSet out;
  for (const auto& b : bindings_) {
    const Mat& g = tape.grad(b.node);
    if (g.size() == 0) continue;
    out.accumulate(b.group, b.name, g);
  }
  return out;
}

}  // namespace pointmac
