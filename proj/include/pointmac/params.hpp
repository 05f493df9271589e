#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "pointmac/tape.hpp"

namespace pointmac {

// The five disjoint parameter groups. Shared-encoder weights live in
// kPriShared; test-time adaptation touches only that group, while the
// auxiliary inner loop touches only the kAux* groups.
enum class ParamGroup {
  kPriShared = 0,
  kPriDecoder,
  kAuxShared,
  kAuxSmr,
  kAuxAd,
};

constexpr int kNumParamGroups = 5;
constexpr std::array<ParamGroup, kNumParamGroups> kAllParamGroups = {
    ParamGroup::kPriShared, ParamGroup::kPriDecoder, ParamGroup::kAuxShared,
    ParamGroup::kAuxSmr, ParamGroup::kAuxAd};

std::string param_group_str(ParamGroup g);
ParamGroup param_group_from_str(const std::string& s);

// Named gradients mirroring the parameter layout.
class GradientSet {
 public:
  void accumulate(ParamGroup g, const std::string& name, const Mat& grad);
  void add(const GradientSet& other);
  void scale(double s);
  const Mat* find(ParamGroup g, const std::string& name) const;
  double squared_norm() const;
  bool all_finite() const;
  const std::map<std::string, Mat>& group(ParamGroup g) const;

 private:
  std::array<std::map<std::string, Mat>, kNumParamGroups> groups_;
};

// All learnable tensors, partitioned by group, plus the two loss-balance
// logits. Copyable: a copy is a bit-exact snapshot.
class ParameterSet {
 public:
  void create(ParamGroup g, const std::string& name, Mat init);
  Mat& at(ParamGroup g, const std::string& name);
  const Mat& at(ParamGroup g, const std::string& name) const;
  bool has(ParamGroup g, const std::string& name) const;
  const std::map<std::string, Mat>& group(ParamGroup g) const;
  std::map<std::string, Mat>& group_mut(ParamGroup g);

  // Plain gradient descent on the listed groups only; entries of other
  // groups are untouched even if gradients exist for them.
  void sgd_step(const GradientSet& grads,
                const std::vector<ParamGroup>& groups, double lr);

  int tensor_count() const;
  long scalar_count() const;

  double lambda_smr = 0.0;
  double lambda_ad = 0.0;

 private:
  std::array<std::map<std::string, Mat>, kNumParamGroups> groups_;
};

// Exact binary comparison (memcmp semantics per tensor, including lambda).
bool bitwise_equal(const ParameterSet& a, const ParameterSet& b);
bool bitwise_equal_group(const ParameterSet& a, const ParameterSet& b,
                         ParamGroup g);

// Binds parameters into a tape as gradient-carrying leaves and remembers
// the mapping so gradients can be harvested after backward().
class ForwardCtx {
 public:
  explicit ForwardCtx(const ParameterSet& params) : params_(&params) {}

  Tape tape;

  // Returns the tape node for the named parameter, creating it on first use.
  int param(ParamGroup g, const std::string& name);

  GradientSet harvest() const;

 private:
  struct Binding {
    ParamGroup group;
    std::string name;
    int node;
  };
  const ParameterSet* params_;
  std::map<std::pair<int, std::string>, int> lookup_;
  std::vector<Binding> bindings_;
};

}  // namespace pointmac
