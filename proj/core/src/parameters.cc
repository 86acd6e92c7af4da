#include "qasl/parameters.h"

#include <cstring>

#include "qasl/errors.h"

namespace qasl {

std::string_view ParamKindName(ParamKind kind) {
  switch (kind) {
    case ParamKind::kWeight: return "weight";
    case ParamKind::kAttentionBias: return "attention_bias";
    case ParamKind::kOtherBias: return "other_bias";
  }
  return "weight";
}

ParamKind ParseParamKind(std::string_view name) {
  for (ParamKind k : {ParamKind::kWeight, ParamKind::kAttentionBias, ParamKind::kOtherBias}) {
    if (ParamKindName(k) == name) return k;
  }
  throw ParseError("unknown parameter kind '" + std::string(name) + "'", 0, "");
}

std::string_view ParamGroupName(ParamGroup group) {
  switch (group) {
    case ParamGroup::kEncoder: return "encoder";
    case ParamGroup::kAdapter: return "adapter";
    case ParamGroup::kHead: return "head";
  }
  return "encoder";
}

ParamGroup ParseParamGroup(std::string_view name) {
  for (ParamGroup g : {ParamGroup::kEncoder, ParamGroup::kAdapter, ParamGroup::kHead}) {
    if (ParamGroupName(g) == name) return g;
  }
  throw ParseError("unknown parameter group '" + std::string(name) + "'", 0, "");
}

size_t ParameterStore::Add(const ParameterSpec& spec) {
  if (Find(spec.path)) throw Error("duplicate_parameter", "parameter '" + spec.path + "' exists");
  params_.push_back({spec, Eigen::MatrixXd::Zero(spec.rows, spec.cols)});
  return params_.size() - 1;
}

std::optional<size_t> ParameterStore::Find(std::string_view path) const {
  for (size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].spec.path == path) return i;
  }
  return std::nullopt;
}

size_t ParameterStore::Require(std::string_view path) const {
  auto idx = Find(path);
  if (!idx) throw Error("missing_parameter", "no parameter '" + std::string(path) + "'");
  return *idx;
}

std::vector<ParameterSpec> ParameterStore::Layout() const {
  std::vector<ParameterSpec> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.spec);
  return out;
}

size_t ParameterStore::TotalCount() const {
  size_t n = 0;
  for (const auto& p : params_) n += p.spec.count();
  return n;
}

GradientBuffer ParameterStore::ZeroGradients() const {
  GradientBuffer g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.push_back(Eigen::MatrixXd::Zero(p.spec.rows, p.spec.cols));
  return g;
}

bool ParameterStore::BitwiseEqual(const ParameterStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (!(a.spec == b.spec)) return false;
    if (a.value.size() > 0 &&
        std::memcmp(a.value.data(), b.value.data(),
                    sizeof(double) * static_cast<size_t>(a.value.size())) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace qasl
