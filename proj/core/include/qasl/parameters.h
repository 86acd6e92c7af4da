#ifndef QASL_PARAMETERS_H_
#define QASL_PARAMETERS_H_

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace qasl {

enum class ParamKind { kWeight, kAttentionBias, kOtherBias };
std::string_view ParamKindName(ParamKind kind);
ParamKind ParseParamKind(std::string_view name);

// Which part of the model owns a parameter.
enum class ParamGroup { kEncoder, kAdapter, kHead };
std::string_view ParamGroupName(ParamGroup group);
ParamGroup ParseParamGroup(std::string_view name);

// Shape-level description of one parameter tensor.
struct ParameterSpec {
  std::string path;
  ParamKind kind = ParamKind::kWeight;
  ParamGroup group = ParamGroup::kEncoder;
  int rows = 0;
  int cols = 0;

  size_t count() const { return static_cast<size_t>(rows) * static_cast<size_t>(cols); }
  bool operator==(const ParameterSpec&) const = default;
};

struct Parameter {
  ParameterSpec spec;
  Eigen::MatrixXd value;
};

using GradientBuffer = std::vector<Eigen::MatrixXd>;

// Owns every tensor of a model. Indices are stable: parameters are only
// ever appended.
class ParameterStore {
 public:
  size_t Add(const ParameterSpec& spec);  // zero-initialized

  size_t size() const { return params_.size(); }
  Parameter& at(size_t i) { return params_[i]; }
  const Parameter& at(size_t i) const { return params_[i]; }
  const Eigen::MatrixXd& value(size_t i) const { return params_[i].value; }

  std::optional<size_t> Find(std::string_view path) const;
  size_t Require(std::string_view path) const;  // throws Error

  std::vector<ParameterSpec> Layout() const;
  size_t TotalCount() const;

  // Zero tensors shaped like the parameters.
  GradientBuffer ZeroGradients() const;

  // True when every tensor is bitwise identical.
  bool BitwiseEqual(const ParameterStore& other) const;

 private:
  std::vector<Parameter> params_;
};

// Set of parameter paths that an optimizer may update.
struct TrainableMask {
  std::set<std::string> paths;

  bool Contains(std::string_view path) const { return paths.count(std::string(path)) > 0; }
  bool operator==(const TrainableMask&) const = default;
};

}  // namespace qasl

#endif  // QASL_PARAMETERS_H_
