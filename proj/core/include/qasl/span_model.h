#ifndef QASL_SPAN_MODEL_H_
#define QASL_SPAN_MODEL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qasl/encoder.h"
#include "qasl/layers.h"
#include "qasl/parameters.h"
#include "qasl/types.h"

namespace qasl {

struct ForwardResult {
  std::vector<double> start_logits;
  std::vector<double> end_logits;
  // Token layout: offset map into the context, anchor position, context
  // token range and special positions.
  EncodedInput input;
  std::vector<std::string> warnings;
};

// Token positions an example trains towards. Unanswerable examples (and
// answers lost to truncation) target the anchor.
struct AnswerTarget {
  size_t start = 0;
  size_t end = 0;
  bool lost_to_truncation = false;
};

AnswerTarget TargetPositions(const EncodedInput& input, const QAExample& ex);

// Encoder plus a start/end span head. All tensors live in one
// ParameterStore; copies are deep.
class SpanModel {
 public:
  SpanModel(const ModelConfig& cfg, uint64_t seed,
            std::string separator = std::string(SlotOntology::kDefaultSeparator));

  // Rebuilds a model around an existing store (checkpoint loading). The
  // store layout must match the config.
  SpanModel(const ModelConfig& cfg, std::string separator,
            std::optional<AdapterConfig> adapters, ParameterStore store);

  SpanModel(const SpanModel& other);
  SpanModel& operator=(const SpanModel& other);
  SpanModel(SpanModel&&) noexcept = default;
  SpanModel& operator=(SpanModel&&) noexcept = default;

  const ModelConfig& config() const { return cfg_; }
  const std::string& separator() const { return separator_; }
  const Encoder& encoder() const { return *encoder_; }
  const ParameterStore& parameters() const { return params_; }
  ParameterStore& mutable_parameters() { return params_; }
  const std::optional<AdapterConfig>& adapter_config() const { return adapters_; }
  bool has_adapters() const { return adapters_.has_value(); }

  ForwardResult Forward(std::string_view question, std::string_view context) const;

  // Sum of start and end cross-entropy, softmax restricted to the anchor and
  // context tokens. Gradients are accumulated into `sink` when it has a
  // buffer.
  double LossAndGradient(const QAExample& ex, const nn::GradSink& sink) const;
  double Loss(const QAExample& ex) const { return LossAndGradient(ex, {}); }

  // Appends zero-initialized-up bottleneck adapters to every encoder layer.
  void InsertAdapters(const AdapterConfig& cfg, uint64_t seed);
  void ReinitializeHead(uint64_t seed);

  std::vector<size_t> HeadIndices() const;

 private:
  struct HeadRefs {
    std::optional<nn::LinearRef> dense;
    nn::LinearRef out;
  };

  void BindAll();
  nn::Matrix HeadForward(const nn::Matrix& hidden, nn::Matrix* dense_pre,
                         nn::Matrix* dense_act) const;

  ModelConfig cfg_;
  std::string separator_;
  std::unique_ptr<Encoder> encoder_;
  ParameterStore params_;
  std::optional<AdapterConfig> adapters_;
  HeadRefs head_;
};

std::vector<ParameterSpec> HeadLayout(const ModelConfig& cfg);

// Shape-only layout of a toy-backbone model, for counting without
// allocating tensors.
std::vector<ParameterSpec> ModelLayout(const ModelConfig& cfg,
                                       const std::optional<AdapterConfig>& adapters);

// Returns a copy of `model` with adapters inserted.
SpanModel insert_adapters(const SpanModel& model, const AdapterConfig& cfg, uint64_t seed = 0);

// full: everything. head_only: head. bitfit: attention biases (all biases
// with `all_biases`) plus head. adapters: adapter parameters plus head.
// Throws ConfigError for adapters when none are inserted.
TrainableMask select_trainable(const std::vector<ParameterSpec>& layout, Regime regime,
                               bool all_biases = false);
TrainableMask select_trainable(const SpanModel& model, Regime regime, bool all_biases = false);

size_t count_trainable(const std::vector<ParameterSpec>& layout, const TrainableMask& mask);
size_t count_trainable(const SpanModel& model, const TrainableMask& mask);

// Per-index flags for a mask, aligned with the model's store.
std::vector<bool> MaskFlags(const ParameterStore& ps, const TrainableMask& mask);

}  // namespace qasl

#endif  // QASL_SPAN_MODEL_H_
