#include "qasl/span_model.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qasl/errors.h"
#include "qasl/utf8.h"

namespace qasl {

using nn::Matrix;

AnswerTarget TargetPositions(const EncodedInput& input, const QAExample& ex) {
  AnswerTarget target{input.anchor, input.anchor, false};
  if (ex.is_impossible || !ex.answer_text || !ex.answer_start) return target;
  const size_t a = *ex.answer_start;
  const size_t b = a + utf8::Length(*ex.answer_text);
  std::optional<size_t> first, last;
  for (size_t t = input.context_begin; t < input.context_end; ++t) {
    const CharRange& r = input.offsets[t];
    if (!first && r.end > a) first = t;
    if (r.start < b) last = t;
  }
  const bool covered = input.context_end > input.context_begin &&
                       input.offsets[input.context_end - 1].end >= b;
  if (!first || !last || *first > *last || !covered) {
    target.lost_to_truncation = true;
    return target;
  }
  target.start = *first;
  target.end = *last;
  return target;
}

std::vector<ParameterSpec> HeadLayout(const ModelConfig& cfg) {
  std::vector<ParameterSpec> out;
  const int e = cfg.hidden_size;
  const ParamGroup g = ParamGroup::kHead;
  if (cfg.head_variant == HeadVariant::kFfn2) {
    const int h = cfg.EffectiveHeadHidden();
    out.push_back({"head.dense.weight", ParamKind::kWeight, g, e, h});
    out.push_back({"head.dense.bias", ParamKind::kOtherBias, g, 1, h});
    out.push_back({"head.out.weight", ParamKind::kWeight, g, h, 2});
  } else {
    out.push_back({"head.out.weight", ParamKind::kWeight, g, e, 2});
  }
  out.push_back({"head.out.bias", ParamKind::kOtherBias, g, 1, 2});
  return out;
}

std::vector<ParameterSpec> ModelLayout(const ModelConfig& cfg,
                                       const std::optional<AdapterConfig>& adapters) {
  ToyEncoder encoder(cfg);
  auto layout = encoder.Layout(adapters);
  auto head = HeadLayout(cfg);
  layout.insert(layout.end(), head.begin(), head.end());
  return layout;
}

SpanModel::SpanModel(const ModelConfig& cfg, uint64_t seed, std::string separator)
    : cfg_(cfg),
      separator_(std::move(separator)),
      encoder_(std::make_unique<ToyEncoder>(cfg, separator_)) {
  for (const auto& spec : encoder_->Layout(std::nullopt)) params_.Add(spec);
  for (const auto& spec : HeadLayout(cfg_)) params_.Add(spec);
  Rng rng(seed);
  encoder_->Initialize(params_, rng, false);
  BindAll();
  ReinitializeHead(DeriveSeed(seed, 1));
}

SpanModel::SpanModel(const ModelConfig& cfg, std::string separator,
                     std::optional<AdapterConfig> adapters, ParameterStore store)
    : cfg_(cfg),
      separator_(std::move(separator)),
      encoder_(std::make_unique<ToyEncoder>(cfg, separator_)),
      params_(std::move(store)),
      adapters_(std::move(adapters)) {
  auto expected = ModelLayout(cfg_, adapters_);
  auto actual = params_.Layout();
  auto by_path = [](const ParameterSpec& a, const ParameterSpec& b) { return a.path < b.path; };
  std::sort(expected.begin(), expected.end(), by_path);
  std::sort(actual.begin(), actual.end(), by_path);
  if (expected != actual) {
    throw Error("layout_mismatch", "parameter layout does not match the model config");
  }
  if (adapters_) {
    static_cast<ToyEncoder&>(*encoder_).set_adapter_nonlinearity(adapters_->nonlinearity);
  }
  BindAll();
}

SpanModel::SpanModel(const SpanModel& other)
    : cfg_(other.cfg_),
      separator_(other.separator_),
      encoder_(other.encoder_->Clone()),
      params_(other.params_),
      adapters_(other.adapters_),
      head_(other.head_) {}

SpanModel& SpanModel::operator=(const SpanModel& other) {
  if (this != &other) {
    SpanModel copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void SpanModel::BindAll() {
  encoder_->Bind(params_, adapters_.has_value());
  head_ = {};
  if (cfg_.head_variant == HeadVariant::kFfn2) {
    head_.dense = nn::LinearRef{params_.Require("head.dense.weight"),
                                params_.Require("head.dense.bias")};
  }
  head_.out = {params_.Require("head.out.weight"), params_.Require("head.out.bias")};
}

std::vector<size_t> SpanModel::HeadIndices() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < params_.size(); ++i) {
    if (params_.at(i).spec.group == ParamGroup::kHead) out.push_back(i);
  }
  return out;
}

void SpanModel::ReinitializeHead(uint64_t seed) {
  Rng rng(seed);
  for (size_t i : HeadIndices()) {
    Parameter& p = params_.at(i);
    if (p.spec.kind == ParamKind::kWeight) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
          p.value(r, c) = rng.Normal(0.0, cfg_.init_stddev);
        }
      }
    } else {
      p.value.setZero();
    }
  }
}

void SpanModel::InsertAdapters(const AdapterConfig& cfg, uint64_t seed) {
  if (adapters_) throw ConfigError("adapters are already inserted");
  const auto layout = encoder_->Layout(cfg);  // validates the factors
  for (const auto& spec : layout) {
    if (spec.group == ParamGroup::kAdapter) params_.Add(spec);
  }
  adapters_ = cfg;
  static_cast<ToyEncoder&>(*encoder_).set_adapter_nonlinearity(cfg.nonlinearity);
  Rng rng(seed);
  encoder_->Initialize(params_, rng, true);
  BindAll();
}

Matrix SpanModel::HeadForward(const Matrix& hidden, Matrix* dense_pre, Matrix* dense_act) const {
  if (!head_.dense) return nn::LinearForward(params_, head_.out, hidden);
  Matrix pre = nn::LinearForward(params_, *head_.dense, hidden);
  Matrix act = nn::Activate(Nonlinearity::kGelu, pre);
  Matrix logits = nn::LinearForward(params_, head_.out, act);
  if (dense_pre) *dense_pre = std::move(pre);
  if (dense_act) *dense_act = std::move(act);
  return logits;
}

ForwardResult SpanModel::Forward(std::string_view question, std::string_view context) const {
  ForwardResult out;
  out.input = encoder_->Encode(question, context);
  if (out.input.truncated_tokens > 0) {
    out.warnings.push_back("context truncated by " + std::to_string(out.input.truncated_tokens) +
                           " tokens");
  }
  const Matrix hidden = encoder_->Forward(params_, out.input, nullptr);
  const Matrix logits = HeadForward(hidden, nullptr, nullptr);
  out.start_logits.assign(logits.col(0).data(), logits.col(0).data() + logits.rows());
  out.end_logits.assign(logits.col(1).data(), logits.col(1).data() + logits.rows());
  return out;
}

double SpanModel::LossAndGradient(const QAExample& ex, const nn::GradSink& sink) const {
  const EncodedInput input = encoder_->Encode(ex.question, ex.context);
  const AnswerTarget target = TargetPositions(input, ex);

  bool encoder_grads = false;
  if (sink.grads != nullptr) {
    for (size_t i = 0; i < params_.size() && !encoder_grads; ++i) {
      encoder_grads = params_.at(i).spec.group != ParamGroup::kHead && sink.Wants(i);
    }
  }
  std::unique_ptr<EncoderTape> tape;
  const Matrix hidden = encoder_->Forward(params_, input, encoder_grads ? &tape : nullptr);
  Matrix dense_pre, dense_act;
  const Matrix logits = HeadForward(hidden, &dense_pre, &dense_act);

  std::vector<size_t> allowed;
  allowed.reserve(input.context_end - input.context_begin + 1);
  allowed.push_back(input.anchor);
  for (size_t t = input.context_begin; t < input.context_end; ++t) allowed.push_back(t);

  Matrix d_logits = Matrix::Zero(logits.rows(), 2);
  double loss = 0.0;
  const size_t targets[2] = {target.start, target.end};
  for (int col = 0; col < 2; ++col) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (size_t p : allowed) max_logit = std::max(max_logit, logits(p, col));
    double sum = 0.0;
    for (size_t p : allowed) sum += std::exp(logits(p, col) - max_logit);
    const double log_z = max_logit + std::log(sum);
    loss += log_z - logits(targets[col], col);
    for (size_t p : allowed) d_logits(p, col) = std::exp(logits(p, col) - log_z);
    d_logits(targets[col], col) -= 1.0;
  }
  if (sink.grads == nullptr) return loss;

  Matrix d_hidden;
  if (head_.dense) {
    Matrix d_act = nn::LinearBackward(params_, head_.out, dense_act, d_logits, sink);
    Matrix d_pre = nn::ActivateBackward(Nonlinearity::kGelu, dense_pre, d_act);
    if (encoder_grads) {
      d_hidden = nn::LinearBackward(params_, *head_.dense, hidden, d_pre, sink);
    } else {
      nn::LinearBackwardParamsOnly(*head_.dense, hidden, d_pre, sink);
    }
  } else if (encoder_grads) {
    d_hidden = nn::LinearBackward(params_, head_.out, hidden, d_logits, sink);
  } else {
    nn::LinearBackwardParamsOnly(head_.out, hidden, d_logits, sink);
  }
  if (encoder_grads) encoder_->Backward(params_, *tape, d_hidden, sink);
  return loss;
}

SpanModel insert_adapters(const SpanModel& model, const AdapterConfig& cfg, uint64_t seed) {
  SpanModel out(model);
  out.InsertAdapters(cfg, seed);
  return out;
}

TrainableMask select_trainable(const std::vector<ParameterSpec>& layout, Regime regime,
                               bool all_biases) {
  const bool has_adapters = std::any_of(layout.begin(), layout.end(), [](const ParameterSpec& s) {
    return s.group == ParamGroup::kAdapter;
  });
  if (regime == Regime::kAdapters && !has_adapters) {
    throw ConfigError("adapters regime requires inserted adapters");
  }
  TrainableMask mask;
  for (const auto& spec : layout) {
    bool take = spec.group == ParamGroup::kHead;
    switch (regime) {
      case Regime::kFull:
        take = true;
        break;
      case Regime::kHeadOnly:
        break;
      case Regime::kBitFit:
        take = take || spec.kind == ParamKind::kAttentionBias ||
               (all_biases && spec.kind == ParamKind::kOtherBias);
        break;
      case Regime::kAdapters:
        take = take || spec.group == ParamGroup::kAdapter;
        break;
    }
    if (take) mask.paths.insert(spec.path);
  }
  return mask;
}

TrainableMask select_trainable(const SpanModel& model, Regime regime, bool all_biases) {
  return select_trainable(model.parameters().Layout(), regime, all_biases);
}

size_t count_trainable(const std::vector<ParameterSpec>& layout, const TrainableMask& mask) {
  size_t n = 0;
  for (const auto& spec : layout) {
    if (mask.Contains(spec.path)) n += spec.count();
  }
  return n;
}

size_t count_trainable(const SpanModel& model, const TrainableMask& mask) {
  return count_trainable(model.parameters().Layout(), mask);
}

std::vector<bool> MaskFlags(const ParameterStore& ps, const TrainableMask& mask) {
  std::vector<bool> flags(ps.size(), false);
  for (size_t i = 0; i < ps.size(); ++i) flags[i] = mask.Contains(ps.at(i).spec.path);
  return flags;
}

}  // namespace qasl
