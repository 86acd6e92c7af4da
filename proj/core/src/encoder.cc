#include "qasl/encoder.h"

#include <algorithm>
#include <string>

#include "qasl/errors.h"

namespace qasl {

using nn::Matrix;

std::vector<int> AdapterWidths(int hidden_size, int num_layers, const AdapterConfig& cfg) {
  if (num_layers < 2) throw ConfigError("adapters need at least two encoder layers");
  if (cfg.default_reduction_factor <= 0 || cfg.boundary_reduction_factor <= 0) {
    throw ConfigError("adapter reduction factors must be positive");
  }
  if (cfg.default_reduction_factor > hidden_size || cfg.boundary_reduction_factor > hidden_size) {
    throw ConfigError("adapter reduction factor exceeds hidden size " +
                      std::to_string(hidden_size));
  }
  std::vector<int> widths(num_layers, hidden_size / cfg.default_reduction_factor);
  widths.front() = hidden_size / cfg.boundary_reduction_factor;
  widths.back() = hidden_size / cfg.boundary_reduction_factor;
  return widths;
}

size_t AdapterParameterCount(int hidden_size, int width) {
  const size_t e = static_cast<size_t>(hidden_size);
  const size_t w = static_cast<size_t>(width);
  return 2 * e * w + w + e;
}

namespace {

std::string LayerPrefix(int i) { return "encoder.layer." + std::to_string(i) + "."; }

void AddLinear(std::vector<ParameterSpec>& out, const std::string& prefix, int in, int outdim,
               ParamKind bias_kind, ParamGroup group) {
  out.push_back({prefix + ".weight", ParamKind::kWeight, group, in, outdim});
  out.push_back({prefix + ".bias", bias_kind, group, 1, outdim});
}

void AddNorm(std::vector<ParameterSpec>& out, const std::string& prefix, int dim) {
  out.push_back({prefix + ".gamma", ParamKind::kWeight, ParamGroup::kEncoder, 1, dim});
  out.push_back({prefix + ".beta", ParamKind::kOtherBias, ParamGroup::kEncoder, 1, dim});
}

nn::LinearRef BindLinear(const ParameterStore& ps, const std::string& prefix,
                         std::vector<size_t>& indices) {
  nn::LinearRef ref{ps.Require(prefix + ".weight"), ps.Require(prefix + ".bias")};
  indices.push_back(ref.weight);
  indices.push_back(ref.bias);
  return ref;
}

nn::LayerNormRef BindNorm(const ParameterStore& ps, const std::string& prefix,
                          std::vector<size_t>& indices) {
  nn::LayerNormRef ref{ps.Require(prefix + ".gamma"), ps.Require(prefix + ".beta")};
  indices.push_back(ref.gamma);
  indices.push_back(ref.beta);
  return ref;
}

struct LayerTape {
  nn::AttentionCache attention;
  nn::LayerNormCache attention_norm;
  Matrix after_attention;  // output of the attention LayerNorm
  Matrix ffn_pre;          // pre-activation of the first FFN layer
  Matrix ffn_act;
  Matrix ffn_out;          // FFN output before the adapter
  Matrix adapter_pre;
  Matrix adapter_act;
  nn::LayerNormCache ffn_norm;
};

class ToyTape : public EncoderTape {
 public:
  EncodedInput input;
  nn::LayerNormCache embed_norm;
  std::vector<LayerTape> layers;
};

}  // namespace

ToyEncoder::ToyEncoder(const ModelConfig& cfg, std::string separator)
    : cfg_(cfg), tokenizer_(cfg.vocab_size, std::move(separator)) {
  cfg_.Validate();
}

EncodedInput ToyEncoder::Encode(std::string_view question, std::string_view context) const {
  const auto q_tokens = tokenizer_.Tokenize(question);
  auto c_tokens = tokenizer_.Tokenize(context);
  const size_t max_len = static_cast<size_t>(cfg_.max_positions);
  if (q_tokens.size() + 3 > max_len) {
    throw Error("input_too_long", "question of " + std::to_string(q_tokens.size()) +
                                      " tokens does not fit " + std::to_string(max_len) +
                                      " positions");
  }
  EncodedInput in;
  const size_t room = max_len - q_tokens.size() - 3;
  if (c_tokens.size() > room) {
    in.truncated_tokens = c_tokens.size() - room;
    c_tokens.resize(room);
  }
  const size_t total = q_tokens.size() + c_tokens.size() + 3;
  in.ids.reserve(total);
  in.shapes.reserve(total);
  in.segments.reserve(total);
  in.offsets.reserve(total);
  auto push_special = [&](int id, int segment) {
    in.special_positions.push_back(in.ids.size());
    in.ids.push_back(id);
    in.shapes.push_back(Tokenizer::kShapeSpecial);
    in.segments.push_back(segment);
    in.offsets.push_back({});
  };
  push_special(Tokenizer::kClsId, 0);
  for (const auto& t : q_tokens) {
    in.ids.push_back(tokenizer_.TokenId(t));
    in.shapes.push_back(tokenizer_.ShapeId(t));
    in.segments.push_back(0);
    in.offsets.push_back({});
  }
  push_special(Tokenizer::kSepId, 0);
  in.context_begin = in.ids.size();
  for (const auto& t : c_tokens) {
    in.ids.push_back(tokenizer_.TokenId(t));
    in.shapes.push_back(tokenizer_.ShapeId(t));
    in.segments.push_back(1);
    in.offsets.push_back(t.span);
  }
  in.context_end = in.ids.size();
  push_special(Tokenizer::kSepId, 1);
  in.anchor = 0;
  return in;
}

std::vector<ParameterSpec> ToyEncoder::Layout(const std::optional<AdapterConfig>& adapters) const {
  const int e = cfg_.hidden_size;
  std::vector<ParameterSpec> out;
  const ParamGroup enc = ParamGroup::kEncoder;
  out.push_back({"encoder.embeddings.word.weight", ParamKind::kWeight, enc, cfg_.vocab_size, e});
  out.push_back({"encoder.embeddings.shape.weight", ParamKind::kWeight, enc, Tokenizer::kNumShapes, e});
  out.push_back({"encoder.embeddings.position.weight", ParamKind::kWeight, enc, cfg_.max_positions, e});
  out.push_back({"encoder.embeddings.segment.weight", ParamKind::kWeight, enc, 2, e});
  AddNorm(out, "encoder.embeddings.norm", e);

  std::vector<int> widths;
  if (adapters) widths = AdapterWidths(e, cfg_.num_layers, *adapters);
  for (int i = 0; i < cfg_.num_layers; ++i) {
    const std::string p = LayerPrefix(i);
    for (const char* name : {"query", "key", "value", "output"}) {
      AddLinear(out, p + "attention." + name, e, e, ParamKind::kAttentionBias, enc);
    }
    AddNorm(out, p + "attention.norm", e);
    AddLinear(out, p + "ffn.in", e, cfg_.ffn_size, ParamKind::kOtherBias, enc);
    AddLinear(out, p + "ffn.out", cfg_.ffn_size, e, ParamKind::kOtherBias, enc);
    if (adapters) {
      AddLinear(out, p + "adapter.down", e, widths[i], ParamKind::kOtherBias, ParamGroup::kAdapter);
      AddLinear(out, p + "adapter.up", widths[i], e, ParamKind::kOtherBias, ParamGroup::kAdapter);
    }
    AddNorm(out, p + "ffn.norm", e);
  }
  return out;
}

void ToyEncoder::Bind(const ParameterStore& ps, bool with_adapters) {
  embed_indices_.clear();
  word_ = ps.Require("encoder.embeddings.word.weight");
  shape_ = ps.Require("encoder.embeddings.shape.weight");
  position_ = ps.Require("encoder.embeddings.position.weight");
  segment_ = ps.Require("encoder.embeddings.segment.weight");
  embed_indices_ = {word_, shape_, position_, segment_};
  embed_norm_ = BindNorm(ps, "encoder.embeddings.norm", embed_indices_);
  layers_.clear();
  for (int i = 0; i < cfg_.num_layers; ++i) {
    const std::string p = LayerPrefix(i);
    LayerRefs l;
    l.attention.query = BindLinear(ps, p + "attention.query", l.indices);
    l.attention.key = BindLinear(ps, p + "attention.key", l.indices);
    l.attention.value = BindLinear(ps, p + "attention.value", l.indices);
    l.attention.output = BindLinear(ps, p + "attention.output", l.indices);
    l.attention.num_heads = cfg_.num_heads;
    l.attention_norm = BindNorm(ps, p + "attention.norm", l.indices);
    l.ffn_in = BindLinear(ps, p + "ffn.in", l.indices);
    l.ffn_out = BindLinear(ps, p + "ffn.out", l.indices);
    if (with_adapters) {
      AdapterRefs a;
      a.down = BindLinear(ps, p + "adapter.down", l.indices);
      a.up = BindLinear(ps, p + "adapter.up", l.indices);
      l.adapter = a;
    }
    l.ffn_norm = BindNorm(ps, p + "ffn.norm", l.indices);
    layers_.push_back(std::move(l));
  }
}

void ToyEncoder::Initialize(ParameterStore& ps, Rng& rng, bool adapters_only) const {
  for (size_t i = 0; i < ps.size(); ++i) {
    Parameter& p = ps.at(i);
    const auto& spec = p.spec;
    if (spec.group == ParamGroup::kHead) continue;
    if (adapters_only && spec.group != ParamGroup::kAdapter) continue;
    const bool is_up = spec.path.ends_with("adapter.up.weight");
    if (spec.path.ends_with(".gamma")) {
      p.value.setOnes();
    } else if (spec.kind != ParamKind::kWeight || is_up) {
      // Biases start at zero; a zero up-projection makes a fresh adapter
      // the identity.
      p.value.setZero();
    } else {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
          p.value(r, c) = rng.Normal(0.0, cfg_.init_stddev);
        }
      }
    }
  }
}

Matrix ToyEncoder::Forward(const ParameterStore& ps, const EncodedInput& input,
                           std::unique_ptr<EncoderTape>* tape_out) const {
  const Eigen::Index len = static_cast<Eigen::Index>(input.length());
  const int e = cfg_.hidden_size;
  Matrix x(len, e);
  const Matrix& word = ps.value(word_);
  const Matrix& shape = ps.value(shape_);
  const Matrix& position = ps.value(position_);
  const Matrix& segment = ps.value(segment_);
  for (Eigen::Index t = 0; t < len; ++t) {
    x.row(t) = word.row(input.ids[t]) + shape.row(input.shapes[t]) + position.row(t) +
               segment.row(input.segments[t]);
  }
  std::unique_ptr<ToyTape> tape;
  if (tape_out != nullptr) {
    tape = std::make_unique<ToyTape>();
    tape->input = input;
    tape->layers.resize(layers_.size());
  }
  Matrix h = nn::LayerNormForward(ps, embed_norm_, x, tape ? &tape->embed_norm : nullptr);

  for (size_t i = 0; i < layers_.size(); ++i) {
    const LayerRefs& l = layers_[i];
    LayerTape* lt = tape ? &tape->layers[i] : nullptr;
    Matrix attn = nn::AttentionForward(ps, l.attention, h, lt ? &lt->attention : nullptr);
    Matrix h1 = nn::LayerNormForward(ps, l.attention_norm, h + attn,
                                     lt ? &lt->attention_norm : nullptr);
    Matrix pre = nn::LinearForward(ps, l.ffn_in, h1);
    Matrix act = nn::Activate(Nonlinearity::kGelu, pre);
    Matrix f = nn::LinearForward(ps, l.ffn_out, act);
    Matrix f_adapted;
    if (l.adapter) {
      Matrix a_pre = nn::LinearForward(ps, l.adapter->down, f);
      Matrix a_act = nn::Activate(adapter_fn_, a_pre);
      f_adapted = f + nn::LinearForward(ps, l.adapter->up, a_act);
      if (lt) {
        lt->adapter_pre = std::move(a_pre);
        lt->adapter_act = std::move(a_act);
      }
    }
    const Matrix& f_final = l.adapter ? f_adapted : f;
    Matrix h2 = nn::LayerNormForward(ps, l.ffn_norm, h1 + f_final, lt ? &lt->ffn_norm : nullptr);
    if (lt) {
      lt->after_attention = std::move(h1);
      lt->ffn_pre = std::move(pre);
      lt->ffn_act = std::move(act);
      lt->ffn_out = std::move(f);
    }
    h = std::move(h2);
  }
  if (tape_out != nullptr) *tape_out = std::move(tape);
  return h;
}

void ToyEncoder::Backward(const ParameterStore& ps, const EncoderTape& tape_base,
                          const Matrix& d_hidden, const nn::GradSink& sink) const {
  const auto& tape = static_cast<const ToyTape&>(tape_base);
  auto any_wanted = [&](const std::vector<size_t>& idx) {
    return std::any_of(idx.begin(), idx.end(), [&](size_t i) { return sink.Wants(i); });
  };
  // Lowest layer that still has a parameter to update; -1 means embeddings.
  int lowest = static_cast<int>(layers_.size());
  if (any_wanted(embed_indices_)) {
    lowest = -1;
  } else {
    for (int i = 0; i < static_cast<int>(layers_.size()); ++i) {
      if (any_wanted(layers_[i].indices)) {
        lowest = i;
        break;
      }
    }
  }
  if (lowest == static_cast<int>(layers_.size())) return;

  Matrix dh = d_hidden;
  for (int i = static_cast<int>(layers_.size()) - 1; i >= std::max(lowest, 0); --i) {
    const LayerRefs& l = layers_[i];
    const LayerTape& lt = tape.layers[i];
    Matrix d_sum2 = nn::LayerNormBackward(ps, l.ffn_norm, lt.ffn_norm, dh, sink);
    // d_sum2 flows to both h1 (residual) and the FFN branch.
    Matrix d_f = d_sum2;
    if (l.adapter) {
      Matrix d_act = nn::LinearBackward(ps, l.adapter->up, lt.adapter_act, d_sum2, sink);
      Matrix d_pre = nn::ActivateBackward(adapter_fn_, lt.adapter_pre, d_act);
      d_f += nn::LinearBackward(ps, l.adapter->down, lt.ffn_out, d_pre, sink);
    }
    Matrix d_act = nn::LinearBackward(ps, l.ffn_out, lt.ffn_act, d_f, sink);
    Matrix d_pre = nn::ActivateBackward(Nonlinearity::kGelu, lt.ffn_pre, d_act);
    Matrix d_h1 = nn::LinearBackward(ps, l.ffn_in, lt.after_attention, d_pre, sink);
    d_h1 += d_sum2;
    Matrix d_sum1 = nn::LayerNormBackward(ps, l.attention_norm, lt.attention_norm, d_h1, sink);
    dh = nn::AttentionBackward(ps, l.attention, lt.attention, d_sum1, sink);
    dh += d_sum1;
  }
  if (lowest >= 0) return;

  Matrix dx = nn::LayerNormBackward(ps, embed_norm_, tape.embed_norm, dh, sink);
  const EncodedInput& in = tape.input;
  for (Eigen::Index t = 0; t < dx.rows(); ++t) {
    if (sink.Wants(word_)) (*sink.grads)[word_].row(in.ids[t]) += dx.row(t);
    if (sink.Wants(shape_)) (*sink.grads)[shape_].row(in.shapes[t]) += dx.row(t);
    if (sink.Wants(position_)) (*sink.grads)[position_].row(t) += dx.row(t);
    if (sink.Wants(segment_)) (*sink.grads)[segment_].row(in.segments[t]) += dx.row(t);
  }
}

std::unique_ptr<Encoder> ToyEncoder::Clone() const {
  return std::make_unique<ToyEncoder>(*this);
}

}  // namespace qasl
