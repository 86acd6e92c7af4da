#ifndef QASL_ENCODER_H_
#define QASL_ENCODER_H_

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "qasl/layers.h"
#include "qasl/parameters.h"
#include "qasl/random.h"
#include "qasl/reformulator.h"
#include "qasl/tokenizer.h"
#include "qasl/types.h"

namespace qasl {

// A question/context pair laid out as [CLS] question [SEP] context [SEP].
struct EncodedInput {
  std::vector<int> ids;
  std::vector<int> shapes;
  std::vector<int> segments;
  // Character span of each token inside the context; empty ranges for
  // question and special tokens.
  std::vector<CharRange> offsets;
  size_t anchor = 0;  // no-answer position
  size_t context_begin = 0;  // token range of the context, [begin, end)
  size_t context_end = 0;
  std::vector<size_t> special_positions;
  size_t truncated_tokens = 0;  // context tokens dropped from the tail

  size_t length() const { return ids.size(); }
};

// Per-call activations kept for the backward pass.
class EncoderTape {
 public:
  virtual ~EncoderTape() = default;
};

// Backbone contract: tokenization with character offsets, a forward pass to
// [tokens, E] hidden states, and parameter enumeration. Implementations
// own no tensors; those live in the model's ParameterStore.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::string_view kind() const = 0;
  virtual int hidden_size() const = 0;
  virtual int layer_count() const = 0;

  // Throws Error("input_too_long") when the question alone does not fit.
  virtual EncodedInput Encode(std::string_view question, std::string_view context) const = 0;

  virtual std::vector<ParameterSpec> Layout(
      const std::optional<AdapterConfig>& adapters) const = 0;
  // Resolves parameter indices after the store has been populated.
  virtual void Bind(const ParameterStore& ps, bool with_adapters) = 0;
  // Draws initial values for encoder (or only adapter) parameters.
  virtual void Initialize(ParameterStore& ps, Rng& rng, bool adapters_only) const = 0;

  virtual nn::Matrix Forward(const ParameterStore& ps, const EncodedInput& input,
                             std::unique_ptr<EncoderTape>* tape) const = 0;
  virtual void Backward(const ParameterStore& ps, const EncoderTape& tape,
                        const nn::Matrix& d_hidden, const nn::GradSink& sink) const = 0;

  virtual std::unique_ptr<Encoder> Clone() const = 0;
};

// Bottleneck width per layer: hidden / boundary factor on the first and last
// layers, hidden / default factor elsewhere (floor division). Throws
// ConfigError when a factor exceeds the hidden size or there are fewer
// than two layers.
std::vector<int> AdapterWidths(int hidden_size, int num_layers, const AdapterConfig& cfg);

// Parameters of one bottleneck adapter: 2*E*w + w + E.
size_t AdapterParameterCount(int hidden_size, int width);

// Small post-LayerNorm transformer encoder: hashed word, token-shape,
// position and segment embeddings, GELU feed-forward blocks, and optional
// bottleneck adapters on the feed-forward output.
class ToyEncoder : public Encoder {
 public:
  explicit ToyEncoder(const ModelConfig& cfg,
                      std::string separator = std::string(SlotOntology::kDefaultSeparator));

  std::string_view kind() const override { return "toy-transformer"; }
  int hidden_size() const override { return cfg_.hidden_size; }
  int layer_count() const override { return cfg_.num_layers; }

  EncodedInput Encode(std::string_view question, std::string_view context) const override;
  std::vector<ParameterSpec> Layout(const std::optional<AdapterConfig>& adapters) const override;
  void Bind(const ParameterStore& ps, bool with_adapters) override;
  void Initialize(ParameterStore& ps, Rng& rng, bool adapters_only) const override;
  nn::Matrix Forward(const ParameterStore& ps, const EncodedInput& input,
                     std::unique_ptr<EncoderTape>* tape) const override;
  void Backward(const ParameterStore& ps, const EncoderTape& tape,
                const nn::Matrix& d_hidden, const nn::GradSink& sink) const override;
  std::unique_ptr<Encoder> Clone() const override;

  const Tokenizer& tokenizer() const { return tokenizer_; }
  void set_adapter_nonlinearity(Nonlinearity fn) { adapter_fn_ = fn; }

 private:
  struct AdapterRefs {
    nn::LinearRef down;
    nn::LinearRef up;
  };
  struct LayerRefs {
    nn::AttentionRef attention;
    nn::LayerNormRef attention_norm;
    nn::LinearRef ffn_in;
    nn::LinearRef ffn_out;
    nn::LayerNormRef ffn_norm;
    std::optional<AdapterRefs> adapter;
    std::vector<size_t> indices;  // every parameter of the layer
  };

  ModelConfig cfg_;
  Tokenizer tokenizer_;
  Nonlinearity adapter_fn_ = Nonlinearity::kRelu;
  size_t word_ = 0, shape_ = 0, position_ = 0, segment_ = 0;
  nn::LayerNormRef embed_norm_;
  std::vector<size_t> embed_indices_;
  std::vector<LayerRefs> layers_;
};

}  // namespace qasl

#endif  // QASL_ENCODER_H_
