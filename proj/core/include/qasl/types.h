#ifndef QASL_TYPES_H_
#define QASL_TYPES_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qasl {

// A gold slot value inside a user utterance. Offsets are Unicode scalar
// indices into DialogTurn::user_text, end exclusive.
struct SpanLabel {
  std::string slot;
  size_t start = 0;
  size_t end = 0;
  std::string value;

  bool operator==(const SpanLabel&) const = default;
};

// One user turn, optionally preceded by a system turn. `requested_slots`
// lists the slots the system asked for in that preceding turn.
struct DialogTurn {
  std::string turn_id;
  std::optional<std::string> system_text;
  std::string user_text;
  std::vector<std::string> requested_slots;
  std::vector<SpanLabel> gold_labels;

  bool operator==(const DialogTurn&) const = default;

  // First gold label for `slot`, if any.
  const SpanLabel* LabelFor(std::string_view slot) const;
};

// Value type of a slot. Used by the auditor: bare numbers are ambiguous
// between numeric-typed slots (time, count, numeric).
enum class SlotKind { kText, kNumeric, kTime, kDate, kCount };

std::string_view SlotKindName(SlotKind kind);
std::optional<SlotKind> ParseSlotKind(std::string_view name);
bool IsNumericKind(SlotKind kind);

struct SlotDefinition {
  std::string name;
  std::vector<std::string> questions;  // first entry is canonical
  SlotKind kind = SlotKind::kText;

  bool operator==(const SlotDefinition&) const = default;
};

// Ordered slot -> questions map plus the separator used for requested-slot
// prompts. Insertion order is the canonical slot order.
class SlotOntology {
 public:
  static constexpr std::string_view kDefaultSeparator = "<s>";

  SlotOntology() = default;
  explicit SlotOntology(std::vector<SlotDefinition> slots,
                        std::string separator_token = std::string(kDefaultSeparator));

  // Throws ValidationError on a duplicate name, an empty question list or
  // an empty question.
  void AddSlot(SlotDefinition slot);

  bool Contains(std::string_view slot) const;
  const SlotDefinition& Get(std::string_view slot) const;  // UnknownSlotError
  const std::vector<SlotDefinition>& slots() const { return slots_; }
  std::vector<std::string> SlotNames() const;
  size_t size() const { return slots_.size(); }
  bool empty() const { return slots_.empty(); }

  const std::string& separator_token() const { return separator_token_; }
  void set_separator_token(std::string token);

  bool operator==(const SlotOntology&) const = default;

 private:
  std::vector<SlotDefinition> slots_;
  std::string separator_token_{kDefaultSeparator};
};

// SQuAD2.0-style example. Unanswerable iff both answer fields are absent.
struct QAExample {
  std::string qid;
  std::string context;
  std::string question;
  std::optional<std::string> answer_text;
  std::optional<size_t> answer_start;
  bool is_impossible = false;

  bool operator==(const QAExample&) const = default;

  static QAExample Answerable(std::string qid, std::string context,
                              std::string question, std::string answer_text,
                              size_t answer_start);
  static QAExample Unanswerable(std::string qid, std::string context,
                                std::string question);
};

// Returns an empty string when the example satisfies its invariants,
// otherwise a description of the first violation.
std::string CheckQAExample(const QAExample& ex);

// Decoder output. Offsets are scalar indices into whatever text the
// prediction refers to (QA context, or user_text after mapping).
struct SpanPrediction {
  std::string qid;
  std::optional<std::string> text;
  std::optional<size_t> start;
  std::optional<size_t> end;
  double score = 0.0;
  double no_answer_score = 0.0;

  bool has_answer() const { return text.has_value(); }
  bool operator==(const SpanPrediction&) const = default;
};

enum class Regime { kFull, kHeadOnly, kBitFit, kAdapters };
std::string_view RegimeName(Regime regime);
Regime ParseRegime(std::string_view name);  // ConfigError

enum class Nonlinearity { kRelu, kGelu, kTanh };
std::string_view NonlinearityName(Nonlinearity n);
Nonlinearity ParseNonlinearity(std::string_view name);

struct AdapterConfig {
  int default_reduction_factor = 16;
  int boundary_reduction_factor = 8;  // first and last encoder layers
  Nonlinearity nonlinearity = Nonlinearity::kRelu;

  bool operator==(const AdapterConfig&) const = default;
};

struct FineTuneConfig {
  Regime regime = Regime::kFull;
  double learning_rate = 2e-5;
  int batch_size = 32;
  int epochs = 5;
  std::optional<AdapterConfig> adapter;
  double no_answer_threshold = 0.0;  // tau; see decoder
  // Linear warmup over this fraction of steps, then constant unless
  // linear_decay is set. Both off by default.
  double warmup_fraction = 0.0;
  bool linear_decay = false;
  // BitFit over every bias rather than attention biases only.
  bool bitfit_all_biases = false;
  // Re-initialize the QA head before this stage.
  bool reinit_head = false;

  bool operator==(const FineTuneConfig&) const = default;

  // Throws ConfigError when invariants are violated. epochs == 0 is
  // accepted and means "no update".
  void Validate() const;

  // QA-tuning: 2 epochs, 24 pairs per batch, lr 3e-5.
  static FineTuneConfig Stage1Defaults();
  // QASL-tuning: batch 32, lr 2e-5.
  static FineTuneConfig Stage2Defaults();
  // Stage 2 with adapters (factors 16/8, lr 1e-3).
  static FineTuneConfig AdapterDefaults();
};

enum class HeadVariant { kLinear, kFfn2 };
std::string_view HeadVariantName(HeadVariant v);
HeadVariant ParseHeadVariant(std::string_view name);

struct ModelConfig {
  int hidden_size = 64;      // E
  int num_layers = 2;
  int num_heads = 4;
  int ffn_size = 128;
  int vocab_size = 4096;     // hash buckets, including special tokens
  int max_positions = 96;
  HeadVariant head_variant = HeadVariant::kLinear;
  int head_hidden_size = 0;  // 0 selects the ~1M-parameter default width
  std::string tokenizer = "whitespace-punct-hash-v2";
  double init_stddev = 0.02;

  bool operator==(const ModelConfig&) const = default;

  void Validate() const;  // ConfigError
  int EffectiveHeadHidden() const;

  // Shapes of a RoBERTa/BERT-Base sized backbone (E=768, 12 layers).
  static ModelConfig BaseSized();
};

// Width of the ffn2 head hidden layer that puts the head at ~1M parameters.
int DefaultHeadHiddenSize(int hidden_size);

enum class ViolationKind {
  kEmptyTurnId,
  kLabelOutOfBounds,
  kOffsetMismatch,
  kUnknownLabelSlot,
  kDuplicateRequested,
  kUnknownRequestedSlot,
};
std::string_view ViolationKindName(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string turn_id;
  std::string detail;

  bool operator==(const Violation&) const = default;
  std::string ToString() const;
};

// Pure check of a turn against the DialogTurn/SpanLabel invariants. With a
// null ontology the slot-membership checks are skipped.
std::vector<Violation> validate_turn(const DialogTurn& turn,
                                     const SlotOntology* ontology);
inline std::vector<Violation> validate_turn(const DialogTurn& turn,
                                            const SlotOntology& ontology) {
  return validate_turn(turn, &ontology);
}

// Native JSON (de)serialization of a single turn.
std::string EmitTurnJson(const DialogTurn& turn);
DialogTurn ParseTurnJson(std::string_view json);  // ParseError

}  // namespace qasl

#endif  // QASL_TYPES_H_
