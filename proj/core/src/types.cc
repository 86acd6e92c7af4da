#include "qasl/types.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "json_codec.h"
#include "qasl/errors.h"
#include "qasl/utf8.h"

namespace qasl {

const SpanLabel* DialogTurn::LabelFor(std::string_view slot) const {
  for (const auto& label : gold_labels) {
    if (label.slot == slot) return &label;
  }
  return nullptr;
}

std::string_view SlotKindName(SlotKind kind) {
  switch (kind) {
    case SlotKind::kText: return "text";
    case SlotKind::kNumeric: return "numeric";
    case SlotKind::kTime: return "time";
    case SlotKind::kDate: return "date";
    case SlotKind::kCount: return "count";
  }
  return "text";
}

std::optional<SlotKind> ParseSlotKind(std::string_view name) {
  for (SlotKind k : {SlotKind::kText, SlotKind::kNumeric, SlotKind::kTime,
                     SlotKind::kDate, SlotKind::kCount}) {
    if (SlotKindName(k) == name) return k;
  }
  return std::nullopt;
}

bool IsNumericKind(SlotKind kind) {
  return kind == SlotKind::kNumeric || kind == SlotKind::kTime ||
         kind == SlotKind::kCount;
}

SlotOntology::SlotOntology(std::vector<SlotDefinition> slots,
                           std::string separator_token) {
  set_separator_token(std::move(separator_token));
  for (auto& s : slots) AddSlot(std::move(s));
}

void SlotOntology::AddSlot(SlotDefinition slot) {
  std::vector<std::string> problems;
  if (slot.name.empty()) problems.push_back("slot name is empty");
  if (Contains(slot.name)) problems.push_back("duplicate slot '" + slot.name + "'");
  if (slot.questions.empty()) {
    problems.push_back("slot '" + slot.name + "' has no question");
  }
  for (const auto& q : slot.questions) {
    if (q.empty()) problems.push_back("slot '" + slot.name + "' has an empty question");
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  slots_.push_back(std::move(slot));
}

bool SlotOntology::Contains(std::string_view slot) const {
  return std::any_of(slots_.begin(), slots_.end(),
                     [&](const SlotDefinition& s) { return s.name == slot; });
}

const SlotDefinition& SlotOntology::Get(std::string_view slot) const {
  for (const auto& s : slots_) {
    if (s.name == slot) return s;
  }
  throw UnknownSlotError(std::string(slot));
}

std::vector<std::string> SlotOntology::SlotNames() const {
  std::vector<std::string> names;
  names.reserve(slots_.size());
  for (const auto& s : slots_) names.push_back(s.name);
  return names;
}

void SlotOntology::set_separator_token(std::string token) {
  if (token.empty()) throw ValidationError({"separator token is empty"});
  separator_token_ = std::move(token);
}

QAExample QAExample::Answerable(std::string qid, std::string context,
                                std::string question, std::string answer_text,
                                size_t answer_start) {
  QAExample ex;
  ex.qid = std::move(qid);
  ex.context = std::move(context);
  ex.question = std::move(question);
  ex.answer_text = std::move(answer_text);
  ex.answer_start = answer_start;
  ex.is_impossible = false;
  return ex;
}

QAExample QAExample::Unanswerable(std::string qid, std::string context,
                                  std::string question) {
  QAExample ex;
  ex.qid = std::move(qid);
  ex.context = std::move(context);
  ex.question = std::move(question);
  ex.is_impossible = true;
  return ex;
}

std::string CheckQAExample(const QAExample& ex) {
  const bool has_text = ex.answer_text.has_value();
  const bool has_start = ex.answer_start.has_value();
  if (has_text != has_start) return ex.qid + ": answer_text/answer_start must both be present or absent";
  if (ex.is_impossible == has_text) return ex.qid + ": is_impossible must hold iff the answer is absent";
  if (has_text) {
    const size_t len = utf8::Length(*ex.answer_text);
    if (len == 0) return ex.qid + ": empty answer text";
    if (*ex.answer_start + len > utf8::Length(ex.context)) {
      return ex.qid + ": answer extends past the context";
    }
    if (utf8::Substr(ex.context, *ex.answer_start, *ex.answer_start + len) !=
        *ex.answer_text) {
      return ex.qid + ": answer text does not match context at answer_start";
    }
  }
  return {};
}

std::string_view RegimeName(Regime regime) {
  switch (regime) {
    case Regime::kFull: return "full";
    case Regime::kHeadOnly: return "head_only";
    case Regime::kBitFit: return "bitfit";
    case Regime::kAdapters: return "adapters";
  }
  return "full";
}

Regime ParseRegime(std::string_view name) {
  for (Regime r : {Regime::kFull, Regime::kHeadOnly, Regime::kBitFit,
                   Regime::kAdapters}) {
    if (RegimeName(r) == name) return r;
  }
  throw ConfigError("unknown regime '" + std::string(name) + "'");
}

std::string_view NonlinearityName(Nonlinearity n) {
  switch (n) {
    case Nonlinearity::kRelu: return "relu";
    case Nonlinearity::kGelu: return "gelu";
    case Nonlinearity::kTanh: return "tanh";
  }
  return "relu";
}

Nonlinearity ParseNonlinearity(std::string_view name) {
  for (Nonlinearity n : {Nonlinearity::kRelu, Nonlinearity::kGelu,
                         Nonlinearity::kTanh}) {
    if (NonlinearityName(n) == name) return n;
  }
  throw ConfigError("unknown nonlinearity '" + std::string(name) + "'");
}

void FineTuneConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be > 0");
  }
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if ((regime == Regime::kAdapters) != adapter.has_value()) {
    throw ConfigError("adapter config must be present iff regime is adapters");
  }
  if (adapter) {
    if (adapter->default_reduction_factor <= 0 ||
        adapter->boundary_reduction_factor <= 0) {
      throw ConfigError("adapter reduction factors must be positive");
    }
  }
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0) {
    throw ConfigError("warmup_fraction must lie in [0, 1]");
  }
  if (!std::isfinite(no_answer_threshold)) {
    throw ConfigError("no_answer_threshold must be finite");
  }
}

FineTuneConfig FineTuneConfig::Stage1Defaults() {
  FineTuneConfig cfg;
  cfg.learning_rate = 3e-5;
  cfg.batch_size = 24;
  cfg.epochs = 2;
  return cfg;
}

FineTuneConfig FineTuneConfig::Stage2Defaults() {
  FineTuneConfig cfg;
  cfg.learning_rate = 2e-5;
  cfg.batch_size = 32;
  return cfg;
}

FineTuneConfig FineTuneConfig::AdapterDefaults() {
  FineTuneConfig cfg = Stage2Defaults();
  cfg.regime = Regime::kAdapters;
  cfg.adapter = AdapterConfig{};
  cfg.learning_rate = 1e-3;
  return cfg;
}

std::string_view HeadVariantName(HeadVariant v) {
  return v == HeadVariant::kLinear ? "linear" : "ffn2";
}

HeadVariant ParseHeadVariant(std::string_view name) {
  if (name == "linear") return HeadVariant::kLinear;
  if (name == "ffn2") return HeadVariant::kFfn2;
  throw ConfigError("unknown head variant '" + std::string(name) + "'");
}

int DefaultHeadHiddenSize(int hidden_size) {
  // E*H + H + 2*H + 2 ~= 1e6
  return static_cast<int>(std::lround(1e6 / (hidden_size + 3.0)));
}

void ModelConfig::Validate() const {
  if (hidden_size <= 0 || num_layers <= 0 || num_heads <= 0 || ffn_size <= 0 ||
      vocab_size <= 0 || max_positions <= 0 || head_hidden_size < 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (hidden_size % num_heads != 0) {
    throw ConfigError("hidden_size must be divisible by num_heads");
  }
  if (vocab_size < 16) throw ConfigError("vocab_size must be at least 16");
  if (!(init_stddev > 0.0)) throw ConfigError("init_stddev must be > 0");
}

int ModelConfig::EffectiveHeadHidden() const {
  return head_hidden_size > 0 ? head_hidden_size
                              : DefaultHeadHiddenSize(hidden_size);
}

ModelConfig ModelConfig::BaseSized() {
  ModelConfig cfg;
  cfg.hidden_size = 768;
  cfg.num_layers = 12;
  cfg.num_heads = 12;
  cfg.ffn_size = 3072;
  cfg.vocab_size = 30522;
  cfg.max_positions = 512;
  return cfg;
}

std::string_view ViolationKindName(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kEmptyTurnId: return "empty-turn-id";
    case ViolationKind::kLabelOutOfBounds: return "label-out-of-bounds";
    case ViolationKind::kOffsetMismatch: return "offset-mismatch";
    case ViolationKind::kUnknownLabelSlot: return "unknown-label-slot";
    case ViolationKind::kDuplicateRequested: return "duplicate-requested";
    case ViolationKind::kUnknownRequestedSlot: return "unknown-requested-slot";
  }
  return "unknown";
}

std::string Violation::ToString() const {
  return "turn '" + turn_id + "': " + std::string(ViolationKindName(kind)) +
         ": " + detail;
}

std::vector<Violation> validate_turn(const DialogTurn& turn,
                                     const SlotOntology* ontology) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind kind, std::string detail) {
    out.push_back({kind, turn.turn_id, std::move(detail)});
  };
  if (turn.turn_id.empty()) add(ViolationKind::kEmptyTurnId, "turn_id is empty");

  const size_t len = utf8::Length(turn.user_text);
  for (const auto& label : turn.gold_labels) {
    const std::string where = "label " + label.slot + "[" +
                              std::to_string(label.start) + "," +
                              std::to_string(label.end) + ")";
    if (!(label.start < label.end && label.end <= len)) {
      add(ViolationKind::kLabelOutOfBounds,
          where + " outside user_text of length " + std::to_string(len));
    } else {
      const std::string actual = utf8::Substr(turn.user_text, label.start, label.end);
      if (actual != label.value) {
        add(ViolationKind::kOffsetMismatch,
            where + " has value \"" + label.value + "\" but text is \"" + actual + "\"");
      }
    }
    if (ontology && !ontology->Contains(label.slot)) {
      add(ViolationKind::kUnknownLabelSlot, where + " names an unknown slot");
    }
  }

  std::set<std::string> seen;
  for (const auto& r : turn.requested_slots) {
    if (!seen.insert(r).second) {
      add(ViolationKind::kDuplicateRequested, "requested slot '" + r + "' repeated");
    }
    if (ontology && !ontology->Contains(r)) {
      add(ViolationKind::kUnknownRequestedSlot, "requested slot '" + r + "' unknown");
    }
  }
  return out;
}

std::string EmitTurnJson(const DialogTurn& turn) {
  return json_codec::TurnToJson(turn).dump();
}

DialogTurn ParseTurnJson(std::string_view json) {
  return json_codec::TurnFromJson(json_codec::ParseText(json), "turn");
}

}  // namespace qasl
