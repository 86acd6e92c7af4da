#include "qasl/reformulator.h"

#include "qasl/errors.h"
#include "qasl/utf8.h"

namespace qasl {

std::string PromptSpec::RenderSlot(std::string_view slot) const {
  std::string out(slot);
  for (char& c : out) {
    if (c == '_') {
      c = ' ';
    } else if (c >= 'A' && c <= 'Z') {
      c = static_cast<char>(c - 'A' + 'a');
    }
  }
  return out;
}

PromptSpec PromptSpec::ForOntology(const SlotOntology& ontology) {
  PromptSpec spec;
  spec.separator_token = ontology.separator_token();
  return spec;
}

std::string_view ContextModeName(ContextMode mode) {
  return mode == ContextMode::kUserOnly ? "user_only" : "with_system";
}

ContextMode ParseContextMode(std::string_view name) {
  if (name == "user_only") return ContextMode::kUserOnly;
  if (name == "with_system") return ContextMode::kWithSystem;
  throw ConfigError("unknown context mode '" + std::string(name) + "'");
}

std::string build_question(std::string_view slot, const SlotOntology& ontology) {
  return ontology.Get(slot).questions.front();
}

std::string augment_with_requested(std::string_view question,
                                   std::span<const std::string> requested,
                                   const PromptSpec& spec) {
  if (question.empty()) throw ValidationError({"question is empty"});
  std::string out(question);
  if (!spec.include_requested) return out;
  for (const auto& r : requested) {
    out += ' ';
    out += spec.separator_token;
    out += ' ';
    out += spec.RenderSlot(r);
  }
  return out;
}

BuiltContext build_context(const DialogTurn& turn, ContextMode mode) {
  const size_t user_len = utf8::Length(turn.user_text);
  if (mode == ContextMode::kUserOnly || !turn.system_text) {
    return {turn.user_text, {0, user_len}};
  }
  const size_t offset = utf8::Length(*turn.system_text) + 1;
  return {*turn.system_text + " " + turn.user_text, {offset, offset + user_len}};
}

std::string MakeQid(std::string_view turn_id, std::string_view slot) {
  std::string qid(turn_id);
  qid += ':';
  qid += slot;
  return qid;
}

std::vector<QAExample> turn_to_qa(const DialogTurn& turn,
                                  const SlotOntology& ontology,
                                  const PromptSpec& spec, ContextMode mode,
                                  Rng* paraphrase_rng) {
  for (const auto& label : turn.gold_labels) {
    if (!ontology.Contains(label.slot)) throw UnknownSlotError(label.slot);
  }
  const BuiltContext ctx = build_context(turn, mode);

  std::vector<QAExample> out;
  out.reserve(ontology.size());
  for (const auto& slot : ontology.slots()) {
    std::string question = slot.questions.front();
    if (paraphrase_rng != nullptr && slot.questions.size() > 1) {
      question = slot.questions[paraphrase_rng->UniformIndex(slot.questions.size())];
    }
    question = augment_with_requested(question, turn.requested_slots, spec);
    std::string qid = MakeQid(turn.turn_id, slot.name);
    if (const SpanLabel* label = turn.LabelFor(slot.name)) {
      out.push_back(QAExample::Answerable(std::move(qid), ctx.context,
                                          std::move(question), label->value,
                                          ctx.user_region.start + label->start));
    } else {
      out.push_back(QAExample::Unanswerable(std::move(qid), ctx.context,
                                            std::move(question)));
    }
  }
  return out;
}

}  // namespace qasl
