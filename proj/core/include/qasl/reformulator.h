#ifndef QASL_REFORMULATOR_H_
#define QASL_REFORMULATOR_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qasl/random.h"
#include "qasl/types.h"

namespace qasl {

// How requested slots are rendered into a question suffix.
struct PromptSpec {
  std::string separator_token{SlotOntology::kDefaultSeparator};
  // When false the requested-slot suffix is never appended.
  bool include_requested = true;

  // "arrival_time" -> "arrival time": underscores become spaces, ASCII
  // letters are lowercased.
  std::string RenderSlot(std::string_view slot) const;

  static PromptSpec ForOntology(const SlotOntology& ontology);
};

enum class ContextMode { kUserOnly, kWithSystem };
std::string_view ContextModeName(ContextMode mode);
ContextMode ParseContextMode(std::string_view name);  // ConfigError

// Scalar-value range [start, end).
struct CharRange {
  size_t start = 0;
  size_t end = 0;

  bool operator==(const CharRange&) const = default;
  size_t size() const { return end - start; }
  bool Contains(size_t s, size_t e) const { return start <= s && e <= end; }
};

struct BuiltContext {
  std::string context;
  CharRange user_region;
};

// Canonical (first) question for `slot`. Throws UnknownSlotError.
std::string build_question(std::string_view slot, const SlotOntology& ontology);

// question + " <sep> rendered(r)" for each requested slot, in order.
std::string augment_with_requested(std::string_view question,
                                   std::span<const std::string> requested,
                                   const PromptSpec& spec);

// user_only: the user text. with_system: system text, one space, user text.
BuiltContext build_context(const DialogTurn& turn, ContextMode mode);

// Deterministic qid "{turn_id}:{slot}".
std::string MakeQid(std::string_view turn_id, std::string_view slot);

// One QAExample per ontology slot, in ontology order. When
// `paraphrase_rng` is non-null each question is drawn uniformly from the
// slot's paraphrases instead of the canonical one (training augmentation).
std::vector<QAExample> turn_to_qa(const DialogTurn& turn,
                                  const SlotOntology& ontology,
                                  const PromptSpec& spec, ContextMode mode,
                                  Rng* paraphrase_rng = nullptr);

}  // namespace qasl

#endif  // QASL_REFORMULATOR_H_
