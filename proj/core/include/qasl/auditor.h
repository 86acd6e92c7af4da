#ifndef QASL_AUDITOR_H_
#define QASL_AUDITOR_H_

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qasl/corpus.h"

namespace qasl {

enum class Severity { kAmbiguity, kInconsistency };
std::string_view SeverityName(Severity s);

struct AuditFinding {
  std::string rule;
  std::string turn_id;
  std::optional<std::string> slot;
  std::string evidence;  // substring of user_text or of the label value
  Severity severity = Severity::kInconsistency;

  bool operator==(const AuditFinding&) const = default;
};

namespace rules {
inline constexpr std::string_view kAmbiguousNumeric = "ambiguous-numeric";
inline constexpr std::string_view kPmVariants = "pm-variants";
inline constexpr std::string_view kLeadingFunctionWord = "leading-function-word";
inline constexpr std::string_view kPeopleNoun = "people-noun";
inline constexpr std::string_view kSlotPair = "slot-pair";
}  // namespace rules

// Every rule id, in reporting order.
const std::vector<std::string>& AllRules();
// Rules enabled when none are named explicitly (slot-pair needs pairs).
const std::vector<std::string>& DefaultRules();

struct AuditOptions {
  std::set<std::string> rules;  // empty means DefaultRules()
  // Slots that describe the same kind of value at two points, e.g. pickup
  // and dropoff date. Used by the slot-pair rule.
  std::vector<std::pair<std::string, std::string>> slot_pairs;
};

// Parses "a,b,c" into a rule set. Throws ConfigError on unknown ids.
std::set<std::string> ParseRuleList(std::string_view csv);

// Turns whose trimmed user_text is a single integer token, when the
// ontology has two or more numeric-kind slots.
std::vector<AuditFinding> find_ambiguous_numeric(const SLDataset& ds);

// Intra-dataset disagreement between annotation styles.
//   pm-variants: time values written "pm"/"am" and "p.m."/"a.m." both occur.
//   leading-function-word: per slot, values starting with "at ", "on " or
//     "the " coexist with variants that leave the same word out.
//   people-noun: count values with a trailing noun ("4 people") coexist
//     with bare numbers ("4").
//   slot-pair: both slots of a declared pair labeled with the same span, or
//     exactly one labeled while neither was requested.
std::vector<AuditFinding> find_inconsistencies(const SLDataset& ds, const AuditOptions& options);

struct AuditReport {
  std::vector<AuditFinding> findings;

  size_t CountFor(std::string_view rule) const;
  std::string ToJson() const;
  std::string ToTable() const;
};

// Runs every enabled rule. Findings are ordered by rule, then by turn order.
AuditReport audit(const SLDataset& ds, const AuditOptions& options = {});

}  // namespace qasl

#endif  // QASL_AUDITOR_H_
