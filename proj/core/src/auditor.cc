#include "qasl/auditor.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <regex>

#include "json_codec.h"
#include "qasl/errors.h"
#include "qasl/utf8.h"

namespace qasl {

namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view Trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool IsDigits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool IsTimeSlot(const SlotDefinition& s) {
  return s.kind == SlotKind::kTime || s.name.find("time") != std::string::npos;
}

bool IsCountSlot(const SlotDefinition& s) {
  return s.kind == SlotKind::kCount || s.name.find("people") != std::string::npos;
}

// One labeled value, located in the dataset.
struct LabelRef {
  const DialogTurn* turn;
  const SpanLabel* label;
};

std::vector<LabelRef> LabelsOf(const SLDataset& ds, std::string_view slot) {
  std::vector<LabelRef> out;
  for (const auto& t : ds.turns) {
    for (const auto& l : t.gold_labels) {
      if (l.slot == slot) out.push_back({&t, &l});
    }
  }
  return out;
}

AuditFinding Finding(std::string_view rule, const LabelRef& ref, Severity severity) {
  return {std::string(rule), ref.turn->turn_id, ref.label->slot, ref.label->value, severity};
}

// Keeps turn order and drops repeats of the same label.
void FlagInOrder(std::string_view rule, std::vector<LabelRef> refs,
                 std::vector<AuditFinding>& out) {
  std::stable_sort(refs.begin(), refs.end(), [](const LabelRef& a, const LabelRef& b) {
    if (a.turn != b.turn) return a.turn < b.turn;
    return a.label < b.label;
  });
  refs.erase(std::unique(refs.begin(), refs.end(),
                         [](const LabelRef& a, const LabelRef& b) {
                           return a.turn == b.turn && a.label == b.label;
                         }),
             refs.end());
  for (const auto& r : refs) out.push_back(Finding(rule, r, Severity::kInconsistency));
}

void PmVariants(const SLDataset& ds, std::vector<AuditFinding>& out) {
  static const std::regex kPlain("(^|[^a-z.])[ap]m([^a-z.]|$)");
  std::vector<LabelRef> plain, dotted;
  for (const auto& slot : ds.ontology.slots()) {
    if (!IsTimeSlot(slot)) continue;
    for (const auto& ref : LabelsOf(ds, slot.name)) {
      const std::string v = Lower(ref.label->value);
      if (v.find("p.m.") != std::string::npos || v.find("a.m.") != std::string::npos) {
        dotted.push_back(ref);
      } else if (std::regex_search(v, kPlain)) {
        plain.push_back(ref);
      }
    }
  }
  if (plain.empty() || dotted.empty()) return;
  plain.insert(plain.end(), dotted.begin(), dotted.end());
  FlagInOrder(rules::kPmVariants, std::move(plain), out);
}

// True when user_text right before the label reads "<word> " at a word
// boundary, i.e. the annotator left the word out of the span.
bool PrecededBy(const LabelRef& ref, std::string_view word) {
  const std::string before = Lower(utf8::Substr(ref.turn->user_text, 0, ref.label->start));
  const std::string needle = std::string(word) + " ";
  if (!before.ends_with(needle)) return false;
  if (before.size() == needle.size()) return true;
  const char prev = before[before.size() - needle.size() - 1];
  return !std::isalnum(static_cast<unsigned char>(prev));
}

void LeadingFunctionWord(const SLDataset& ds, std::vector<AuditFinding>& out) {
  static constexpr std::string_view kWords[] = {"at", "on", "the"};
  for (const auto& slot : ds.ontology.slots()) {
    const auto refs = LabelsOf(ds, slot.name);
    std::vector<LabelRef> flagged;
    for (std::string_view word : kWords) {
      const std::string prefix = std::string(word) + " ";
      std::vector<LabelRef> with, without;
      std::vector<std::string> stripped;
      for (const auto& ref : refs) {
        const std::string v = Lower(ref.label->value);
        if (v.starts_with(prefix)) {
          with.push_back(ref);
          stripped.push_back(v.substr(prefix.size()));
        }
      }
      if (with.empty()) continue;
      for (const auto& ref : refs) {
        const std::string v = Lower(ref.label->value);
        if (v.starts_with(prefix)) continue;
        if (PrecededBy(ref, word) ||
            std::find(stripped.begin(), stripped.end(), v) != stripped.end()) {
          without.push_back(ref);
        }
      }
      if (without.empty()) continue;
      flagged.insert(flagged.end(), with.begin(), with.end());
      flagged.insert(flagged.end(), without.begin(), without.end());
    }
    FlagInOrder(rules::kLeadingFunctionWord, std::move(flagged), out);
  }
}

void PeopleNoun(const SLDataset& ds, std::vector<AuditFinding>& out) {
  static const std::string kNumber =
      "([0-9]+|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve)";
  static const std::regex kWithNoun("^" + kNumber +
                                    " +(people|persons|person|guests|adults|diners)$");
  static const std::regex kBare("^" + kNumber + "$");
  for (const auto& slot : ds.ontology.slots()) {
    if (!IsCountSlot(slot)) continue;
    std::vector<LabelRef> with, bare;
    for (const auto& ref : LabelsOf(ds, slot.name)) {
      const std::string v = Lower(Trim(ref.label->value));
      if (std::regex_match(v, kWithNoun)) {
        with.push_back(ref);
      } else if (std::regex_match(v, kBare)) {
        bare.push_back(ref);
      }
    }
    if (with.empty() || bare.empty()) continue;
    with.insert(with.end(), bare.begin(), bare.end());
    FlagInOrder(rules::kPeopleNoun, std::move(with), out);
  }
}

void SlotPairs(const SLDataset& ds, const AuditOptions& options,
               std::vector<AuditFinding>& out) {
  for (const auto& [a, b] : options.slot_pairs) {
    if (!ds.ontology.Contains(a)) throw UnknownSlotError(a);
    if (!ds.ontology.Contains(b)) throw UnknownSlotError(b);
  }
  for (const auto& turn : ds.turns) {
    for (const auto& [a, b] : options.slot_pairs) {
      const SpanLabel* la = turn.LabelFor(a);
      const SpanLabel* lb = turn.LabelFor(b);
      auto requested = [&](const std::string& s) {
        return std::find(turn.requested_slots.begin(), turn.requested_slots.end(), s) !=
               turn.requested_slots.end();
      };
      if (la && lb) {
        if (la->start == lb->start && la->end == lb->end) {
          out.push_back({std::string(rules::kSlotPair), turn.turn_id, a, la->value,
                         Severity::kAmbiguity});
        }
      } else if ((la || lb) && !requested(a) && !requested(b)) {
        const SpanLabel* l = la ? la : lb;
        out.push_back({std::string(rules::kSlotPair), turn.turn_id, l->slot, l->value,
                       Severity::kAmbiguity});
      }
    }
  }
}

}  // namespace

std::string_view SeverityName(Severity s) {
  return s == Severity::kAmbiguity ? "ambiguity" : "inconsistency";
}

const std::vector<std::string>& AllRules() {
  static const std::vector<std::string> kRules = {
      std::string(rules::kAmbiguousNumeric), std::string(rules::kPmVariants),
      std::string(rules::kLeadingFunctionWord), std::string(rules::kPeopleNoun),
      std::string(rules::kSlotPair)};
  return kRules;
}

const std::vector<std::string>& DefaultRules() {
  static const std::vector<std::string> kRules(AllRules().begin(), AllRules().end() - 1);
  return kRules;
}

std::set<std::string> ParseRuleList(std::string_view csv) {
  std::set<std::string> out;
  size_t pos = 0;
  while (pos <= csv.size()) {
    size_t comma = csv.find(',', pos);
    if (comma == std::string_view::npos) comma = csv.size();
    const std::string name(Trim(csv.substr(pos, comma - pos)));
    pos = comma + 1;
    if (name.empty()) continue;
    if (name == "all") {
      out.insert(AllRules().begin(), AllRules().end());
      continue;
    }
    if (std::find(AllRules().begin(), AllRules().end(), name) == AllRules().end()) {
      throw ConfigError("unknown audit rule '" + name + "'");
    }
    out.insert(name);
  }
  return out;
}

std::vector<AuditFinding> find_ambiguous_numeric(const SLDataset& ds) {
  std::vector<AuditFinding> out;
  const auto& slots = ds.ontology.slots();
  const auto numeric = std::count_if(slots.begin(), slots.end(),
                                     [](const SlotDefinition& s) { return IsNumericKind(s.kind); });
  if (numeric < 2) return out;
  for (const auto& turn : ds.turns) {
    const std::string_view text = Trim(turn.user_text);
    if (IsDigits(text)) {
      out.push_back({std::string(rules::kAmbiguousNumeric), turn.turn_id, std::nullopt,
                     std::string(text), Severity::kAmbiguity});
    }
  }
  return out;
}

std::vector<AuditFinding> find_inconsistencies(const SLDataset& ds, const AuditOptions& options) {
  const auto enabled = [&](std::string_view rule) {
    if (options.rules.empty()) {
      return std::find(DefaultRules().begin(), DefaultRules().end(), rule) !=
             DefaultRules().end();
    }
    return options.rules.contains(std::string(rule));
  };
  std::vector<AuditFinding> out;
  if (enabled(rules::kPmVariants)) PmVariants(ds, out);
  if (enabled(rules::kLeadingFunctionWord)) LeadingFunctionWord(ds, out);
  if (enabled(rules::kPeopleNoun)) PeopleNoun(ds, out);
  if (enabled(rules::kSlotPair)) SlotPairs(ds, options, out);
  return out;
}

AuditReport audit(const SLDataset& ds, const AuditOptions& options) {
  AuditReport report;
  const bool numeric = options.rules.empty() ||
                       options.rules.contains(std::string(rules::kAmbiguousNumeric));
  if (numeric) report.findings = find_ambiguous_numeric(ds);
  auto rest = find_inconsistencies(ds, options);
  report.findings.insert(report.findings.end(), rest.begin(), rest.end());
  return report;
}

size_t AuditReport::CountFor(std::string_view rule) const {
  return static_cast<size_t>(std::count_if(findings.begin(), findings.end(),
                                           [&](const AuditFinding& f) { return f.rule == rule; }));
}

std::string AuditReport::ToJson() const {
  using json_codec::Json;
  Json j;
  j["total"] = findings.size();
  Json counts = Json::object();
  for (const auto& rule : AllRules()) counts[rule] = CountFor(rule);
  j["counts"] = std::move(counts);
  Json arr = Json::array();
  for (const auto& f : findings) {
    Json e;
    e["rule"] = f.rule;
    e["turn_id"] = f.turn_id;
    e["slot"] = f.slot ? Json(*f.slot) : Json(nullptr);
    e["evidence"] = f.evidence;
    e["severity"] = SeverityName(f.severity);
    arr.push_back(std::move(e));
  }
  j["findings"] = std::move(arr);
  return j.dump(2) + "\n";
}

std::string AuditReport::ToTable() const {
  std::string out;
  char line[512];
  std::snprintf(line, sizeof(line), "%-22s %-16s %-14s %-13s %s\n", "rule", "turn", "slot",
                "severity", "evidence");
  out += line;
  for (const auto& f : findings) {
    std::snprintf(line, sizeof(line), "%-22s %-16s %-14s %-13s \"%s\"\n", f.rule.c_str(),
                  f.turn_id.c_str(), f.slot ? f.slot->c_str() : "-",
                  std::string(SeverityName(f.severity)).c_str(), f.evidence.c_str());
    out += line;
  }
  std::snprintf(line, sizeof(line), "%zu findings\n", findings.size());
  out += line;
  return out;
}

}  // namespace qasl
