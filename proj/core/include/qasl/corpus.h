#ifndef QASL_CORPUS_H_
#define QASL_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qasl/reformulator.h"
#include "qasl/types.h"

namespace qasl {

struct SLDataset {
  std::string name;
  SlotOntology ontology;
  std::vector<DialogTurn> turns;

  size_t size() const { return turns.size(); }
  bool operator==(const SLDataset&) const = default;
};

struct QADataset {
  std::string name;
  std::vector<QAExample> examples;

  size_t size() const { return examples.size(); }
  bool operator==(const QADataset&) const = default;
};

// All violations of every turn, plus duplicate turn ids.
std::vector<std::string> DatasetViolations(const SLDataset& ds);

// Native SL JSON:
//   {"name": str, "separator_token": str?, "slots": {name: {"questions": [...],
//    "kind": str?} | [...]}, "turns": [DialogTurn...]}
// Throws ParseError on malformed input, ValidationError when turns violate
// their invariants.
SLDataset parse_sl_json(std::string_view text);
std::string emit_sl_json(const SLDataset& ds);
SLDataset load_sl(const std::filesystem::path& path);

// Concatenation of turn_to_qa over all turns.
QADataset sl_to_qa(const SLDataset& ds, const PromptSpec& spec, ContextMode mode);

// SQuAD2.0 JSON. Consecutive examples sharing a context form one paragraph.
std::string emit_squad_json(const QADataset& qa);
QADataset parse_squad_json(std::string_view text);  // ParseError
QADataset load_squad(const std::filesystem::path& path);

// A few-shot fraction num/den (1/128 ... 1).
struct Fraction {
  int num = 1;
  int den = 1;

  bool operator==(const Fraction&) const = default;
  double value() const { return static_cast<double>(num) / den; }
  std::string ToString() const;  // "1/128", "1"
};
Fraction ParseFraction(std::string_view text);  // ConfigError

// 1/128, 1/64, ..., 1/2, 1 in increasing order.
const std::vector<Fraction>& StandardFractions();

// Dataset families with reference split sizes.
enum class SplitFamily { kGeneric, kRestaurants8k, kBuses, kEvents, kRentalCars, kHomes };
SplitFamily FamilyForName(std::string_view dataset_name);

// Number of turns a split keeps. Uses the reference table when the family
// is known and n equals its full size, floor(n * fraction) otherwise.
// Throws ConfigError when the fraction is invalid for the family or the
// split would be empty.
size_t SplitSize(SplitFamily family, size_t n, Fraction fraction);

// Seeded nested sample of whole turns. Turns keep their original order.
SLDataset sample_split(const SLDataset& ds, Fraction fraction, uint64_t seed);

// Uniform sample of n examples without replacement, original order kept.
QADataset subsample_qa(const QADataset& qa, size_t n, uint64_t seed);

}  // namespace qasl

#endif  // QASL_CORPUS_H_
