#ifndef QASL_EVALUATOR_H_
#define QASL_EVALUATOR_H_

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qasl/corpus.h"
#include "qasl/types.h"

namespace qasl {

enum class Outcome { kTruePositive, kFalsePositive, kFalseNegative, kTrueNegative, kWrongSpan };
std::string_view OutcomeName(Outcome outcome);

// Exact span match on character ranges. A wrong span counts as both a
// false positive and a false negative in precision/recall.
Outcome classify(const SpanPrediction& pred, const SpanLabel* gold);

struct SlotMetrics {
  std::string slot;
  size_t tp = 0, fp = 0, fn = 0, tn = 0, wrong_span = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool undefined = false;  // a zero denominator forced f1 to 0
};

struct MetricsReport {
  std::string subset = "all";
  size_t turns = 0;
  std::vector<SlotMetrics> slots;  // ontology order
  double macro_f1 = 0.0;

  std::string ToJson() const;
  std::string ToTable() const;
};

using TurnFilter = std::function<bool(const DialogTurn&)>;

// Turns whose requested_slots are non-empty.
TurnFilter RequestedNonEmpty();

// Per-slot exact-match F1 and the unweighted macro average over ontology
// slots. Predictions are keyed by "{turn_id}:{slot}" with offsets into
// user_text. Throws Error("missing_predictions") listing absent qids.
MetricsReport evaluate(std::span<const SpanPrediction> preds, const SLDataset& ds,
                       const TurnFilter& filter = nullptr, std::string subset_name = "all");

}  // namespace qasl

#endif  // QASL_EVALUATOR_H_
