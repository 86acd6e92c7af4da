#include "qasl/evaluator.h"

#include <cstdio>
#include <unordered_map>

#include "json_codec.h"
#include "qasl/errors.h"
#include "qasl/reformulator.h"

namespace qasl {

std::string_view OutcomeName(Outcome outcome) {
  switch (outcome) {
    case Outcome::kTruePositive: return "TP";
    case Outcome::kFalsePositive: return "FP";
    case Outcome::kFalseNegative: return "FN";
    case Outcome::kTrueNegative: return "TN";
    case Outcome::kWrongSpan: return "WrongSpan";
  }
  return "TN";
}

Outcome classify(const SpanPrediction& pred, const SpanLabel* gold) {
  if (gold == nullptr) return pred.has_answer() ? Outcome::kFalsePositive : Outcome::kTrueNegative;
  if (!pred.has_answer()) return Outcome::kFalseNegative;
  return (*pred.start == gold->start && *pred.end == gold->end) ? Outcome::kTruePositive
                                                                 : Outcome::kWrongSpan;
}

TurnFilter RequestedNonEmpty() {
  return [](const DialogTurn& t) { return !t.requested_slots.empty(); };
}

MetricsReport evaluate(std::span<const SpanPrediction> preds, const SLDataset& ds,
                       const TurnFilter& filter, std::string subset_name) {
  std::unordered_map<std::string, const SpanPrediction*> by_qid;
  by_qid.reserve(preds.size());
  for (const auto& p : preds) {
    if (!by_qid.emplace(p.qid, &p).second) {
      throw Error("duplicate_predictions", "prediction for '" + p.qid + "' appears twice");
    }
  }

  MetricsReport report;
  report.subset = std::move(subset_name);
  for (const auto& s : ds.ontology.slots()) report.slots.push_back({.slot = s.name});

  std::vector<std::string> missing;
  for (const auto& turn : ds.turns) {
    if (filter && !filter(turn)) continue;
    ++report.turns;
    for (size_t k = 0; k < report.slots.size(); ++k) {
      SlotMetrics& m = report.slots[k];
      const std::string qid = MakeQid(turn.turn_id, m.slot);
      auto it = by_qid.find(qid);
      if (it == by_qid.end()) {
        missing.push_back(qid);
        continue;
      }
      switch (classify(*it->second, turn.LabelFor(m.slot))) {
        case Outcome::kTruePositive: ++m.tp; break;
        case Outcome::kFalsePositive: ++m.fp; break;
        case Outcome::kFalseNegative: ++m.fn; break;
        case Outcome::kTrueNegative: ++m.tn; break;
        case Outcome::kWrongSpan: ++m.wrong_span; break;
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " predictions missing:";
    for (size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ...";
    throw Error("missing_predictions", msg);
  }

  double sum = 0.0;
  for (auto& m : report.slots) {
    const size_t p_den = m.tp + m.fp + m.wrong_span;
    const size_t r_den = m.tp + m.fn + m.wrong_span;
    if (p_den == 0 || r_den == 0) {
      m.undefined = true;
      m.precision = p_den == 0 ? 0.0 : static_cast<double>(m.tp) / p_den;
      m.recall = r_den == 0 ? 0.0 : static_cast<double>(m.tp) / r_den;
      m.f1 = 0.0;
    } else {
      m.precision = static_cast<double>(m.tp) / p_den;
      m.recall = static_cast<double>(m.tp) / r_den;
      m.f1 = m.tp == 0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    sum += m.f1;
  }
  report.macro_f1 = report.slots.empty() ? 0.0 : sum / static_cast<double>(report.slots.size());
  return report;
}

std::string MetricsReport::ToJson() const {
  using json_codec::Json;
  Json j;
  j["subset"] = subset;
  j["turns"] = turns;
  j["macro_f1"] = macro_f1;
  Json arr = Json::array();
  for (const auto& m : slots) {
    arr.push_back({{"slot", m.slot},
                   {"tp", m.tp},
                   {"fp", m.fp},
                   {"fn", m.fn},
                   {"tn", m.tn},
                   {"wrong_span", m.wrong_span},
                   {"precision", m.precision},
                   {"recall", m.recall},
                   {"f1", m.f1},
                   {"undefined", m.undefined}});
  }
  j["slots"] = std::move(arr);
  return j.dump(2) + "\n";
}

std::string MetricsReport::ToTable() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-20s %6s %6s %6s %6s %6s %8s %8s %8s\n", "slot", "TP",
                "FP", "FN", "TN", "WRONG", "P", "R", "F1");
  out += line;
  for (const auto& m : slots) {
    std::snprintf(line, sizeof(line), "%-20s %6zu %6zu %6zu %6zu %6zu %8.4f %8.4f %8.4f%s\n",
                  m.slot.c_str(), m.tp, m.fp, m.fn, m.tn, m.wrong_span, m.precision, m.recall,
                  m.f1, m.undefined ? " *" : "");
    out += line;
  }
  std::snprintf(line, sizeof(line), "macro F1 (%s, %zu turns): %.4f\n", subset.c_str(), turns,
                macro_f1);
  out += line;
  return out;
}

}  // namespace qasl
