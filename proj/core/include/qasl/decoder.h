#ifndef QASL_DECODER_H_
#define QASL_DECODER_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qasl/corpus.h"
#include "qasl/encoder.h"
#include "qasl/reformulator.h"
#include "qasl/span_model.h"
#include "qasl/types.h"

namespace qasl {

struct DecodeConfig {
  int max_span_tokens = 30;
  // tau: the answer is dropped when no_answer_score + tau >= best span score.
  double no_answer_threshold = 0.0;
};

// Token index range [begin, end).
struct TokenRange {
  size_t begin = 0;
  size_t end = 0;

  bool empty() const { return begin >= end; }
};

// Best span (i, j), i <= j, j - i < max_span_tokens, both inside
// `valid_region`, scored start_logits[i] + end_logits[j]. Ties go to the
// earliest start, then the shortest span. The anchor's start+end logits
// score the no-answer hypothesis. Offsets in the result index
// `raw_context`.
SpanPrediction decode(std::span<const double> start_logits, std::span<const double> end_logits,
                      TokenRange valid_region, size_t anchor,
                      std::span<const CharRange> offset_map, std::string_view raw_context,
                      const DecodeConfig& cfg, std::string qid = {});

// Context tokens lying entirely inside `region` (character range).
TokenRange RegionTokens(const EncodedInput& input, CharRange region);

// Decodes every example; the valid region is the whole context.
std::vector<SpanPrediction> batch_decode(const SpanModel& model, const QADataset& qa,
                                         const DecodeConfig& cfg);

// Same, restricting each example to its own character region.
std::vector<SpanPrediction> batch_decode(const SpanModel& model, const QADataset& qa,
                                         std::span<const CharRange> regions,
                                         const DecodeConfig& cfg);

// Reformulates and decodes every (turn, slot) of an SL dataset. Offsets in
// the returned predictions index each turn's user_text; qids follow
// "{turn_id}:{slot}".
std::vector<SpanPrediction> predict_turns(const SpanModel& model, const SLDataset& ds,
                                          const PromptSpec& spec, ContextMode mode,
                                          const DecodeConfig& cfg);

// JSON lines, one SpanPrediction per line.
std::string emit_predictions_jsonl(std::span<const SpanPrediction> preds);
std::vector<SpanPrediction> parse_predictions_jsonl(std::string_view text);  // ParseError

}  // namespace qasl

#endif  // QASL_DECODER_H_
