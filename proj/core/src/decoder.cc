#include "qasl/decoder.h"

#include <deque>
#include <limits>
#include <sstream>

#include "json_codec.h"
#include "qasl/errors.h"
#include "qasl/utf8.h"

namespace qasl {

SpanPrediction decode(std::span<const double> start_logits, std::span<const double> end_logits,
                      TokenRange valid_region, size_t anchor,
                      std::span<const CharRange> offset_map, std::string_view raw_context,
                      const DecodeConfig& cfg, std::string qid) {
  SpanPrediction pred;
  pred.qid = std::move(qid);
  pred.no_answer_score = start_logits[anchor] + end_logits[anchor];
  pred.score = std::numeric_limits<double>::lowest();
  valid_region.end = std::min(valid_region.end, start_logits.size());
  if (valid_region.empty() || cfg.max_span_tokens <= 0) return pred;

  // Sliding-window maximum of start logits over the admissible starts of
  // each end position. The deque holds non-increasing start logits, so its
  // front is the earliest maximum.
  const size_t window = static_cast<size_t>(cfg.max_span_tokens);
  std::deque<size_t> starts;
  bool found = false;
  size_t best_i = 0, best_j = 0;
  double best = std::numeric_limits<double>::lowest();
  for (size_t j = valid_region.begin; j < valid_region.end; ++j) {
    while (!starts.empty() && start_logits[starts.back()] < start_logits[j]) starts.pop_back();
    starts.push_back(j);
    while (starts.front() + window <= j) starts.pop_front();
    const size_t i = starts.front();
    const double score = start_logits[i] + end_logits[j];
    if (!found || score > best || (score == best && i < best_i)) {
      found = true;
      best = score;
      best_i = i;
      best_j = j;
    }
  }
  pred.score = best;
  if (pred.no_answer_score + cfg.no_answer_threshold >= best) return pred;
  const size_t cs = offset_map[best_i].start;
  const size_t ce = offset_map[best_j].end;
  pred.start = cs;
  pred.end = ce;
  pred.text = utf8::Substr(raw_context, cs, ce);
  return pred;
}

TokenRange RegionTokens(const EncodedInput& input, CharRange region) {
  TokenRange out{input.context_end, input.context_end};
  bool any = false;
  for (size_t t = input.context_begin; t < input.context_end; ++t) {
    const CharRange& r = input.offsets[t];
    if (region.Contains(r.start, r.end)) {
      if (!any) out.begin = t;
      out.end = t + 1;
      any = true;
    }
  }
  return out;
}

std::vector<SpanPrediction> batch_decode(const SpanModel& model, const QADataset& qa,
                                         std::span<const CharRange> regions,
                                         const DecodeConfig& cfg) {
  if (!regions.empty() && regions.size() != qa.size()) {
    throw Error("invalid_argument", "one region per example is required");
  }
  std::vector<SpanPrediction> out;
  out.reserve(qa.size());
  for (size_t k = 0; k < qa.size(); ++k) {
    const QAExample& ex = qa.examples[k];
    const ForwardResult fr = model.Forward(ex.question, ex.context);
    const CharRange region =
        regions.empty() ? CharRange{0, utf8::Length(ex.context)} : regions[k];
    out.push_back(decode(fr.start_logits, fr.end_logits, RegionTokens(fr.input, region),
                         fr.input.anchor, fr.input.offsets, ex.context, cfg, ex.qid));
  }
  return out;
}

std::vector<SpanPrediction> batch_decode(const SpanModel& model, const QADataset& qa,
                                         const DecodeConfig& cfg) {
  return batch_decode(model, qa, std::span<const CharRange>{}, cfg);
}

std::vector<SpanPrediction> predict_turns(const SpanModel& model, const SLDataset& ds,
                                          const PromptSpec& spec, ContextMode mode,
                                          const DecodeConfig& cfg) {
  std::vector<SpanPrediction> out;
  out.reserve(ds.size() * ds.ontology.size());
  for (const auto& turn : ds.turns) {
    const BuiltContext ctx = build_context(turn, mode);
    const auto examples = turn_to_qa(turn, ds.ontology, spec, mode);
    for (const auto& ex : examples) {
      const ForwardResult fr = model.Forward(ex.question, ex.context);
      SpanPrediction p = decode(fr.start_logits, fr.end_logits,
                                RegionTokens(fr.input, ctx.user_region), fr.input.anchor,
                                fr.input.offsets, ex.context, cfg, ex.qid);
      if (p.has_answer()) {
        *p.start -= ctx.user_region.start;
        *p.end -= ctx.user_region.start;
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::string emit_predictions_jsonl(std::span<const SpanPrediction> preds) {
  std::string out;
  for (const auto& p : preds) {
    out += json_codec::PredictionToJson(p).dump();
    out += '\n';
  }
  return out;
}

std::vector<SpanPrediction> parse_predictions_jsonl(std::string_view text) {
  std::vector<SpanPrediction> out;
  int line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(json_codec::PredictionFromJson(json_codec::ParseText(line), "prediction"));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no, e.field());
    }
  }
  return out;
}

}  // namespace qasl
