#include <algorithm>

#include <gtest/gtest.h>

#include "json.hpp"
#include "qasl/decoder.h"
#include "qasl/errors.h"
#include "qasl/evaluator.h"
#include "qasl/io.h"
#include "qasl/random.h"
#include "test_support.h"

namespace qasl {
namespace {

using Json = nlohmann::json;

double Ratio(const Json& pair) { return pair[0].get<double>() / pair[1].get<double>(); }

struct Golden {
  SLDataset gold;
  std::vector<SpanPrediction> preds;
  Json expected;
};

Golden LoadGolden() {
  return {load_sl(testing::TestData("eval_gold.json")),
          parse_predictions_jsonl(ReadFile(testing::TestData("eval_preds.jsonl"))),
          Json::parse(ReadFile(testing::TestData("eval_expected.json")))};
}

void ExpectMatches(const MetricsReport& r, const Json& want) {
  EXPECT_EQ(r.turns, want["turns"].get<size_t>());
  ASSERT_EQ(r.slots.size(), want["slots"].size());
  for (const auto& m : r.slots) {
    const Json& w = want["slots"][m.slot];
    EXPECT_EQ(m.tp, w["tp"].get<size_t>()) << m.slot;
    EXPECT_EQ(m.fp, w["fp"].get<size_t>()) << m.slot;
    EXPECT_EQ(m.fn, w["fn"].get<size_t>()) << m.slot;
    EXPECT_EQ(m.tn, w["tn"].get<size_t>()) << m.slot;
    EXPECT_EQ(m.wrong_span, w["wrong_span"].get<size_t>()) << m.slot;
    EXPECT_NEAR(m.precision, Ratio(w["precision"]), 1e-12) << m.slot;
    EXPECT_NEAR(m.recall, Ratio(w["recall"]), 1e-12) << m.slot;
    EXPECT_NEAR(m.f1, Ratio(w["f1"]), 1e-12) << m.slot;
  }
  EXPECT_NEAR(r.macro_f1, Ratio(want["macro_f1"]), 1e-12);
}

TEST(Classify, Outcomes) {
  SpanLabel gold{"time", 3, 7, "7 pm"};
  SpanPrediction none;
  SpanPrediction exact;
  exact.text = "7 pm";
  exact.start = 3;
  exact.end = 7;
  SpanPrediction shifted = exact;
  shifted.end = 5;
  EXPECT_EQ(classify(exact, &gold), Outcome::kTruePositive);
  EXPECT_EQ(classify(shifted, &gold), Outcome::kWrongSpan);
  EXPECT_EQ(classify(none, &gold), Outcome::kFalseNegative);
  EXPECT_EQ(classify(exact, nullptr), Outcome::kFalsePositive);
  EXPECT_EQ(classify(none, nullptr), Outcome::kTrueNegative);
}

TEST(Evaluate, GoldenFixture) {
  const Golden g = LoadGolden();
  ExpectMatches(evaluate(g.preds, g.gold), g.expected["all"]);
}

TEST(Evaluate, GoldenFixtureRequestedSubset) {
  const Golden g = LoadGolden();
  ExpectMatches(evaluate(g.preds, g.gold, RequestedNonEmpty(), "requested"),
                g.expected["requested"]);
}

std::vector<SpanPrediction> Perfect(const SLDataset& ds) {
  std::vector<SpanPrediction> out;
  for (const auto& t : ds.turns) {
    for (const auto& s : ds.ontology.slots()) {
      SpanPrediction p;
      p.qid = MakeQid(t.turn_id, s.name);
      if (const SpanLabel* l = t.LabelFor(s.name)) {
        p.text = l->value;
        p.start = l->start;
        p.end = l->end;
      }
      out.push_back(p);
    }
  }
  return out;
}

TEST(Evaluate, AllCorrectIsOneAllWrongIsZero) {
  const Golden g = LoadGolden();
  const auto perfect = Perfect(g.gold);
  EXPECT_DOUBLE_EQ(evaluate(perfect, g.gold).macro_f1, 1.0);
  auto wrong = perfect;
  for (auto& p : wrong) {
    if (p.has_answer()) {
      *p.end = *p.start + 1 == *p.end ? *p.end + 1 : *p.end - 1;
    } else {
      p.text = "x";
      p.start = 0;
      p.end = 1;
    }
  }
  EXPECT_DOUBLE_EQ(evaluate(wrong, g.gold).macro_f1, 0.0);
}

TEST(Evaluate, PropertyPermutationAndDuplicationInvariance) {
  const Golden g = LoadGolden();
  const MetricsReport base = evaluate(g.preds, g.gold);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto preds = g.preds;
    rng.Shuffle(preds);
    SLDataset shuffled = g.gold;
    rng.Shuffle(shuffled.turns);
    const MetricsReport r = evaluate(preds, shuffled);
    ASSERT_EQ(r.macro_f1, base.macro_f1);
    // Doubling every turn (with fresh ids) doubles every count, F1 unchanged.
    SLDataset doubled = g.gold;
    auto doubled_preds = g.preds;
    for (const auto& t : g.gold.turns) {
      DialogTurn copy = t;
      copy.turn_id += "-dup";
      doubled.turns.push_back(copy);
    }
    for (const auto& p : g.preds) {
      SpanPrediction copy = p;
      const size_t colon = copy.qid.find(':');
      copy.qid = copy.qid.substr(0, colon) + "-dup" + copy.qid.substr(colon);
      doubled_preds.push_back(copy);
    }
    const MetricsReport d = evaluate(doubled_preds, doubled);
    ASSERT_NEAR(d.macro_f1, base.macro_f1, 1e-12);
    ASSERT_EQ(d.slots[0].tp, 2 * base.slots[0].tp);
  }
}

TEST(Evaluate, MissingAndDuplicatePredictions) {
  const Golden g = LoadGolden();
  auto missing = g.preds;
  missing.pop_back();
  try {
    evaluate(missing, g.gold);
    FAIL() << "expected missing_predictions";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "missing_predictions");
    EXPECT_NE(std::string(e.what()).find("e10:people"), std::string::npos);
  }
  auto dup = g.preds;
  dup.push_back(dup.front());
  EXPECT_THROW(evaluate(dup, g.gold), Error);
}

TEST(Evaluate, ZeroDenominatorSlotCountsAsZero) {
  SLDataset ds;
  ds.ontology = SlotOntology(std::vector<SlotDefinition>{{"a", {"A?"}}, {"b", {"B?"}}});
  DialogTurn t;
  t.turn_id = "t";
  t.user_text = "xy";
  t.gold_labels.push_back({"a", 0, 1, "x"});
  ds.turns.push_back(t);
  const auto preds = Perfect(ds);
  const MetricsReport r = evaluate(preds, ds);
  EXPECT_DOUBLE_EQ(r.slots[0].f1, 1.0);
  EXPECT_TRUE(r.slots[1].undefined);
  EXPECT_DOUBLE_EQ(r.slots[1].f1, 0.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 0.5);
}

TEST(MetricsReport, JsonAndTable) {
  const Golden g = LoadGolden();
  const MetricsReport r = evaluate(g.preds, g.gold);
  const Json j = Json::parse(r.ToJson());
  EXPECT_NEAR(j["macro_f1"].get<double>(), 7.0 / 13.0, 1e-12);
  EXPECT_EQ(j["slots"][0]["slot"], "time");
  EXPECT_NE(r.ToTable().find("macro F1"), std::string::npos);
}

}  // namespace
}  // namespace qasl
