#include <cmath>
#include <cstring>
#include <set>

#include <gtest/gtest.h>

#include "qasl/encoder.h"
#include "qasl/tokenizer.h"
#include "qasl/errors.h"
#include "qasl/random.h"
#include "qasl/span_model.h"
#include "qasl/trainer.h"
#include "test_support.h"

namespace qasl {
namespace {

using testing::BookingExample;
using testing::TinyConfig;

// Central finite difference of the loss with respect to one coordinate.
double NumericGrad(SpanModel& m, const QAExample& ex, size_t param, Eigen::Index k, double h) {
  double& x = m.mutable_parameters().at(param).value.data()[k];
  const double orig = x;
  x = orig + h;
  const double plus = m.Loss(ex);
  x = orig - h;
  const double minus = m.Loss(ex);
  x = orig;
  return (plus - minus) / (2.0 * h);
}

// Relative error with a 1e-6 floor on the scale. Some head coordinates have
// an exactly zero gradient (a bias shared by every position cancels in the
// softmax); there the check degrades to an absolute 1e-10 bound.
double RelErr(double a, double b) {
  return std::abs(a - b) / std::max(1e-6, std::abs(a) + std::abs(b));
}

void PerturbAll(SpanModel& m, uint64_t seed, double scale) {
  Rng rng(seed);
  for (size_t i = 0; i < m.parameters().size(); ++i) {
    auto& v = m.mutable_parameters().at(i).value;
    for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] += rng.Normal(0.0, scale);
  }
}

TEST(Encode, LayoutAndOffsets) {
  SpanModel m(TinyConfig(), 1);
  const EncodedInput in = m.encoder().Encode("How many people?", "book for 4 people");
  EXPECT_EQ(in.anchor, 0u);
  // [CLS] How many people ? [SEP] book for 4 people [SEP]
  EXPECT_EQ(in.length(), 11u);
  EXPECT_EQ(in.context_begin, 6u);
  EXPECT_EQ(in.context_end, 10u);
  EXPECT_EQ(in.offsets[8], (CharRange{9, 10}));
  EXPECT_EQ(in.special_positions, (std::vector<size_t>{0, 5, 10}));
}

TEST(Tokenizer, AttachedPiecesGetDistinctShapes) {
  const Tokenizer tok(256, "<s>");
  const auto tokens = tok.Tokenize("on the 25th at 7:45 <s> time");
  std::vector<std::string> texts;
  std::vector<bool> attached;
  for (const auto& t : tokens) {
    texts.push_back(t.text);
    attached.push_back(t.attached);
  }
  EXPECT_EQ(texts, (std::vector<std::string>{"on", "the", "25", "th", "at", "7", ":", "45", "<s>",
                                             "time"}));
  EXPECT_EQ(attached, (std::vector<bool>{false, false, false, true, false, false, true, true,
                                         false, false}));
  EXPECT_EQ(tok.ShapeId(tokens[3]), Tokenizer::kShapeLower + Tokenizer::kNumBaseShapes);
  EXPECT_EQ(tok.ShapeId(tokens[1]), Tokenizer::kShapeLower);
  EXPECT_EQ(tok.ShapeId(tokens[8]), Tokenizer::kShapePromptSep);
  EXPECT_EQ(tok.TokenId(tokens[0]), tok.TokenId({"ON", {0, 2}, false}));
}

TEST(Encode, TruncatesContextAndRejectsLongQuestions) {
  ModelConfig cfg = TinyConfig();
  cfg.max_positions = 12;
  SpanModel m(cfg, 1);
  const ForwardResult r = m.Forward("When?", "one two three four five six seven eight nine ten");
  EXPECT_EQ(r.input.length(), 12u);
  EXPECT_GT(r.input.truncated_tokens, 0u);
  EXPECT_FALSE(r.warnings.empty());
  try {
    m.Forward("a b c d e f g h i j k l m", "x");
    FAIL() << "expected input_too_long";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "input_too_long");
  }
}

TEST(TargetPositions, AnswerTokensAndAnchor) {
  SpanModel m(TinyConfig(), 1);
  const QAExample ex = QAExample::Answerable("q", "at 7 pm tonight", "When?", "7 pm", 3);
  const EncodedInput in = m.encoder().Encode(ex.question, ex.context);
  const AnswerTarget t = TargetPositions(in, ex);
  EXPECT_EQ(in.offsets[t.start], (CharRange{3, 4}));
  EXPECT_EQ(in.offsets[t.end], (CharRange{5, 7}));
  const AnswerTarget none =
      TargetPositions(in, QAExample::Unanswerable("q", ex.context, ex.question));
  EXPECT_EQ(none.start, in.anchor);
  EXPECT_EQ(none.end, in.anchor);
}

TEST(Adapters, WidthsFollowFactors) {
  EXPECT_EQ(AdapterWidths(64, 4, AdapterConfig{}), (std::vector<int>{8, 4, 4, 8}));
  EXPECT_EQ(AdapterWidths(768, 12, AdapterConfig{}),
            (std::vector<int>{96, 48, 48, 48, 48, 48, 48, 48, 48, 48, 48, 96}));
  EXPECT_EQ(AdapterWidths(100, 2, AdapterConfig{}), (std::vector<int>{12, 12}));
  EXPECT_THROW(AdapterWidths(64, 4, AdapterConfig{128, 8}), ConfigError);
  EXPECT_THROW(AdapterWidths(64, 1, AdapterConfig{}), ConfigError);
}

TEST(Adapters, ParameterCountsMatchClosedForm) {
  const AdapterConfig ac{};
  for (int e : {16, 64, 768}) {
    for (int layers : {2, 4, 12}) {
      const auto layout = ModelLayout(
          ModelConfig{.hidden_size = e, .num_layers = layers, .num_heads = 4}, ac);
      size_t adapter_params = 0;
      for (const auto& spec : layout) {
        if (spec.group == ParamGroup::kAdapter) adapter_params += spec.count();
      }
      // Down projection E x w with bias w, up projection w x E with bias E.
      size_t oracle = 0;
      for (int l = 0; l < layers; ++l) {
        const int w = (l == 0 || l == layers - 1) ? e / 8 : e / 16;
        oracle += static_cast<size_t>(e) * w + w + static_cast<size_t>(w) * e + e;
      }
      EXPECT_EQ(adapter_params, oracle) << e << "x" << layers;
    }
  }
  // Base-sized backbone: two boundary layers at width 96, ten at width 48.
  EXPECT_EQ(2 * AdapterParameterCount(768, 96) + 10 * AdapterParameterCount(768, 48), 1042080u);
}

TEST(Adapters, IdentityAtInitialization) {
  for (Nonlinearity fn : {Nonlinearity::kRelu, Nonlinearity::kGelu, Nonlinearity::kTanh}) {
    ModelConfig cfg = TinyConfig();
    cfg.num_layers = 3;
    SpanModel base(cfg, 11);
    PerturbAll(base, 2, 0.05);
    const SpanModel adapted = insert_adapters(base, AdapterConfig{4, 2, fn}, 5);
    EXPECT_FALSE(base.has_adapters());
    EXPECT_TRUE(adapted.has_adapters());
    const ForwardResult a = base.Forward("How many people?", "book for 4 people at 7");
    const ForwardResult b = adapted.Forward("How many people?", "book for 4 people at 7");
    for (size_t t = 0; t < a.start_logits.size(); ++t) {
      EXPECT_NEAR(a.start_logits[t], b.start_logits[t], 1e-6);
      EXPECT_NEAR(a.end_logits[t], b.end_logits[t], 1e-6);
    }
  }
}

TEST(Adapters, DoubleInsertRejected) {
  SpanModel m(TinyConfig(), 1);
  m.InsertAdapters(AdapterConfig{4, 2}, 1);
  EXPECT_THROW(m.InsertAdapters(AdapterConfig{4, 2}, 1), ConfigError);
}

TEST(SelectTrainable, RegimesPickExpectedKinds) {
  SpanModel m = insert_adapters(SpanModel(TinyConfig(), 1), AdapterConfig{4, 2}, 1);
  const auto layout = m.parameters().Layout();
  for (Regime regime : {Regime::kFull, Regime::kHeadOnly, Regime::kBitFit, Regime::kAdapters}) {
    const TrainableMask mask = select_trainable(m, regime);
    for (const auto& spec : layout) {
      bool expected = false;
      switch (regime) {
        case Regime::kFull: expected = true; break;
        case Regime::kHeadOnly: expected = spec.group == ParamGroup::kHead; break;
        case Regime::kBitFit:
          expected = spec.group == ParamGroup::kHead || spec.kind == ParamKind::kAttentionBias;
          break;
        case Regime::kAdapters: expected = spec.group != ParamGroup::kEncoder; break;
      }
      EXPECT_EQ(mask.Contains(spec.path), expected) << RegimeName(regime) << " " << spec.path;
    }
  }
  // Four attention biases per layer plus the head biases.
  const TrainableMask all_biases = select_trainable(m, Regime::kBitFit, true);
  EXPECT_GT(all_biases.paths.size(), select_trainable(m, Regime::kBitFit).paths.size());
  EXPECT_THROW(select_trainable(SpanModel(TinyConfig(), 1), Regime::kAdapters), ConfigError);
}

TEST(SelectTrainable, BaseSizedCounts) {
  const ModelConfig base = ModelConfig::BaseSized();
  const auto layout = ModelLayout(base, AdapterConfig{});
  const size_t head = 768 * 2 + 2;
  EXPECT_EQ(count_trainable(layout, select_trainable(layout, Regime::kHeadOnly)), head);
  EXPECT_EQ(count_trainable(layout, select_trainable(layout, Regime::kAdapters)),
            1042080u + head);
  // Query, key, value and output biases of twelve layers.
  EXPECT_EQ(count_trainable(layout, select_trainable(layout, Regime::kBitFit)),
            12u * 4u * 768u + head);
}

class HeadGradient : public ::testing::TestWithParam<HeadVariant> {};

TEST_P(HeadGradient, MatchesFiniteDifferences) {
  ModelConfig cfg = TinyConfig();
  cfg.head_variant = GetParam();
  cfg.head_hidden_size = 8;
  SpanModel m(cfg, 21);
  PerturbAll(m, 3, 0.1);
  const QAExample ex = BookingExample();
  GradientBuffer grads = m.parameters().ZeroGradients();
  m.LossAndGradient(ex, {&grads, nullptr});
  const auto head = m.HeadIndices();
  Rng rng(17);
  for (int n = 0; n < 20; ++n) {
    const size_t p = head[rng.UniformIndex(head.size())];
    const Eigen::Index k =
        static_cast<Eigen::Index>(rng.UniformIndex(m.parameters().value(p).size()));
    const double numeric = NumericGrad(m, ex, p, k, 1e-5);
    const double analytic = grads[p].data()[k];
    EXPECT_LT(RelErr(numeric, analytic), 1e-4)
        << m.parameters().at(p).spec.path << "[" << k << "] " << numeric << " vs " << analytic;
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, HeadGradient,
                         ::testing::Values(HeadVariant::kLinear, HeadVariant::kFfn2),
                         [](const auto& info) { return std::string(HeadVariantName(info.param)); });

TEST(FullGradient, EveryTensorMatchesFiniteDifferences) {
  ModelConfig cfg = TinyConfig();
  cfg.hidden_size = 8;
  cfg.ffn_size = 12;
  cfg.vocab_size = 64;
  SpanModel m = insert_adapters(SpanModel(cfg, 7), AdapterConfig{2, 2, Nonlinearity::kGelu}, 3);
  PerturbAll(m, 5, 0.3);
  for (const QAExample& ex :
       {BookingExample(), QAExample::Unanswerable("u", "book for 4 people", "What time?")}) {
    GradientBuffer grads = m.parameters().ZeroGradients();
    m.LossAndGradient(ex, {&grads, nullptr});
    for (size_t p = 0; p < m.parameters().size(); ++p) {
      const auto size = m.parameters().value(p).size();
      for (Eigen::Index n = 0; n < std::min<Eigen::Index>(size, 5); ++n) {
        const Eigen::Index k = (n * 7919) % size;
        const double numeric = NumericGrad(m, ex, p, k, 1e-5);
        const double analytic = grads[p].data()[k];
        if (std::abs(numeric) + std::abs(analytic) < 1e-9) continue;
        EXPECT_LT(RelErr(numeric, analytic), 1e-4)
            << m.parameters().at(p).spec.path << "[" << k << "]";
      }
    }
  }
}

TEST(Gradient, MaskedSinkSkipsUnwantedTensors) {
  SpanModel m(TinyConfig(), 2);
  const TrainableMask mask = select_trainable(m, Regime::kHeadOnly);
  const std::vector<bool> flags = MaskFlags(m.parameters(), mask);
  GradientBuffer grads = m.parameters().ZeroGradients();
  GradientBuffer full = m.parameters().ZeroGradients();
  const double a = m.LossAndGradient(BookingExample(), {&grads, &flags});
  const double b = m.LossAndGradient(BookingExample(), {&full, nullptr});
  EXPECT_EQ(a, b);
  for (size_t p = 0; p < grads.size(); ++p) {
    if (flags[p]) {
      EXPECT_TRUE(grads[p] == full[p]);
    } else {
      EXPECT_EQ(grads[p].cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

class FreezeContract : public ::testing::TestWithParam<Regime> {};

TEST_P(FreezeContract, OneStepChangesOnlySelectedParameters) {
  const Regime regime = GetParam();
  SpanModel before(TinyConfig(), 31);
  FineTuneConfig cfg;
  cfg.regime = regime;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 1;
  if (regime == Regime::kAdapters) {
    cfg.adapter = AdapterConfig{4, 2};
    before = insert_adapters(before, *cfg.adapter, 4);
  }
  QADataset qa;
  qa.examples = {BookingExample("a"), QAExample::Unanswerable("b", "hello there", "When?")};
  cfg.batch_size = 2;
  const StageResult r = run_stage(before, qa, cfg, 8);
  EXPECT_EQ(r.report.steps, 1u);
  const TrainableMask mask = select_trainable(before, regime);
  EXPECT_EQ(r.mask, mask);
  bool any_changed = false;
  for (size_t p = 0; p < before.parameters().size(); ++p) {
    const auto& a = before.parameters().value(p);
    const auto& b = r.model.parameters().value(p);
    const bool same = std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
    if (!mask.Contains(before.parameters().at(p).spec.path)) {
      EXPECT_TRUE(same) << before.parameters().at(p).spec.path;
    } else {
      any_changed = any_changed || !same;
    }
  }
  EXPECT_TRUE(any_changed);
}

INSTANTIATE_TEST_SUITE_P(Regimes, FreezeContract,
                         ::testing::Values(Regime::kFull, Regime::kHeadOnly, Regime::kBitFit,
                                           Regime::kAdapters),
                         [](const auto& info) { return std::string(RegimeName(info.param)); });

TEST(SpanModel, CopiesAreDeep) {
  SpanModel a(TinyConfig(), 1);
  SpanModel b = a;
  b.mutable_parameters().at(0).value(0, 0) += 1.0;
  EXPECT_FALSE(a.parameters().BitwiseEqual(b.parameters()));
  SpanModel c(TinyConfig(), 2);
  c = a;
  EXPECT_TRUE(c.parameters().BitwiseEqual(a.parameters()));
}

TEST(SpanModel, SeedDeterminesInitialization) {
  EXPECT_TRUE(SpanModel(TinyConfig(), 5).parameters().BitwiseEqual(
      SpanModel(TinyConfig(), 5).parameters()));
  EXPECT_FALSE(SpanModel(TinyConfig(), 5).parameters().BitwiseEqual(
      SpanModel(TinyConfig(), 6).parameters()));
}

}  // namespace
}  // namespace qasl
