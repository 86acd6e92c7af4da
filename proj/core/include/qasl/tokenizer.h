#ifndef QASL_TOKENIZER_H_
#define QASL_TOKENIZER_H_

#include <string>
#include <string_view>
#include <vector>

#include "qasl/reformulator.h"

namespace qasl {

struct Token {
  std::string text;
  CharRange span;  // scalar offsets into the tokenized text
  bool attached = false;  // no whitespace between this token and the previous one
};

// Splits on whitespace; letter runs, digit runs and single punctuation
// characters become tokens ("8pm" -> "8" "pm", "p.m." -> "p" "." "m" ".").
// Pieces split off inside a whitespace-delimited word are marked attached
// and get their own shape ids, so word boundaries survive the split.
// The prompt separator literal is kept as one token. Word ids are hashed
// into a fixed number of buckets, so no vocabulary file is needed.
class Tokenizer {
 public:
  static constexpr int kClsId = 0;  // sequence-initial no-answer anchor
  static constexpr int kSepId = 1;
  static constexpr int kPromptSepId = 2;
  static constexpr int kNumSpecial = 3;

  enum Shape : int {
    kShapeSpecial = 0,
    kShapePromptSep,
    kShapeLower,
    kShapeCapitalized,
    kShapeUpper,
    kShapeDigits,
    kShapePunct,
    kShapeOther,
    kNumBaseShapes,
    kNumShapes = 2 * kNumBaseShapes  // attached variants follow the base shapes
  };

  Tokenizer(int vocab_size, std::string separator_literal);

  std::vector<Token> Tokenize(std::string_view text) const;
  int TokenId(const Token& token) const;
  int ShapeId(const Token& token) const;

  int vocab_size() const { return vocab_size_; }
  const std::string& separator_literal() const { return separator_; }

 private:
  int BaseShape(const Token& token) const;

  int vocab_size_;
  std::string separator_;
  std::u32string separator32_;
};

}  // namespace qasl

#endif  // QASL_TOKENIZER_H_
