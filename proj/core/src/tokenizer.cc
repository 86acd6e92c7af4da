#include "qasl/tokenizer.h"

#include <cstdint>

#include "qasl/utf8.h"

namespace qasl {
namespace {

enum class CharClass { kSpace, kLetter, kDigit, kPunct };

CharClass Classify(char32_t c) {
  if (utf8::IsSpace(c)) return CharClass::kSpace;
  if (c >= U'0' && c <= U'9') return CharClass::kDigit;
  if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z')) return CharClass::kLetter;
  if (c < 0x80) return CharClass::kPunct;
  // General punctuation and CJK symbol blocks; everything else non-ASCII
  // is treated as a letter.
  if ((c >= 0x2000 && c <= 0x206F) || (c >= 0x3000 && c <= 0x303F) ||
      (c >= 0x00A1 && c <= 0x00BF)) {
    return CharClass::kPunct;
  }
  return CharClass::kLetter;
}

uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Tokenizer::Tokenizer(int vocab_size, std::string separator_literal)
    : vocab_size_(vocab_size),
      separator_(std::move(separator_literal)),
      separator32_(utf8::Decode(separator_)) {}

std::vector<Token> Tokenizer::Tokenize(std::string_view text) const {
  const std::u32string cps = utf8::Decode(text);
  std::vector<Token> out;
  size_t i = 0;
  while (i < cps.size()) {
    if (!separator32_.empty() &&
        cps.compare(i, separator32_.size(), separator32_) == 0) {
      out.push_back({separator_, {i, i + separator32_.size()}, false});
      i += separator32_.size();
      continue;
    }
    const CharClass cls = Classify(cps[i]);
    if (cls == CharClass::kSpace) {
      ++i;
      continue;
    }
    size_t j = i + 1;
    if (cls != CharClass::kPunct) {
      while (j < cps.size() && Classify(cps[j]) == cls &&
             (separator32_.empty() || cps.compare(j, separator32_.size(), separator32_) != 0)) {
        ++j;
      }
    }
    const bool attached = i > 0 && !utf8::IsSpace(cps[i - 1]);
    out.push_back({utf8::Encode(std::u32string_view(cps).substr(i, j - i)), {i, j}, attached});
    i = j;
  }
  return out;
}

int Tokenizer::TokenId(const Token& token) const {
  if (token.text == separator_) return kPromptSepId;
  std::string lower = token.text;
  for (char& c : lower) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  const uint64_t buckets = static_cast<uint64_t>(vocab_size_ - kNumSpecial);
  return kNumSpecial + static_cast<int>(Fnv1a(lower) % buckets);
}

int Tokenizer::ShapeId(const Token& token) const {
  if (token.text == separator_) return kShapePromptSep;
  return BaseShape(token) + (token.attached ? kNumBaseShapes : 0);
}

int Tokenizer::BaseShape(const Token& token) const {
  const std::u32string cps = utf8::Decode(token.text);
  if (cps.empty()) return kShapeOther;
  const CharClass first = Classify(cps[0]);
  if (first == CharClass::kDigit) return kShapeDigits;
  if (first == CharClass::kPunct) return kShapePunct;
  bool any_upper = false;
  bool any_lower = false;
  for (char32_t c : cps) {
    if (c >= U'A' && c <= U'Z') any_upper = true;
    if (c >= U'a' && c <= U'z') any_lower = true;
  }
  const bool first_upper = cps[0] >= U'A' && cps[0] <= U'Z';
  if (first_upper && !any_lower) return cps.size() > 1 ? kShapeUpper : kShapeCapitalized;
  if (first_upper) return kShapeCapitalized;
  if (any_lower || !any_upper) return any_lower ? kShapeLower : kShapeOther;
  return kShapeOther;
}

}  // namespace qasl
