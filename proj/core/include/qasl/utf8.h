#ifndef QASL_UTF8_H_
#define QASL_UTF8_H_

#include <cstddef>
#include <string>
#include <string_view>

// Offsets throughout the toolkit count Unicode scalar values, not bytes.
namespace qasl::utf8 {

std::u32string Decode(std::string_view text);
std::string Encode(std::u32string_view text);

// Number of scalar values in `text`.
size_t Length(std::string_view text);

// Scalar-value substring [start, end). Clamped to the text.
std::string Substr(std::string_view text, size_t start, size_t end);

bool IsSpace(char32_t c);

}  // namespace qasl::utf8

#endif  // QASL_UTF8_H_
