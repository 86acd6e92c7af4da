#include "qasl/errors.h"

namespace qasl {
namespace {

std::string JoinViolations(const std::vector<std::string>& violations) {
  std::string out = "validation failed";
  for (const auto& v : violations) out += "\n  " + v;
  return out;
}

std::string ParseMessage(const std::string& message, int line,
                         const std::string& field) {
  std::string out = message;
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  if (!field.empty()) out += " at " + field;
  return out;
}

}  // namespace

ParseError::ParseError(const std::string& message, int line, std::string field)
    : Error("parse_error", ParseMessage(message, line, field)),
      line_(line),
      field_(std::move(field)) {}

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error("validation_error", JoinViolations(violations)),
      violations_(std::move(violations)) {}

}  // namespace qasl
