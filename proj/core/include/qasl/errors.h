#ifndef QASL_ERRORS_H_
#define QASL_ERRORS_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace qasl {

// Base class for every error the toolkit raises. `code()` is a stable
// machine-readable identifier used by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Malformed input. `line` is 1-based, 0 when unknown; `field` is a JSON
// path such as "turns[3].labels[0].start".
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, std::string field);

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class UnknownSlotError : public Error {
 public:
  explicit UnknownSlotError(const std::string& slot)
      : Error("unknown_slot", "unknown slot '" + slot + "'"), slot_(slot) {}

  const std::string& slot() const { return slot_; }

 private:
  std::string slot_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error("config_error", message) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& message)
      : Error("training_error", message) {}
};

}  // namespace qasl

#endif  // QASL_ERRORS_H_
