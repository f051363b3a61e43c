#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crowdaug {

// Coarse failure class; the CLI maps it onto its exit code.
enum class ErrorCategory { io, validation, internal };

class Error : public std::runtime_error {
 public:
  Error(std::string kind, ErrorCategory category, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)), category_(category) {}

  const std::string& kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_; }

 private:
  std::string kind_;
  ErrorCategory category_;
};

#define CROWDAUG_DEFINE_ERROR(Name, Category)                                   \
  class Name : public Error {                                                  \
   public:                                                                     \
    explicit Name(const std::string& message)                                  \
        : Error(#Name, ErrorCategory::Category, message) {}                    \
  };

CROWDAUG_DEFINE_ERROR(DepthError, validation)
CROWDAUG_DEFINE_ERROR(OffPlaneError, validation)
CROWDAUG_DEFINE_ERROR(DuplicateRecordError, validation)
CROWDAUG_DEFINE_ERROR(NonMonotonicError, validation)
CROWDAUG_DEFINE_ERROR(EmptyInputError, validation)
CROWDAUG_DEFINE_ERROR(PreconditionError, validation)
CROWDAUG_DEFINE_ERROR(InvalidGraphError, validation)
CROWDAUG_DEFINE_ERROR(DimensionMismatchError, validation)
CROWDAUG_DEFINE_ERROR(FormatError, validation)
CROWDAUG_DEFINE_ERROR(InvalidManifestError, validation)
CROWDAUG_DEFINE_ERROR(LengthMismatchError, validation)
CROWDAUG_DEFINE_ERROR(InvalidFractionError, validation)
CROWDAUG_DEFINE_ERROR(ConfigError, validation)
CROWDAUG_DEFINE_ERROR(IoError, io)
CROWDAUG_DEFINE_ERROR(InvariantError, internal)

#undef CROWDAUG_DEFINE_ERROR

// Malformed text input. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error("ParseError", ErrorCategory::validation,
              line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace crowdaug
