#ifndef UKD_COMMON_ERRORS_H_
#define UKD_COMMON_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ukd {

// Broad failure classes. The CLI maps each to a distinct exit code and prints
// the category name as the first token of its one-line error message.
enum class ErrorCategory {
  kConfig,
  kUsage,
  kParse,
  kData,
  kDomain,
  kDivergence,
  kIo,
  kPipeline,
};

std::string_view CategoryName(ErrorCategory category);
int ExitCode(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

inline Error ConfigError(const std::string& m) {
  return Error(ErrorCategory::kConfig, m);
}
inline Error UsageError(const std::string& m) {
  return Error(ErrorCategory::kUsage, m);
}
inline Error ParseError(const std::string& m) {
  return Error(ErrorCategory::kParse, m);
}
inline Error DataError(const std::string& m) {
  return Error(ErrorCategory::kData, m);
}
inline Error DomainError(const std::string& m) {
  return Error(ErrorCategory::kDomain, m);
}
inline Error DivergenceError(const std::string& m) {
  return Error(ErrorCategory::kDivergence, m);
}
inline Error IoError(const std::string& m) {
  return Error(ErrorCategory::kIo, m);
}
inline Error PipelineError(const std::string& m) {
  return Error(ErrorCategory::kPipeline, m);
}

}  // namespace ukd

#endif  // UKD_COMMON_ERRORS_H_
