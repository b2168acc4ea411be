#include "ukd/common/errors.h"

namespace ukd {

std::string_view CategoryName(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig:
      return "config";
    case ErrorCategory::kUsage:
      return "usage";
    case ErrorCategory::kParse:
      return "parse";
    case ErrorCategory::kData:
      return "data";
    case ErrorCategory::kDomain:
      return "domain";
    case ErrorCategory::kDivergence:
      return "divergence";
    case ErrorCategory::kIo:
      return "io";
    case ErrorCategory::kPipeline:
      return "pipeline";
  }
  return "unknown";
}

int ExitCode(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kUsage:
      return 2;
    case ErrorCategory::kConfig:
      return 3;
    case ErrorCategory::kParse:
      return 4;
    case ErrorCategory::kData:
      return 5;
    case ErrorCategory::kDomain:
      return 6;
    case ErrorCategory::kDivergence:
      return 7;
    case ErrorCategory::kIo:
      return 8;
    case ErrorCategory::kPipeline:
      return 9;
  }
  return 1;
}

}  // namespace ukd
