#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace varlens {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidValue,
  kIoError,
  kFormatError,
  kConfigError,
  kUnsupportedVersion,
  kSamplingError,
  kNotComparable,
  kShortage,
  kDivergence,
};

/// Machine-parseable category name, e.g. "invalid-argument".
std::string_view error_category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// Warnings are routed through a replaceable sink (stderr by default).
using WarningSink = void (*)(std::string_view);
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace varlens
