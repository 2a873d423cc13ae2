#pragma once

#include <stdexcept>
#include <string>

namespace singr {

/// Error taxonomy shared by the library, the CLI exit codes and the C ABI.
/// Numeric values are the stable status codes returned by `singr_ffi_v1_*`.
enum class ErrorCode : int {
  kInvalidArgument = -1,
  kDimsMismatch = -2,
  kOutOfRange = -3,
  kIo = -4,
  kFormat = -5,
  kUnsupported = -6,
  kDivergence = -7,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace singr
