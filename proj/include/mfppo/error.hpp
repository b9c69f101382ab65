#ifndef MFPPO_ERROR_HPP
#define MFPPO_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mfppo {

enum class ErrorCode {
  kInvalidArgument,
  kOutOfRange,
  kTooLarge,
  kNumeric,
  kIo,
};

// Every failure inside the library surfaces as an Error; the C API maps the
// code onto mfppo_status.
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

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace mfppo

#endif  // MFPPO_ERROR_HPP
