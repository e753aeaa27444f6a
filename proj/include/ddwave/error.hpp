#pragma once

#include <stdexcept>
#include <string>

namespace ddwave {

enum class ErrorCode {
  invalid_dimension,
  invalid_delay,
  empty_channel,
  precondition,
  tuning_infeasible,
  unsupported_waveform,
  undefined_papr,
  singular_channel,
  config,
};

// Single exception type for the toolkit; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace ddwave
