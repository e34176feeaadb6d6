#ifndef LOWVOC_ERROR_HPP
#define LOWVOC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lowvoc {

// Error categories map 1:1 onto CLI exit codes (see tools/lowvoc_main.cpp).
enum class ErrorCode {
  invalid_config = 2,
  too_short = 3,
  shape_mismatch = 4,
  contract = 5,
  degenerate_input = 6,
  io = 7,
  integrity = 8,
  mode = 9,
  internal = 10,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_config: return "invalid_config";
    case ErrorCode::too_short: return "too_short";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::contract: return "contract";
    case ErrorCode::degenerate_input: return "degenerate_input";
    case ErrorCode::io: return "io";
    case ErrorCode::integrity: return "integrity";
    case ErrorCode::mode: return "mode";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace lowvoc

#endif  // LOWVOC_ERROR_HPP
