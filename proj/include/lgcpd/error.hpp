#pragma once

#include <stdexcept>
#include <string>

namespace lgcpd {

enum class ErrorCode {
  InvalidArgument,  // precondition violated by the caller
  Usage,            // unknown generator name, bad config key, ...
  Io,               // missing or malformed file
  Numerical,        // factorization failure, non-convergence, budget exhaustion
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace lgcpd
