#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qualbound {

enum class ErrorCode {
  InvalidParameter,
  NotPositiveDefinite,
  DegenerateWishart,
  NoConvergence,
  DegenerateParams,
  DegenerateModel,
  ZeroPortfolio,
  SingularCovariance,
  SingularFeatures,
  RankDeficient,
  TooManyFailures,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// C API can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace qualbound
