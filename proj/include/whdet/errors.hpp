#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace whdet {

/// Base class for numeric-domain failures raised by this library. Each
/// concrete error carries a stable code string that reports can echo.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define WHDET_DEFINE_ERROR(Name)                                    \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {}  \
  }

WHDET_DEFINE_ERROR(BlockSizeMismatch);
WHDET_DEFINE_ERROR(WindowTooSmall);
WHDET_DEFINE_ERROR(SingularOnCircle);
WHDET_DEFINE_ERROR(NotResolved);
WHDET_DEFINE_ERROR(NonzeroWinding);
WHDET_DEFINE_ERROR(PhaseStepTooLarge);
WHDET_DEFINE_ERROR(AmbiguousWinding);
WHDET_DEFINE_ERROR(IllConditioned);
WHDET_DEFINE_ERROR(NotConverged);
WHDET_DEFINE_ERROR(WindowNotFlipSymmetric);
WHDET_DEFINE_ERROR(ConstraintViolated);
WHDET_DEFINE_ERROR(ScalarCrossCheckFailed);

#undef WHDET_DEFINE_ERROR

}  // namespace whdet
