#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lfdproto {

enum class Errc {
  kNotSymmetric,
  kNotFinite,
  kNotPositiveDefinite,
  kDimensionMismatch,
  kSingularProjection,
  kEmptyClass,
  kUnequalClassSizes,
  kDimensionTooLarge,
  kEmptyOthers,
  kEmptyTaskList,
  kInvalidSpec,
  kInsufficientData,
  kDegenerateDenominator,
  kDivergenceDetected,
  kInvalidArgument,
  kIo,
};

std::string_view errc_name(Errc code);

// All library failures are reported through this type; code() identifies the
// contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace lfdproto
