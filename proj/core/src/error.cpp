#include "lfdproto/error.hpp"

namespace lfdproto {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kNotSymmetric: return "NotSymmetric";
    case Errc::kNotFinite: return "NotFinite";
    case Errc::kNotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kSingularProjection: return "SingularProjection";
    case Errc::kEmptyClass: return "EmptyClass";
    case Errc::kUnequalClassSizes: return "UnequalClassSizes";
    case Errc::kDimensionTooLarge: return "DimensionTooLarge";
    case Errc::kEmptyOthers: return "EmptyOthers";
    case Errc::kEmptyTaskList: return "EmptyTaskList";
    case Errc::kInvalidSpec: return "InvalidSpec";
    case Errc::kInsufficientData: return "InsufficientData";
    case Errc::kDegenerateDenominator: return "DegenerateDenominator";
    case Errc::kDivergenceDetected: return "DivergenceDetected";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace lfdproto
