#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvsv {

// Every failure the library reports carries one of these codes. The CLI maps
// them one-to-one onto process exit codes (see README).
enum class ErrorCode : int {
    kInvalidArgument = 2,
    kDimensionMismatch = 3,
    kNonPositiveDefinite = 4,
    kDiscountOutOfRange = 5,
    kDegenerateDegrees = 6,
    kFeatureUnavailable = 7,
    kDofTooSmall = 8,
    kEmptyData = 9,
    kRankDeficient = 10,
    kNoPositiveEigenvalues = 11,
    kInvalidWeights = 12,
    kLengthMismatch = 13,
    kEmptyGrid = 14,
    kParseError = 15,
    kNonPositivePrice = 16,
    kNonMonotoneDates = 17,
    kTooFewRows = 18,
    kInvariantViolated = 19,
    kIo = 20,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
        case ErrorCode::kNonPositiveDefinite: return "NonPositiveDefinite";
        case ErrorCode::kDiscountOutOfRange: return "DiscountOutOfRange";
        case ErrorCode::kDegenerateDegrees: return "DegenerateDegrees";
        case ErrorCode::kFeatureUnavailable: return "FeatureUnavailable";
        case ErrorCode::kDofTooSmall: return "DofTooSmall";
        case ErrorCode::kEmptyData: return "EmptyData";
        case ErrorCode::kRankDeficient: return "RankDeficient";
        case ErrorCode::kNoPositiveEigenvalues: return "NoPositiveEigenvalues";
        case ErrorCode::kInvalidWeights: return "InvalidWeights";
        case ErrorCode::kLengthMismatch: return "LengthMismatch";
        case ErrorCode::kEmptyGrid: return "EmptyGrid";
        case ErrorCode::kParseError: return "ParseError";
        case ErrorCode::kNonPositivePrice: return "NonPositivePrice";
        case ErrorCode::kNonMonotoneDates: return "NonMonotoneDates";
        case ErrorCode::kTooFewRows: return "TooFewRows";
        case ErrorCode::kInvariantViolated: return "InvariantViolated";
        case ErrorCode::kIo: return "IoError";
    }
    return "Unknown";
}

}  // namespace mvsv
