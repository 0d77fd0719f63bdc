#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace degenlab {

enum class ErrorCode {
    InvalidAlpha,
    InvalidDomain,
    NonPositiveInput,
    TimeTooShort,
    BetaOutOfRange,
    NoAdmissibleEpsilon,
    InvalidMeshSpec,
    DivergentWeight,
    ConvergenceFailure,
    TruncationTooSmall,
    GridMismatch,
    DeltaOutOfRange,
    InsufficientData,
    BoundaryViolation,
    DegenerateCellTouched,
    ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidAlpha: return "InvalidAlpha";
        case ErrorCode::InvalidDomain: return "InvalidDomain";
        case ErrorCode::NonPositiveInput: return "NonPositiveInput";
        case ErrorCode::TimeTooShort: return "TimeTooShort";
        case ErrorCode::BetaOutOfRange: return "BetaOutOfRange";
        case ErrorCode::NoAdmissibleEpsilon: return "NoAdmissibleEpsilon";
        case ErrorCode::InvalidMeshSpec: return "InvalidMeshSpec";
        case ErrorCode::DivergentWeight: return "DivergentWeight";
        case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
        case ErrorCode::TruncationTooSmall: return "TruncationTooSmall";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::DeltaOutOfRange: return "DeltaOutOfRange";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::BoundaryViolation: return "BoundaryViolation";
        case ErrorCode::DegenerateCellTouched: return "DegenerateCellTouched";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure in the library is reported through this type; `code()` is
/// stable and machine readable, `what()` is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace degenlab
