#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace causalmix {

enum class ErrorCode {
    CycleDetected,
    UnnormalizedCpt,
    PositivityViolated,
    IncompleteAssignment,
    NotASink,
    ExclusionViolated,
    ExclusionUnsatisfiable,
    Inconsistent,
    Degenerate,
    EmptySampleSet,
    DegenerateEstimate,
    InvalidArgument,
    IoError,
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::UnnormalizedCpt: return "UnnormalizedCpt";
        case ErrorCode::PositivityViolated: return "PositivityViolated";
        case ErrorCode::IncompleteAssignment: return "IncompleteAssignment";
        case ErrorCode::NotASink: return "NotASink";
        case ErrorCode::ExclusionViolated: return "ExclusionViolated";
        case ErrorCode::ExclusionUnsatisfiable: return "ExclusionUnsatisfiable";
        case ErrorCode::Inconsistent: return "Inconsistent";
        case ErrorCode::Degenerate: return "Degenerate";
        case ErrorCode::EmptySampleSet: return "EmptySampleSet";
        case ErrorCode::DegenerateEstimate: return "DegenerateEstimate";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

class CausalError : public std::runtime_error {
public:
    CausalError(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw CausalError(code, message);
}

} // namespace causalmix
