#pragma once

#include <stdexcept>
#include <string>

namespace cola {

enum class ErrorCode {
    // dynamics
    SubOrbitalState,
    IntegrationFailure,
    // cdm
    MissingKey,
    DuplicateKey,
    MalformedLine,
    UnsupportedFrame,
    NonPsdCovariance,
    DegenerateState,
    // conjunction
    DegenerateEncounter,
    SingularProjectedCovariance,
    TargetUnreachable,
    // relaxation / extraction
    InfeasibleSpec,
    NotOptimal,
    LeadingEntryNearZero,
    // conic
    ShapeMismatch,
    // baselines
    SolverFailure,
    AllSamplesInfeasible,
    // cli / io
    InvalidConfig,
    IoFailure,
};

const char* error_code_name(ErrorCode code);

// Single exception type carrying a code plus a human-readable detail string.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::SubOrbitalState: return "SubOrbitalState";
    case ErrorCode::IntegrationFailure: return "IntegrationFailure";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnsupportedFrame: return "UnsupportedFrame";
    case ErrorCode::NonPsdCovariance: return "NonPsdCovariance";
    case ErrorCode::DegenerateState: return "DegenerateState";
    case ErrorCode::DegenerateEncounter: return "DegenerateEncounter";
    case ErrorCode::SingularProjectedCovariance: return "SingularProjectedCovariance";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::NotOptimal: return "NotOptimal";
    case ErrorCode::LeadingEntryNearZero: return "LeadingEntryNearZero";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::AllSamplesInfeasible: return "AllSamplesInfeasible";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoFailure: return "IoFailure";
    }
    return "UnknownError";
}

} // namespace cola
