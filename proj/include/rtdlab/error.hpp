#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rtdlab {

enum class ErrorCode {
    RowNotStochastic,
    RewardOutOfRange,
    GammaOutOfRange,
    InvalidPolicy,
    NotIrreducible,
    Periodic,
    InvalidUncertainty,
    NegativeLambda,
    BadBounds,
    InvalidFeatures,
    DimensionMismatch,
    SingularCovariance,
    InvalidConfig,
    MixingAssumptionViolated,
    NonConvergence,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::RowNotStochastic: return "RowNotStochastic";
    case ErrorCode::RewardOutOfRange: return "RewardOutOfRange";
    case ErrorCode::GammaOutOfRange: return "GammaOutOfRange";
    case ErrorCode::InvalidPolicy: return "InvalidPolicy";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::Periodic: return "Periodic";
    case ErrorCode::InvalidUncertainty: return "InvalidUncertainty";
    case ErrorCode::NegativeLambda: return "NegativeLambda";
    case ErrorCode::BadBounds: return "BadBounds";
    case ErrorCode::InvalidFeatures: return "InvalidFeatures";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MixingAssumptionViolated: return "MixingAssumptionViolated";
    case ErrorCode::NonConvergence: return "NonConvergence";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Location-carrying validation failure, e.g. RowNotStochastic(s, a).
struct Violation {
    ErrorCode code;
    std::size_t state = 0;
    std::size_t action = 0;
    std::string message;

    [[noreturn]] void raise() const { throw Error(code, message); }
};

} // namespace rtdlab
