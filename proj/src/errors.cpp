#include "flexfii/errors.hpp"

namespace flexfii {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::RowNotStochastic: return "RowNotStochastic";
    case ErrorCode::EntryOutOfRange: return "EntryOutOfRange";
    case ErrorCode::NonFinitePayoff: return "NonFinitePayoff";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IllPosed: return "IllPosed";
    case ErrorCode::EmptyTarget: return "EmptyTarget";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::EmptyStoppingSet: return "EmptyStoppingSet";
    case ErrorCode::InvalidSchedule: return "InvalidSchedule";
    case ErrorCode::RuleOrderViolation: return "RuleOrderViolation";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::CapDominates: return "CapDominates";
    case ErrorCode::AnchorOutOfGrid: return "AnchorOutOfGrid";
    }
    return "Unknown";
}

} // namespace flexfii
