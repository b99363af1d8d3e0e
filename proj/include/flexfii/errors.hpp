#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace flexfii {

enum class ErrorCode {
    InvalidArgument,
    Parse,
    RowNotStochastic,
    EntryOutOfRange,
    NonFinitePayoff,
    DimensionMismatch,
    IllPosed,
    EmptyTarget,
    SingularSystem,
    EmptyStoppingSet,
    InvalidSchedule,
    RuleOrderViolation,
    NoConvergence,
    TooLarge,
    CapDominates,
    AnchorOutOfGrid,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. `state()` names the offending
/// state (or row) when the error is attached to one.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::size_t> state = std::nullopt)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code), state_(state) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> state() const noexcept { return state_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> state_;
};

} // namespace flexfii
