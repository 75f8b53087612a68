#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace riskydates {

enum class ErrorCode {
    NonPositiveHorizon,
    NodeOutOfRange,
    KernelNotNormalized,
    EmptySupport,
    UnsnappedAtom,
    NonFiniteVol,
    NonFiniteRate,
    NegativeJumpProbability,
    NonFiniteField,
    IntensityTooLarge,
    PredictableAnnouncement,
    LossOutOfRange,
    TotalExpectedLossAtAtom,
    InvalidModel,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Every library failure carries one of the codes above; what() starts with the code name.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace riskydates
