#include "riskydates/error.hpp"

namespace riskydates {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonPositiveHorizon: return "NonPositiveHorizon";
        case ErrorCode::NodeOutOfRange: return "NodeOutOfRange";
        case ErrorCode::KernelNotNormalized: return "KernelNotNormalized";
        case ErrorCode::EmptySupport: return "EmptySupport";
        case ErrorCode::UnsnappedAtom: return "UnsnappedAtom";
        case ErrorCode::NonFiniteVol: return "NonFiniteVol";
        case ErrorCode::NonFiniteRate: return "NonFiniteRate";
        case ErrorCode::NegativeJumpProbability: return "NegativeJumpProbability";
        case ErrorCode::NonFiniteField: return "NonFiniteField";
        case ErrorCode::IntensityTooLarge: return "IntensityTooLarge";
        case ErrorCode::PredictableAnnouncement: return "PredictableAnnouncement";
        case ErrorCode::LossOutOfRange: return "LossOutOfRange";
        case ErrorCode::TotalExpectedLossAtAtom: return "TotalExpectedLossAtAtom";
        case ErrorCode::InvalidModel: return "InvalidModel";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace riskydates
