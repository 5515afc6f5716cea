#include "rotbox/error.hpp"

namespace rotbox {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidBox: return "InvalidBox";
        case ErrorCode::NotARectangle: return "NotARectangle";
        case ErrorCode::AnchorOutsideBox: return "AnchorOutsideBox";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::NonPositiveDistance: return "NonPositiveDistance";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NoGroundTruth: return "NoGroundTruth";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::Truncated: return "Truncated";
        case ErrorCode::DimOverflow: return "DimOverflow";
        case ErrorCode::TrailingBytes: return "TrailingBytes";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::PlacementFailed: return "PlacementFailed";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace rotbox
