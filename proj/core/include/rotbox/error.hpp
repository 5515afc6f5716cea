#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rotbox {

enum class ErrorCode {
    InvalidArgument,
    InvalidBox,
    NotARectangle,
    AnchorOutsideBox,
    InsufficientData,
    NonPositiveDistance,
    ShapeMismatch,
    NoGroundTruth,
    BadMagic,
    Truncated,
    DimOverflow,
    TrailingBytes,
    ParseError,
    PlacementFailed,
    IoFailure,
    InvariantViolation,
};

std::string_view to_string(ErrorCode code);

// Every failure reported by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

    // True for failures caused by bad input (files, flags, arguments) as
    // opposed to a broken internal invariant.
    bool is_input_error() const noexcept { return code_ != ErrorCode::InvariantViolation; }

private:
    ErrorCode code_;
};

}  // namespace rotbox
