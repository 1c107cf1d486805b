#include "hill/error.hpp"

namespace hill {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::shape_mismatch: return "shape_mismatch";
        case ErrorCode::unknown_op: return "unknown_op";
        case ErrorCode::non_scalar_loss: return "non_scalar_loss";
        case ErrorCode::non_finite: return "non_finite";
        case ErrorCode::frozen_violation: return "frozen_violation";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::illegal_transition: return "illegal_transition";
        case ErrorCode::wrong_state: return "wrong_state";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::format_error: return "format_error";
        case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

}  // namespace hill
