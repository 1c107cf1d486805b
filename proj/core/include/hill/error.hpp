#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hill {

enum class ErrorCode {
    shape_mismatch,
    unknown_op,
    non_scalar_loss,
    non_finite,
    frozen_violation,
    invalid_argument,
    illegal_transition,
    wrong_state,
    not_found,
    parse_error,
    format_error,
    io_error,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail),
          code_(code), detail_(detail) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace hill
