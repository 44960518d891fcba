#pragma once

#include <stdexcept>
#include <string>

namespace sketchreg {

// Mirrors the status codes of the C API (sketchreg.h).
enum class ErrorCode : int {
    invalid_argument = 1,
    dimension_mismatch = 2,
    io = 3,
    unmeasurable = 4,
    numeric = 5,
    internal = 6,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::io: return "io";
    case ErrorCode::unmeasurable: return "unmeasurable";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::internal: return "internal";
    }
    return "internal";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, const std::string& what,
                    ErrorCode code = ErrorCode::invalid_argument) {
    if (!cond) fail(code, what);
}

} // namespace sketchreg
