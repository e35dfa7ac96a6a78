#pragma once

#include <stdexcept>
#include <string>

namespace spiralis {

enum class ErrorKind {
    config,
    data,
    unsupported_input,
    pathological_exponent,
    guard_violation,
    divergence,
    stagnation,
    range,
    missing,
};

// Single exception type for all module errors; the kind decides the CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const
    {
        switch (kind_) {
        case ErrorKind::config:
        case ErrorKind::data:
            return 2;
        case ErrorKind::guard_violation:
            return 3;
        case ErrorKind::divergence:
        case ErrorKind::stagnation:
            return 4;
        default:
            return 1;
        }
    }

private:
    ErrorKind kind_;
};

const char* kind_name(ErrorKind kind);

} // namespace spiralis
