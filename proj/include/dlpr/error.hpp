#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dlpr {

enum class ErrorKind {
    InvalidWindow,
    NonFiniteInput,
    ChannelMismatch,
    ShapeError,
    StateError,
    PoolError,
    BatchTooSmall,
    NotFitted,
    DegenerateData,
    EmptyOutput,
    StratifyError,
    ParseError,
    ConfigError,
    NumericError,
};

std::string_view to_string(ErrorKind kind);

// Every library failure is reported as an Error carrying its kind, so callers
// (the CLI in particular) can map failures to exit codes without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace dlpr
