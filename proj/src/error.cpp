#include "dlpr/error.hpp"

namespace dlpr {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidWindow: return "InvalidWindow";
        case ErrorKind::NonFiniteInput: return "NonFiniteInput";
        case ErrorKind::ChannelMismatch: return "ChannelMismatch";
        case ErrorKind::ShapeError: return "ShapeError";
        case ErrorKind::StateError: return "StateError";
        case ErrorKind::PoolError: return "PoolError";
        case ErrorKind::BatchTooSmall: return "BatchTooSmall";
        case ErrorKind::NotFitted: return "NotFitted";
        case ErrorKind::DegenerateData: return "DegenerateData";
        case ErrorKind::EmptyOutput: return "EmptyOutput";
        case ErrorKind::StratifyError: return "StratifyError";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::NumericError: return "NumericError";
    }
    return "Error";
}

}  // namespace dlpr
