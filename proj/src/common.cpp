#include "semitoric/common.hpp"

namespace semitoric {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return "Config";
        case ErrorKind::Io: return "IO";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::EmptyWindow: return "EmptyWindow";
        case ErrorKind::NumericalFailure: return "NumericalFailure";
        case ErrorKind::CommutatorViolation: return "CommutatorViolation";
        case ErrorKind::InjectivityFailure: return "InjectivityFailure";
        case ErrorKind::TooSparse: return "TooSparse";
        case ErrorKind::AmbiguousNeighbor: return "AmbiguousNeighbor";
        case ErrorKind::Disconnected: return "Disconnected";
        case ErrorKind::EmptyStrip: return "EmptyStrip";
        case ErrorKind::Inconsistent: return "Inconsistent";
        case ErrorKind::CocycleViolation: return "CocycleViolation";
        case ErrorKind::NonSimplyConnected: return "NonSimplyConnected";
        case ErrorKind::MissingNeighbor: return "MissingNeighbor";
        case ErrorKind::SignError: return "SignError";
        case ErrorKind::ActionDiscontinuity: return "ActionDiscontinuity";
        case ErrorKind::WindowTooNarrow: return "WindowTooNarrow";
        case ErrorKind::NoPeak: return "NoPeak";
        case ErrorKind::IllConditioned: return "IllConditioned";
        case ErrorKind::DuplicateMu: return "DuplicateMu";
        case ErrorKind::EdgeFitFailure: return "EdgeFitFailure";
    }
    return "Unknown";
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
        case ErrorKind::Io:
        case ErrorKind::DimensionMismatch:
        case ErrorKind::EmptyWindow:
        case ErrorKind::DuplicateMu:
            return 2;
        case ErrorKind::InjectivityFailure:
        case ErrorKind::TooSparse:
        case ErrorKind::AmbiguousNeighbor:
        case ErrorKind::Disconnected:
        case ErrorKind::EmptyStrip:
        case ErrorKind::Inconsistent:
        case ErrorKind::CocycleViolation:
        case ErrorKind::NonSimplyConnected:
        case ErrorKind::MissingNeighbor:
            return 4;
        default:
            return 3;
    }
}

}  // namespace semitoric
