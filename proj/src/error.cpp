#include "hgfm/error.hpp"

namespace hgfm {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::DanglingEdge: return "DanglingEdge";
        case ErrorCode::KindMismatch: return "KindMismatch";
        case ErrorCode::Disconnected: return "Disconnected";
        case ErrorCode::SingularInteriorBlock: return "SingularInteriorBlock";
        case ErrorCode::ClassificationMismatch: return "ClassificationMismatch";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::UnstableRegion: return "UnstableRegion";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::MissingDroop: return "MissingDroop";
        case ErrorCode::ZeroSensitivity: return "ZeroSensitivity";
        case ErrorCode::MissingGains: return "MissingGains";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NoSuchTerminal: return "NoSuchTerminal";
        case ErrorCode::IsolatedDcNode: return "IsolatedDcNode";
        case ErrorCode::CertificateViolated: return "CertificateViolated";
        case ErrorCode::EigenFailure: return "EigenFailure";
        case ErrorCode::SingularA: return "SingularA";
        case ErrorCode::ZeroD: return "ZeroD";
        case ErrorCode::NonFiniteState: return "NonFiniteState";
        case ErrorCode::InitializationFailed: return "InitializationFailed";
        case ErrorCode::WindowTooLong: return "WindowTooLong";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

}  // namespace hgfm
