#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hgfm {

enum class ErrorCode {
    DuplicateId,
    DanglingEdge,
    KindMismatch,
    Disconnected,
    SingularInteriorBlock,
    ClassificationMismatch,
    NoConvergence,
    UnstableRegion,
    DomainError,
    MissingDroop,
    ZeroSensitivity,
    MissingGains,
    DimensionMismatch,
    NoSuchTerminal,
    IsolatedDcNode,
    CertificateViolated,
    EigenFailure,
    SingularA,
    ZeroD,
    NonFiniteState,
    InitializationFailed,
    WindowTooLong,
    ParseError,
    ValidationError,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace hgfm
