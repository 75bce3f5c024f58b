#pragma once

#include <stdexcept>
#include <string>

namespace datasafe {

enum class ErrorKind {
    ReproductionFailed = 0,
    AuthFailure,
    WrongLength,
    UnsupportedFormat,
    InsufficientCapacity,
    DimensionMismatch,
    BadSignature,
    UnknownSender,
    DuplicateDigest,
    DuplicateTx,
    NotCurrentHolder,
    WrongContractState,
    DeadlineNotReached,
    InsufficientFunds,
    UnknownMarker,
    ResponseMismatch,
    UnknownId,
    AlreadyRegistered,
    PointNotOnCurve,
    InvalidSignatureEncoding,
    HashMismatch,
    WatermarkInvalid,
    ParseError,
    IoError,
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::ReproductionFailed: return "ReproductionFailed";
        case ErrorKind::AuthFailure: return "AuthFailure";
        case ErrorKind::WrongLength: return "WrongLength";
        case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorKind::InsufficientCapacity: return "InsufficientCapacity";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::BadSignature: return "BadSignature";
        case ErrorKind::UnknownSender: return "UnknownSender";
        case ErrorKind::DuplicateDigest: return "DuplicateDigest";
        case ErrorKind::DuplicateTx: return "DuplicateTx";
        case ErrorKind::NotCurrentHolder: return "NotCurrentHolder";
        case ErrorKind::WrongContractState: return "WrongContractState";
        case ErrorKind::DeadlineNotReached: return "DeadlineNotReached";
        case ErrorKind::InsufficientFunds: return "InsufficientFunds";
        case ErrorKind::UnknownMarker: return "UnknownMarker";
        case ErrorKind::ResponseMismatch: return "ResponseMismatch";
        case ErrorKind::UnknownId: return "UnknownId";
        case ErrorKind::AlreadyRegistered: return "AlreadyRegistered";
        case ErrorKind::PointNotOnCurve: return "PointNotOnCurve";
        case ErrorKind::InvalidSignatureEncoding: return "InvalidSignatureEncoding";
        case ErrorKind::HashMismatch: return "HashMismatch";
        case ErrorKind::WatermarkInvalid: return "WatermarkInvalid";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

/// All module errors carry a machine-mappable kind; the CLI turns the kind
/// into an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace datasafe
