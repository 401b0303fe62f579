#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hopwise {

enum class ErrorCode {
    InvalidArgument,
    MalformedChain,
    OffsetsMismatch,
    JudgeUnparseable,
    GenerationUnparseable,
    EmptyGroup,
    EmptyChain,
    EmptyPath,
    MissingSignals,
    NoTokenSpans,
    LengthMismatch,
    AliasCycle,
    UnknownSeed,
    NoPathFound,
    DimensionMismatch,
    UnscriptedRequest,
    ClientError,
    DataError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

enum class ClientErrorKind {
    Transport,
    HttpStatus,
    Timeout,
    ExhaustedRetries,
    MalformedResponse,
    NetworkForbidden,
};

std::string_view to_string(ClientErrorKind kind);

class ClientError : public Error {
public:
    ClientError(ClientErrorKind kind, const std::string& message, int http_status = 0)
        : Error(ErrorCode::ClientError, message), kind_(kind), http_status_(http_status) {}

    ClientErrorKind kind() const noexcept { return kind_; }
    int http_status() const noexcept { return http_status_; }

private:
    ClientErrorKind kind_;
    int http_status_;
};

} // namespace hopwise
