#pragma once

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace lsfs {

enum class ErrorCode {
    InvalidName,
    InvalidArgument,
    NotFound,
    FileLocked,
    EmptyQuery,
    MissingMode,
    MissingArgument,
    EmptyResult,
    DirectoryExists,
    SelfJoin,
    AmbiguousTarget,
    ExtractorUnsupported,
    PathUnreadable,
    EmbeddingFailure,
    ProviderUnavailable,
    Timeout,
    OutputTooLarge,
    TextTooLarge,
    CorruptSnapshot,
    RootMissing,
    AlreadyRunning,
    PreconditionFailed,
    UnknownKey,
    NoVersionBefore,
    TooFewVersions,
    ShareStoreUnavailable,
    Gone,
    Rejected,
    ApprovalTimeout,
    UnparseableOutput,
    UnknownApi,
    SchemaViolation,
    EmptySelection,
    PortInUse,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library. `details` carries structured
/// context (schema violations, raw LLM output, per-file reports).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, nlohmann::json details = nullptr)
        : std::runtime_error(message), code_(code), details_(std::move(details)) {}

    ErrorCode code() const noexcept { return code_; }
    const nlohmann::json& details() const noexcept { return details_; }

private:
    ErrorCode code_;
    nlohmann::json details_;
};

} // namespace lsfs
