#include "lsfs/error.hpp"

namespace lsfs {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidName: return "InvalidName";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::FileLocked: return "FileLocked";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::MissingMode: return "MissingMode";
    case ErrorCode::MissingArgument: return "MissingArgument";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::DirectoryExists: return "DirectoryExists";
    case ErrorCode::SelfJoin: return "SelfJoin";
    case ErrorCode::AmbiguousTarget: return "AmbiguousTarget";
    case ErrorCode::ExtractorUnsupported: return "ExtractorUnsupported";
    case ErrorCode::PathUnreadable: return "PathUnreadable";
    case ErrorCode::EmbeddingFailure: return "EmbeddingFailure";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::OutputTooLarge: return "OutputTooLarge";
    case ErrorCode::TextTooLarge: return "TextTooLarge";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::RootMissing: return "RootMissing";
    case ErrorCode::AlreadyRunning: return "AlreadyRunning";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::NoVersionBefore: return "NoVersionBefore";
    case ErrorCode::TooFewVersions: return "TooFewVersions";
    case ErrorCode::ShareStoreUnavailable: return "ShareStoreUnavailable";
    case ErrorCode::Gone: return "Gone";
    case ErrorCode::Rejected: return "Rejected";
    case ErrorCode::ApprovalTimeout: return "ApprovalTimeout";
    case ErrorCode::UnparseableOutput: return "UnparseableOutput";
    case ErrorCode::UnknownApi: return "UnknownApi";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::PortInUse: return "PortInUse";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

} // namespace lsfs
