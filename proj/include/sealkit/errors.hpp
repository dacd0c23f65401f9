#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sealkit {

// Machine-readable failure codes. The CLI maps these onto exit codes and
// prints them on the diagnostic stream; library callers switch on them.
enum class ErrorCode {
    Config,
    Precondition,
    MissingPrereq,
    Io,
    EmptyPool,
    EmptyTree,
    EmptySelection,
    NoJsonFound,
    SchemaError,
    PlaceholderSyntax,
    DanglingRef,
    BackendExhausted,
    BadResponse,
    ScriptMiss,
    ScriptExhausted,
    QcRejected,
    BackfillIncomplete,
    IdMismatch,
    UnknownGoldTool,
    EmbedBackendDown,
    DimensionMismatch,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Config: return "CONFIG_ERROR";
        case ErrorCode::Precondition: return "PRECONDITION";
        case ErrorCode::MissingPrereq: return "MISSING_PREREQ";
        case ErrorCode::Io: return "IO_ERROR";
        case ErrorCode::EmptyPool: return "EMPTY_POOL";
        case ErrorCode::EmptyTree: return "EMPTY_TREE";
        case ErrorCode::EmptySelection: return "EMPTY_SELECTION";
        case ErrorCode::NoJsonFound: return "NO_JSON_FOUND";
        case ErrorCode::SchemaError: return "SCHEMA_ERROR";
        case ErrorCode::PlaceholderSyntax: return "PLACEHOLDER_SYNTAX";
        case ErrorCode::DanglingRef: return "DANGLING_REF";
        case ErrorCode::BackendExhausted: return "BACKEND_EXHAUSTED";
        case ErrorCode::BadResponse: return "BAD_RESPONSE";
        case ErrorCode::ScriptMiss: return "SCRIPT_MISS";
        case ErrorCode::ScriptExhausted: return "SCRIPT_EXHAUSTED";
        case ErrorCode::QcRejected: return "QC_REJECTED";
        case ErrorCode::BackfillIncomplete: return "BACKFILL_INCOMPLETE";
        case ErrorCode::IdMismatch: return "ID_MISMATCH";
        case ErrorCode::UnknownGoldTool: return "UNKNOWN_GOLD_TOOL";
        case ErrorCode::EmbedBackendDown: return "EMBED_BACKEND_DOWN";
        case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace sealkit
