#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace embproj {

enum class ErrorCode {
    EmptyInput,
    RaggedRows,
    NonFiniteValue,
    InvalidNumber,
    RowCountMismatch,
    DuplicateColumnName,
    UnknownColumn,
    TooLarge,
    IoError,
    DegenerateInput,
    AxisOutOfRange,
    DuplicateAxis,
    InvalidArgument,
    PerplexityTooLarge,
    SubsetTooSmall,
    SessionClosed,
    SessionBusy,
    IndexOutOfRange,
    InvalidRegex,
    NoLabelColumn,
    EmptyMatch,
    DegenerateAxis,
    DimensionMismatch,
    EmptySelection,
    MixedDatasets,
    MalformedFile,
    UnsupportedVersion,
    UnknownDataset,
    UnknownSession,
    NotFound,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::InvalidNumber: return "InvalidNumber";
    case ErrorCode::RowCountMismatch: return "RowCountMismatch";
    case ErrorCode::DuplicateColumnName: return "DuplicateColumnName";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::AxisOutOfRange: return "AxisOutOfRange";
    case ErrorCode::DuplicateAxis: return "DuplicateAxis";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PerplexityTooLarge: return "PerplexityTooLarge";
    case ErrorCode::SubsetTooSmall: return "SubsetTooSmall";
    case ErrorCode::SessionClosed: return "SessionClosed";
    case ErrorCode::SessionBusy: return "SessionBusy";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidRegex: return "InvalidRegex";
    case ErrorCode::NoLabelColumn: return "NoLabelColumn";
    case ErrorCode::EmptyMatch: return "EmptyMatch";
    case ErrorCode::DegenerateAxis: return "DegenerateAxis";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::MixedDatasets: return "MixedDatasets";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnknownDataset: return "UnknownDataset";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::NotFound: return "NotFound";
    }
    return "Unknown";
}

/// Every engine failure is reported through this type. `row` and `column`
/// are 1-based positions in the offending input file when they apply.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::size_t> row = std::nullopt,
          std::optional<std::size_t> column = std::nullopt)
        : std::runtime_error(message), code_(code), row_(row), column_(column) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> row() const noexcept { return row_; }
    std::optional<std::size_t> column() const noexcept { return column_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> row_;
    std::optional<std::size_t> column_;
};

} // namespace embproj
