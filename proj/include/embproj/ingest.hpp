#pragma once

#include "embproj/error.hpp"
#include "embproj/matrix.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace embproj {

inline constexpr std::size_t kDefaultMaxCells = 5'000'000;

enum class ColumnKind { String, Numeric };

constexpr std::string_view to_string(ColumnKind kind) {
    return kind == ColumnKind::Numeric ? "numeric" : "string";
}

struct MetadataColumn {
    std::string name;
    ColumnKind kind = ColumnKind::String;
    std::vector<std::string> values;

    bool operator==(const MetadataColumn&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Splits on LF, strips a trailing CR from each line, and drops the empty
/// segment produced by a final newline.
inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto end = line.find('\t', start);
        if (end == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, end - start));
        start = end + 1;
    }
    return fields;
}

/// Parses the whole field as a double. Accepts "nan"/"inf" so the caller can
/// distinguish non-finite values from garbage.
inline std::optional<double> parse_real(std::string_view field) {
    field = trim(field);
    if (field.empty()) return std::nullopt;
    if (field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) return std::nullopt;
    return value;
}

inline std::optional<double> parse_finite(std::string_view field) {
    auto v = parse_real(field);
    if (v && std::isfinite(*v)) return v;
    return std::nullopt;
}

} // namespace detail

/// Parses a tab-separated vectors file into an N×D matrix. A first row whose
/// every field fails to parse as a number is treated as a header. Blank lines
/// are ignored. Reported row numbers are 1-based physical lines.
inline Matrix parse_vectors(std::string_view text) {
    auto lines = detail::split_lines(text);

    std::vector<double> cells;
    std::size_t width = 0;
    std::size_t rows = 0;
    bool first_row = true;

    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        auto line = lines[ln];
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_fields(line);
        const std::size_t row_no = ln + 1;

        if (first_row) {
            first_row = false;
            bool all_fail = true;
            for (auto f : fields) {
                if (detail::parse_real(f)) {
                    all_fail = false;
                    break;
                }
            }
            if (all_fail) continue;
        }

        if (rows == 0) {
            width = fields.size();
        } else if (fields.size() != width) {
            throw Error(ErrorCode::RaggedRows,
                        "row " + std::to_string(row_no) + " has " + std::to_string(fields.size()) +
                            " values, expected " + std::to_string(width),
                        row_no);
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            auto v = detail::parse_real(fields[c]);
            if (!v) {
                throw Error(ErrorCode::InvalidNumber,
                            "row " + std::to_string(row_no) + " column " + std::to_string(c + 1) +
                                ": '" + std::string(fields[c]) + "' is not a number",
                            row_no, c + 1);
            }
            if (!std::isfinite(*v)) {
                throw Error(ErrorCode::NonFiniteValue,
                            "row " + std::to_string(row_no) + " column " + std::to_string(c + 1) +
                                " is not finite",
                            row_no, c + 1);
            }
            cells.push_back(*v);
        }
        ++rows;
    }

    if (rows == 0) throw Error(ErrorCode::EmptyInput, "vectors input contains no data rows");

    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
    std::copy(cells.begin(), cells.end(), m.data());
    return m;
}

/// Renders a real with 17 significant digits, enough to reparse bit-exactly.
inline std::string format_real(double v) {
    char buf[32];
    int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

inline std::string format_vectors(const Matrix& m) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += '\t';
            out += format_real(m(i, j));
        }
        out += '\n';
    }
    return out;
}

/// Parses a metadata TSV aligned by position with a vectors file.
///
/// Files with two or more columns always carry a header row. A single-column
/// file is headerless (and named "label") unless its first value is
/// non-numeric while every later non-empty value is numeric, in which case the
/// first value is taken as the column name.
inline std::vector<MetadataColumn> parse_metadata(std::string_view text, std::size_t expected_n) {
    auto lines = detail::split_lines(text);
    if (lines.empty()) throw Error(ErrorCode::RowCountMismatch, "metadata is empty");

    auto header = detail::split_fields(lines.front());
    std::vector<MetadataColumn> columns;
    std::size_t first_data = 0;

    if (header.size() >= 2) {
        first_data = 1;
        std::unordered_set<std::string> seen;
        for (auto h : header) {
            std::string name(detail::trim(h));
            if (!seen.insert(name).second) {
                throw Error(ErrorCode::DuplicateColumnName, "duplicate column name '" + name + "'");
            }
            columns.push_back({name, ColumnKind::String, {}});
        }
    } else {
        bool header_like = !detail::parse_real(lines.front()) && lines.size() > 1;
        if (header_like) {
            bool any = false;
            for (std::size_t i = 1; i < lines.size(); ++i) {
                if (detail::trim(lines[i]).empty()) continue;
                any = true;
                if (!detail::parse_finite(lines[i])) {
                    header_like = false;
                    break;
                }
            }
            header_like = header_like && any;
        }
        if (header_like) {
            first_data = 1;
            columns.push_back({std::string(detail::trim(lines.front())), ColumnKind::String, {}});
        } else {
            columns.push_back({"label", ColumnKind::String, {}});
        }
    }

    const std::size_t actual = lines.size() - first_data;
    if (actual != expected_n) {
        throw Error(ErrorCode::RowCountMismatch,
                    "metadata has " + std::to_string(actual) + " rows, expected " +
                        std::to_string(expected_n));
    }

    for (auto& col : columns) col.values.reserve(actual);
    for (std::size_t ln = first_data; ln < lines.size(); ++ln) {
        auto fields = columns.size() == 1 ? std::vector<std::string_view>{lines[ln]}
                                          : detail::split_fields(lines[ln]);
        if (fields.size() > columns.size()) {
            throw Error(ErrorCode::RaggedRows,
                        "metadata row " + std::to_string(ln + 1) + " has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(columns.size()),
                        ln + 1);
        }
        for (std::size_t c = 0; c < columns.size(); ++c) {
            columns[c].values.emplace_back(c < fields.size() ? detail::trim(fields[c]) : "");
        }
    }

    for (auto& col : columns) {
        bool numeric = !col.values.empty();
        for (const auto& v : col.values) {
            if (!detail::parse_finite(v)) {
                numeric = false;
                break;
            }
        }
        col.kind = numeric ? ColumnKind::Numeric : ColumnKind::String;
    }
    return columns;
}

/// Hex SHA-256 of a byte string, prefixed with "sha256:".
inline std::string fingerprint(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::IoError, "sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out = "sha256:";
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

/// The immutable unit of analysis: vectors plus position-aligned metadata.
class EmbeddingDataset {
public:
    EmbeddingDataset(Matrix vectors, std::vector<MetadataColumn> metadata,
                     std::optional<std::string> label_column, std::string fingerprint,
                     std::vector<std::string> source_names)
        : id_("ds" + std::to_string(next_id())),
          vectors_(std::move(vectors)),
          metadata_(std::move(metadata)),
          fingerprint_(std::move(fingerprint)),
          source_names_(std::move(source_names)) {
        if (vectors_.rows() < 1 || vectors_.cols() < 1) {
            throw Error(ErrorCode::EmptyInput, "dataset needs at least one point and one dimension");
        }
        for (Eigen::Index i = 0; i < vectors_.size(); ++i) {
            if (!std::isfinite(vectors_.data()[i])) {
                throw Error(ErrorCode::NonFiniteValue, "dataset contains a non-finite value");
            }
        }
        std::unordered_set<std::string> seen;
        for (const auto& col : metadata_) {
            if (col.values.size() != size()) {
                throw Error(ErrorCode::RowCountMismatch,
                            "column '" + col.name + "' has " + std::to_string(col.values.size()) +
                                " values, expected " + std::to_string(size()));
            }
            if (!seen.insert(col.name).second) {
                throw Error(ErrorCode::DuplicateColumnName, "duplicate column name '" + col.name + "'");
            }
        }

        if (metadata_.empty()) {
            MetadataColumn index{"index", ColumnKind::String, {}};
            index.values.reserve(size());
            for (Index i = 0; i < size(); ++i) index.values.push_back(std::to_string(i));
            metadata_.push_back(std::move(index));
        }

        if (label_column) {
            if (!column(*label_column)) {
                throw Error(ErrorCode::UnknownColumn, "unknown column '" + *label_column + "'");
            }
            label_column_ = *label_column;
        } else {
            label_column_ = metadata_.front().name;
            for (const auto& col : metadata_) {
                if (col.kind == ColumnKind::String) {
                    label_column_ = col.name;
                    break;
                }
            }
        }
    }

    const std::string& id() const noexcept { return id_; }
    const Matrix& vectors() const noexcept { return vectors_; }
    Index size() const noexcept { return static_cast<Index>(vectors_.rows()); }
    Index dims() const noexcept { return static_cast<Index>(vectors_.cols()); }
    const std::vector<MetadataColumn>& metadata() const noexcept { return metadata_; }
    const std::string& label_column() const noexcept { return label_column_; }
    const std::string& fingerprint() const noexcept { return fingerprint_; }
    const std::vector<std::string>& source_names() const noexcept { return source_names_; }

    const MetadataColumn* column(std::string_view name) const {
        for (const auto& col : metadata_) {
            if (col.name == name) return &col;
        }
        return nullptr;
    }

    const std::vector<std::string>& labels() const { return column(label_column_)->values; }

private:
    static std::uint64_t next_id() {
        static std::atomic<std::uint64_t> counter{0};
        return ++counter;
    }

    std::string id_;
    Matrix vectors_;
    std::vector<MetadataColumn> metadata_;
    std::string label_column_;
    std::string fingerprint_;
    std::vector<std::string> source_names_;
};

using DatasetPtr = std::shared_ptr<const EmbeddingDataset>;

struct LoadOptions {
    std::optional<std::string> label_column;
    std::size_t max_cells = kDefaultMaxCells;
};

/// Builds a dataset from in-memory file contents.
inline DatasetPtr make_dataset(std::string_view vectors_text,
                               std::optional<std::string_view> metadata_text,
                               const LoadOptions& options = {},
                               std::vector<std::string> source_names = {}) {
    Matrix vectors = parse_vectors(vectors_text);
    const auto cells = static_cast<std::size_t>(vectors.size());
    if (cells > options.max_cells) {
        throw Error(ErrorCode::TooLarge, "dataset has " + std::to_string(cells) +
                                             " cells, limit is " + std::to_string(options.max_cells));
    }
    std::vector<MetadataColumn> metadata;
    if (metadata_text) metadata = parse_metadata(*metadata_text, static_cast<std::size_t>(vectors.rows()));
    return std::make_shared<const EmbeddingDataset>(std::move(vectors), std::move(metadata),
                                                    options.label_column, fingerprint(vectors_text),
                                                    std::move(source_names));
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

inline DatasetPtr load_dataset(const std::filesystem::path& vectors_file,
                               const std::optional<std::filesystem::path>& metadata_file = std::nullopt,
                               const LoadOptions& options = {}) {
    std::string vectors_text = read_file(vectors_file);
    std::vector<std::string> sources{vectors_file.filename().string()};
    std::optional<std::string> metadata_text;
    if (metadata_file) {
        metadata_text = read_file(*metadata_file);
        sources.push_back(metadata_file->filename().string());
    }
    return make_dataset(vectors_text,
                        metadata_text ? std::optional<std::string_view>(*metadata_text) : std::nullopt,
                        options, std::move(sources));
}

} // namespace embproj
