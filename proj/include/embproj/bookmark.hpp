#pragma once

#include "embproj/axis.hpp"
#include "embproj/error.hpp"
#include "embproj/ingest.hpp"
#include "embproj/matrix.hpp"
#include "embproj/tsne.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace embproj {

inline constexpr int kBookmarkFileVersion = 1;
inline constexpr int kBookmarkSchemaVersion = 1;

using json = nlohmann::json;

struct QuerySpec {
    std::string pattern;
    MatchMode mode = MatchMode::Substring;

    bool operator==(const QuerySpec&) const = default;
};

struct AxisSpec {
    QuerySpec left;
    QuerySpec right;

    bool operator==(const AxisSpec&) const = default;
};

struct PcaView {
    std::vector<Index> axes;

    bool operator==(const PcaView&) const = default;
};

struct TsneView {
    TsneParams params;
    Index iteration = 0;
    Matrix coords;

    bool operator==(const TsneView& o) const {
        return params == o.params && iteration == o.iteration && identical(coords, o.coords);
    }
};

struct CustomView {
    AxisSpec x;
    AxisSpec y;
    std::optional<AxisSpec> z;

    bool operator==(const CustomView&) const = default;
};

using ProjectionState = std::variant<PcaView, TsneView, CustomView>;

struct CameraState {
    std::array<double, 3> position{0.0, 0.0, 0.0};
    std::array<double, 3> target{0.0, 0.0, 0.0};
    double zoom = 1.0;

    bool operator==(const CameraState&) const = default;
};

/// One saved view. `subset` lists the isolated parent indices the view was
/// computed on (empty = whole dataset). Keys this version does not know are
/// kept in `extra` and written back unchanged.
struct Bookmark {
    int schema_version = kBookmarkSchemaVersion;
    std::string label;
    std::string dataset_fingerprint;
    ProjectionState projection = PcaView{{0, 1}};
    std::vector<Index> selection;
    std::vector<Index> subset;
    std::optional<std::string> label_column;
    std::optional<std::string> color_column;
    CameraState camera;
    json extra = json::object();

    bool operator==(const Bookmark&) const = default;
};

struct BookmarkRejection {
    std::size_t position = 0;
    ErrorCode code = ErrorCode::MalformedFile;
    std::string message;
};

struct BookmarkSet {
    std::vector<Bookmark> bookmarks;
    std::vector<std::string> warnings;
    std::vector<BookmarkRejection> rejected;
    json extra = json::object();
};

// ---------------------------------------------------------------------------
// Canonical rendering

namespace detail {

inline void write_canonical(const json& v, std::string& out) {
    switch (v.type()) {
    case json::value_t::null: out += "null"; break;
    case json::value_t::boolean: out += v.get<bool>() ? "true" : "false"; break;
    case json::value_t::number_integer: out += std::to_string(v.get<std::int64_t>()); break;
    case json::value_t::number_unsigned: out += std::to_string(v.get<std::uint64_t>()); break;
    case json::value_t::number_float: {
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw Error(ErrorCode::InvalidArgument, "cannot serialize a non-finite number");
        std::string s = format_real(d);
        if (s.find_first_of(".e") == std::string::npos) s += ".0";
        out += s;
        break;
    }
    case json::value_t::string:
        try {
            out += v.dump();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, std::string("string is not valid UTF-8: ") + e.what());
        }
        break;
    case json::value_t::array: {
        out += '[';
        bool first = true;
        for (const auto& e : v) {
            if (!first) out += ',';
            first = false;
            write_canonical(e, out);
        }
        out += ']';
        break;
    }
    case json::value_t::object: {
        // nlohmann's default object is a std::map, so iteration is key-sorted.
        out += '{';
        bool first = true;
        for (const auto& [key, value] : v.items()) {
            if (!first) out += ',';
            first = false;
            write_canonical(json(key), out);
            out += ':';
            write_canonical(value, out);
        }
        out += '}';
        break;
    }
    case json::value_t::binary:
    case json::value_t::discarded:
        throw Error(ErrorCode::InvalidArgument, "unsupported JSON value");
    }
}

} // namespace detail

/// Compact JSON with sorted keys and 17-significant-digit reals. Equal values
/// always render to equal bytes.
inline std::string canonical_dump(const json& v) {
    std::string out;
    detail::write_canonical(v, out);
    return out;
}

// ---------------------------------------------------------------------------
// Bookmark <-> JSON

inline json to_json(const QuerySpec& q) {
    return {{"pattern", q.pattern}, {"mode", std::string(to_string(q.mode))}};
}

inline json to_json(const AxisSpec& a) { return {{"left", to_json(a.left)}, {"right", to_json(a.right)}}; }

inline json to_json(const TsneParams& p) {
    json j;
    j["out_dims"] = p.out_dims;
    j["perplexity"] = p.perplexity ? json(*p.perplexity) : json(nullptr);
    j["learning_rate"] = p.learning_rate;
    j["early_exaggeration_factor"] = p.early_exaggeration_factor;
    j["early_exaggeration_iters"] = p.early_exaggeration_iters;
    j["momentum_initial"] = p.momentum_initial;
    j["momentum_final"] = p.momentum_final;
    j["momentum_switch_iter"] = p.momentum_switch_iter;
    j["seed"] = p.seed;
    return j;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json to_json(const Bookmark& b) {
    json j = b.extra.is_object() ? b.extra : json::object();
    j["schema_version"] = b.schema_version;
    j["label"] = b.label;
    j["dataset_fingerprint"] = b.dataset_fingerprint;
    j["selection"] = b.selection;
    j["subset"] = b.subset;
    j["label_column"] = b.label_column ? json(*b.label_column) : json(nullptr);
    j["color_column"] = b.color_column ? json(*b.color_column) : json(nullptr);
    j["camera"] = {{"position", b.camera.position}, {"target", b.camera.target}, {"zoom", b.camera.zoom}};
    j["projection"] = std::visit(
        [](const auto& view) -> json {
            using T = std::decay_t<decltype(view)>;
            if constexpr (std::is_same_v<T, PcaView>) {
                return {{"kind", "pca"}, {"axes", view.axes}};
            } else if constexpr (std::is_same_v<T, TsneView>) {
                return {{"kind", "tsne"},
                        {"params", to_json(view.params)},
                        {"iteration", view.iteration},
                        {"coords", matrix_to_json(view.coords)}};
            } else {
                json c = {{"kind", "custom"}, {"x", to_json(view.x)}, {"y", to_json(view.y)}};
                if (view.z) c["z"] = to_json(*view.z);
                return c;
            }
        },
        b.projection);
    return j;
}

namespace detail {

[[noreturn]] inline void malformed(const std::string& what) { throw Error(ErrorCode::MalformedFile, what); }

inline const json& require(const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) malformed(std::string("missing field '") + key + "'");
    return obj.at(key);
}

inline double real_from(const json& v, const char* what) {
    if (!v.is_number()) malformed(std::string("'") + what + "' must be a number");
    return v.get<double>();
}

inline Index index_from(const json& v, const char* what) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        malformed(std::string("'") + what + "' must be a nonnegative integer");
    }
    return v.get<Index>();
}

inline std::string string_from(const json& v, const char* what) {
    if (!v.is_string()) malformed(std::string("'") + what + "' must be a string");
    return v.get<std::string>();
}

inline std::optional<std::string> optional_string(const json& obj, const char* key) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return string_from(obj.at(key), key);
}

inline std::vector<Index> indices_from(const json& v, const char* what) {
    if (!v.is_array()) malformed(std::string("'") + what + "' must be an array");
    std::vector<Index> out;
    for (const auto& e : v) out.push_back(index_from(e, what));
    return out;
}

inline QuerySpec query_from(const json& v) {
    QuerySpec q;
    q.pattern = string_from(require(v, "pattern"), "pattern");
    auto mode = parse_match_mode(string_from(require(v, "mode"), "mode"));
    if (!mode) malformed("query mode must be 'substring' or 'regex'");
    q.mode = *mode;
    return q;
}

inline AxisSpec axis_from(const json& v) { return {query_from(require(v, "left")), query_from(require(v, "right"))}; }

inline TsneParams tsne_params_from(const json& v) {
    TsneParams p;
    p.out_dims = static_cast<int>(index_from(require(v, "out_dims"), "out_dims"));
    const auto& perp = require(v, "perplexity");
    if (!perp.is_null()) p.perplexity = real_from(perp, "perplexity");
    p.learning_rate = real_from(require(v, "learning_rate"), "learning_rate");
    p.early_exaggeration_factor = real_from(require(v, "early_exaggeration_factor"), "early_exaggeration_factor");
    p.early_exaggeration_iters = index_from(require(v, "early_exaggeration_iters"), "early_exaggeration_iters");
    p.momentum_initial = real_from(require(v, "momentum_initial"), "momentum_initial");
    p.momentum_final = real_from(require(v, "momentum_final"), "momentum_final");
    p.momentum_switch_iter = index_from(require(v, "momentum_switch_iter"), "momentum_switch_iter");
    const auto& seed = require(v, "seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
        malformed("'seed' must be a nonnegative integer");
    }
    p.seed = seed.get<std::uint64_t>();
    return p;
}

inline Matrix matrix_from(const json& v) {
    if (!v.is_array()) malformed("'coords' must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    const auto cols = rows > 0 && v.front().is_array() ? static_cast<Eigen::Index>(v.front().size()) : 0;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) malformed("'coords' rows are ragged");
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = real_from(row[static_cast<std::size_t>(j)], "coords");
    }
    return m;
}

inline std::array<double, 3> triple_from(const json& v, const char* what) {
    if (!v.is_array() || v.size() != 3) malformed(std::string("'") + what + "' must hold 3 numbers");
    return {real_from(v[0], what), real_from(v[1], what), real_from(v[2], what)};
}

inline const std::array<const char*, 9> kKnownBookmarkKeys = {
    "schema_version", "label",        "dataset_fingerprint", "projection", "selection",
    "subset",         "label_column", "color_column",        "camera"};

} // namespace detail

/// Decodes one bookmark object. Throws MalformedFile or UnsupportedVersion.
inline Bookmark bookmark_from_json(const json& j) {
    using namespace detail;
    if (!j.is_object()) malformed("bookmark must be an object");
    Bookmark b;
    b.schema_version = static_cast<int>(index_from(require(j, "schema_version"), "schema_version"));
    if (b.schema_version != kBookmarkSchemaVersion) {
        throw Error(ErrorCode::UnsupportedVersion,
                    "bookmark schema_version " + std::to_string(b.schema_version) + " is not supported");
    }
    b.label = j.contains("label") ? string_from(j.at("label"), "label") : std::string();
    b.dataset_fingerprint = string_from(require(j, "dataset_fingerprint"), "dataset_fingerprint");
    b.selection = j.contains("selection") ? indices_from(j.at("selection"), "selection") : std::vector<Index>{};
    b.subset = j.contains("subset") ? indices_from(j.at("subset"), "subset") : std::vector<Index>{};
    b.label_column = optional_string(j, "label_column");
    b.color_column = optional_string(j, "color_column");
    if (j.contains("camera")) {
        const auto& cam = j.at("camera");
        b.camera.position = triple_from(require(cam, "position"), "position");
        b.camera.target = triple_from(require(cam, "target"), "target");
        b.camera.zoom = real_from(require(cam, "zoom"), "zoom");
    }

    const auto& proj = require(j, "projection");
    const auto kind = string_from(require(proj, "kind"), "kind");
    if (kind == "pca") {
        b.projection = PcaView{indices_from(require(proj, "axes"), "axes")};
    } else if (kind == "tsne") {
        TsneView view;
        view.params = tsne_params_from(require(proj, "params"));
        view.iteration = index_from(require(proj, "iteration"), "iteration");
        view.coords = matrix_from(require(proj, "coords"));
        if (view.coords.rows() > 0 && view.coords.cols() != view.params.out_dims) {
            malformed("t-SNE coordinates do not match out_dims");
        }
        b.projection = std::move(view);
    } else if (kind == "custom") {
        CustomView view{axis_from(require(proj, "x")), axis_from(require(proj, "y")), std::nullopt};
        if (proj.contains("z") && !proj.at("z").is_null()) view.z = axis_from(proj.at("z"));
        b.projection = std::move(view);
    } else {
        malformed("unknown projection kind '" + kind + "'");
    }

    b.extra = json::object();
    for (const auto& [key, value] : j.items()) {
        if (std::find(kKnownBookmarkKeys.begin(), kKnownBookmarkKeys.end(), key) == kKnownBookmarkKeys.end()) {
            b.extra[key] = value;
        }
    }
    return b;
}

/// Renders a bookmark file. All bookmarks must share one dataset fingerprint.
inline std::string render_bookmarks(std::span<const Bookmark> bookmarks, const json& extra = json::object()) {
    for (const auto& b : bookmarks) {
        if (b.dataset_fingerprint != bookmarks.front().dataset_fingerprint) {
            throw Error(ErrorCode::MixedDatasets, "bookmarks reference more than one dataset");
        }
    }
    json doc = extra.is_object() ? extra : json::object();
    doc["version"] = kBookmarkFileVersion;
    doc["bookmarks"] = json::array();
    for (const auto& b : bookmarks) doc["bookmarks"].push_back(to_json(b));
    return canonical_dump(doc) + "\n";
}

inline void save_bookmarks(std::span<const Bookmark> bookmarks, const std::filesystem::path& path,
                           const json& extra = json::object()) {
    const std::string text = render_bookmarks(bookmarks, extra);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

namespace detail {

inline void check_against(const Bookmark& b, const EmbeddingDataset& dataset) {
    const Index n = dataset.size();
    for (Index i : b.subset) {
        if (i >= n) throw Error(ErrorCode::IndexOutOfRange, "subset index " + std::to_string(i) + " out of range");
    }
    for (Index i : b.selection) {
        if (i >= n) throw Error(ErrorCode::IndexOutOfRange, "selection index " + std::to_string(i) + " out of range");
    }
    if (const auto* view = std::get_if<TsneView>(&b.projection)) {
        const Index expected = b.subset.empty() ? n : b.subset.size();
        if (static_cast<Index>(view->coords.rows()) != expected) {
            throw Error(ErrorCode::RowCountMismatch, "t-SNE bookmark has " + std::to_string(view->coords.rows()) +
                                                         " coordinate rows, expected " + std::to_string(expected));
        }
    }
}

} // namespace detail

/// Parses a bookmark file. Individual bookmarks that fail to decode or do not
/// fit `dataset` are rejected without failing the rest; a fingerprint
/// mismatch only adds a warning.
inline BookmarkSet parse_bookmarks(std::string_view text, const EmbeddingDataset* dataset = nullptr) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedFile, std::string("bookmark file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::MalformedFile, "bookmark file must be a JSON object");
    const auto& version = detail::require(doc, "version");
    if (!version.is_number_integer() && !version.is_number_unsigned()) {
        throw Error(ErrorCode::MalformedFile, "'version' must be an integer");
    }
    if (version.get<std::int64_t>() != kBookmarkFileVersion) {
        throw Error(ErrorCode::UnsupportedVersion,
                    "bookmark file version " + std::to_string(version.get<std::int64_t>()) + " is not supported");
    }
    const auto& list = detail::require(doc, "bookmarks");
    if (!list.is_array()) throw Error(ErrorCode::MalformedFile, "'bookmarks' must be an array");

    BookmarkSet out;
    for (const auto& [key, value] : doc.items()) {
        if (key != "version" && key != "bookmarks") out.extra[key] = value;
    }
    for (std::size_t pos = 0; pos < list.size(); ++pos) {
        try {
            Bookmark b = bookmark_from_json(list[pos]);
            if (dataset) {
                detail::check_against(b, *dataset);
                if (b.dataset_fingerprint != dataset->fingerprint()) {
                    out.warnings.push_back("bookmark " + std::to_string(pos) + " (" + b.label +
                                           ") was saved from a different dataset version");
                }
            }
            out.bookmarks.push_back(std::move(b));
        } catch (const Error& e) {
            out.rejected.push_back({pos, e.code(), e.what()});
        } catch (const json::exception& e) {
            out.rejected.push_back({pos, ErrorCode::MalformedFile, e.what()});
        }
    }
    return out;
}

inline BookmarkSet load_bookmarks(const std::filesystem::path& path, const EmbeddingDataset* dataset = nullptr) {
    return parse_bookmarks(read_file(path), dataset);
}

} // namespace embproj
