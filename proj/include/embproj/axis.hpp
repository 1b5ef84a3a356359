#pragma once

#include "embproj/error.hpp"
#include "embproj/ingest.hpp"
#include "embproj/matrix.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace embproj {

enum class MatchMode { Substring, Regex };

constexpr std::string_view to_string(MatchMode m) {
    return m == MatchMode::Regex ? "regex" : "substring";
}

inline std::optional<MatchMode> parse_match_mode(std::string_view s) {
    if (s == "substring") return MatchMode::Substring;
    if (s == "regex") return MatchMode::Regex;
    return std::nullopt;
}

struct LabelQuery {
    std::string pattern;
    MatchMode mode = MatchMode::Substring;
    std::vector<Index> matched; // ascending, unique
};

struct MatchOptions {
    bool substring_case_sensitive = false;
    bool regex_case_sensitive = true;
};

namespace detail {

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

} // namespace detail

/// Matches `pattern` against a list of labels. Substring mode is
/// case-insensitive containment; regex mode is an unanchored search.
inline LabelQuery match_labels(const std::vector<std::string>& labels, std::string_view pattern,
                               MatchMode mode, const MatchOptions& options = {}) {
    LabelQuery q{std::string(pattern), mode, {}};
    if (mode == MatchMode::Regex) {
        std::regex re;
        try {
            auto flags = std::regex::ECMAScript;
            if (!options.regex_case_sensitive) flags |= std::regex::icase;
            re = std::regex(q.pattern, flags);
        } catch (const std::regex_error& e) {
            throw Error(ErrorCode::InvalidRegex, "invalid regex '" + q.pattern + "': " + e.what());
        }
        for (Index i = 0; i < labels.size(); ++i) {
            if (std::regex_search(labels[i], re)) q.matched.push_back(i);
        }
    } else if (options.substring_case_sensitive) {
        for (Index i = 0; i < labels.size(); ++i) {
            if (labels[i].find(q.pattern) != std::string::npos) q.matched.push_back(i);
        }
    } else {
        const std::string needle = detail::ascii_lower(q.pattern);
        for (Index i = 0; i < labels.size(); ++i) {
            if (detail::ascii_lower(labels[i]).find(needle) != std::string::npos) q.matched.push_back(i);
        }
    }
    return q;
}

inline LabelQuery match_query(const EmbeddingDataset& dataset, std::string_view pattern, MatchMode mode,
                              const MatchOptions& options = {}) {
    const auto* col = dataset.column(dataset.label_column());
    if (!col) throw Error(ErrorCode::NoLabelColumn, "dataset has no label column");
    return match_labels(col->values, pattern, mode, options);
}

/// A direction from the centroid of `left` to the centroid of `right`,
/// centered at the midpoint of the two centroids.
struct ProjectionAxis {
    LabelQuery left;
    LabelQuery right;
    Vector direction;
    Vector midpoint;
    Vector unit;

    double length() const { return direction.norm(); }
};

inline Vector centroid(const Matrix& points, const std::vector<Index>& rows) {
    Vector c = Vector::Zero(points.cols());
    for (Index r : rows) c += points.row(static_cast<Eigen::Index>(r)).transpose();
    return c / static_cast<double>(rows.size());
}

inline ProjectionAxis build_axis(const Matrix& points, LabelQuery left, LabelQuery right) {
    if (left.matched.empty()) throw Error(ErrorCode::EmptyMatch, "left query '" + left.pattern + "' matched nothing");
    if (right.matched.empty()) {
        throw Error(ErrorCode::EmptyMatch, "right query '" + right.pattern + "' matched nothing");
    }
    for (const auto* q : {&left, &right}) {
        for (Index i : q->matched) {
            if (i >= static_cast<Index>(points.rows())) {
                throw Error(ErrorCode::IndexOutOfRange, "query matched index " + std::to_string(i) + " out of range");
            }
        }
    }
    const Vector cl = centroid(points, left.matched);
    const Vector cr = centroid(points, right.matched);
    ProjectionAxis axis{std::move(left), std::move(right), cr - cl, (cl + cr) / 2.0, {}};
    const double len = axis.direction.norm();
    if (!(len > 0.0)) throw Error(ErrorCode::DegenerateAxis, "both queries share the same centroid");
    axis.unit = axis.direction / len;
    return axis;
}

inline ProjectionAxis build_axis(const EmbeddingDataset& dataset, LabelQuery left, LabelQuery right) {
    return build_axis(dataset.vectors(), std::move(left), std::move(right));
}

/// Coordinate j of point x is (x − midpoint_j) · unit_j. Axes are used as
/// given; no orthogonalization.
inline Matrix project_axes(const Matrix& points, const ProjectionAxis& x_axis, const ProjectionAxis& y_axis,
                           const ProjectionAxis* z_axis = nullptr) {
    std::vector<const ProjectionAxis*> axes{&x_axis, &y_axis};
    if (z_axis) axes.push_back(z_axis);
    for (const auto* a : axes) {
        if (a->unit.size() != points.cols()) {
            throw Error(ErrorCode::DimensionMismatch, "axis has " + std::to_string(a->unit.size()) +
                                                          " dimensions, points have " +
                                                          std::to_string(points.cols()));
        }
    }
    Matrix out(points.rows(), static_cast<Eigen::Index>(axes.size()));
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        for (std::size_t j = 0; j < axes.size(); ++j) {
            const auto& a = *axes[j];
            double acc = 0.0;
            for (Eigen::Index c = 0; c < points.cols(); ++c) acc += (points(r, c) - a.midpoint[c]) * a.unit[c];
            out(r, static_cast<Eigen::Index>(j)) = acc;
        }
    }
    return out;
}

} // namespace embproj
