#pragma once

#include "embproj/error.hpp"
#include "embproj/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace embproj {

enum class Metric { Euclidean, Cosine };

constexpr std::string_view to_string(Metric m) {
    return m == Metric::Cosine ? "cosine" : "euclidean";
}

inline std::optional<Metric> parse_metric(std::string_view s) {
    if (s == "cosine") return Metric::Cosine;
    if (s == "euclidean") return Metric::Euclidean;
    return std::nullopt;
}

struct Neighbor {
    Index index = 0;
    double distance = 0.0;

    bool operator==(const Neighbor&) const = default;
};

struct NeighborList {
    Index anchor = 0;
    Metric metric = Metric::Cosine;
    Index k = 0;
    std::vector<Neighbor> neighbors;
};

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

/// 1 − cos(a, b), clamped to [0, 2]. A zero-norm vector is at distance 1 from
/// everything.
inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 1.0;
    const double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(d, 0.0, 2.0);
}

inline double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
    return metric == Metric::Cosine ? cosine_distance(a, b) : euclidean_distance(a, b);
}

/// Full M×M distance matrix: zero diagonal, each pair computed once and
/// mirrored so symmetry is exact.
inline Matrix pairwise_distances(const Matrix& points, Metric metric) {
    const auto m = points.rows();
    Matrix out = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto a = row_span(points, static_cast<Index>(i));
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double d = distance(a, row_span(points, static_cast<Index>(j)), metric);
            out(i, j) = d;
            out(j, i) = d;
        }
    }
    return out;
}

/// Exact brute-force neighbors of `anchor`, ascending by distance with ties
/// broken by ascending index. `k` is silently capped at N−1.
inline NeighborList neighbors(const Matrix& points, Index anchor, Index k, Metric metric) {
    const auto n = static_cast<Index>(points.rows());
    if (anchor >= n) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "anchor " + std::to_string(anchor) + " out of range for " + std::to_string(n) + " points");
    }
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");

    NeighborList out{anchor, metric, k, {}};
    out.neighbors.reserve(n - 1);
    const auto a = row_span(points, anchor);
    for (Index j = 0; j < n; ++j) {
        if (j == anchor) continue;
        out.neighbors.push_back({j, distance(a, row_span(points, j), metric)});
    }
    const Index take = std::min(k, n - 1);
    auto by_distance = [](const Neighbor& x, const Neighbor& y) {
        return x.distance < y.distance || (x.distance == y.distance && x.index < y.index);
    };
    std::partial_sort(out.neighbors.begin(), out.neighbors.begin() + static_cast<std::ptrdiff_t>(take),
                      out.neighbors.end(), by_distance);
    out.neighbors.resize(take);
    return out;
}

} // namespace embproj
