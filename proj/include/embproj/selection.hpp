#pragma once

#include "embproj/axis.hpp"
#include "embproj/error.hpp"
#include "embproj/ingest.hpp"
#include "embproj/knn.hpp"
#include "embproj/matrix.hpp"
#include "embproj/pca.hpp"

#include <algorithm>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace embproj {

enum class SelectionOrigin { ClickNeighbors, Search, Sphere, Explicit };

constexpr std::string_view to_string(SelectionOrigin o) {
    switch (o) {
    case SelectionOrigin::ClickNeighbors: return "click_neighbors";
    case SelectionOrigin::Search: return "search";
    case SelectionOrigin::Sphere: return "sphere";
    case SelectionOrigin::Explicit: return "explicit";
    }
    return "explicit";
}

/// An immutable, sorted, duplicate-free set of point indices.
class Selection {
public:
    Selection() = default;
    Selection(std::string dataset_id, std::vector<Index> indices, SelectionOrigin origin)
        : dataset_id_(std::move(dataset_id)), indices_(std::move(indices)), origin_(origin) {
        std::sort(indices_.begin(), indices_.end());
        indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    }

    const std::string& dataset_id() const noexcept { return dataset_id_; }
    const std::vector<Index>& indices() const noexcept { return indices_; }
    SelectionOrigin origin() const noexcept { return origin_; }
    bool empty() const noexcept { return indices_.empty(); }
    std::size_t size() const noexcept { return indices_.size(); }
    bool contains(Index i) const { return std::binary_search(indices_.begin(), indices_.end(), i); }

    Selection united(const Selection& other) const {
        std::vector<Index> out;
        std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                       std::back_inserter(out));
        return {dataset_id_, std::move(out), SelectionOrigin::Explicit};
    }

    Selection intersected(const Selection& other) const {
        std::vector<Index> out;
        std::set_intersection(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                              std::back_inserter(out));
        return {dataset_id_, std::move(out), SelectionOrigin::Explicit};
    }

private:
    std::string dataset_id_;
    std::vector<Index> indices_;
    SelectionOrigin origin_ = SelectionOrigin::Explicit;
};

inline Selection select_explicit(const EmbeddingDataset& dataset, std::vector<Index> indices) {
    for (Index i : indices) {
        if (i >= dataset.size()) {
            throw Error(ErrorCode::IndexOutOfRange, "index " + std::to_string(i) + " out of range");
        }
    }
    return {dataset.id(), std::move(indices), SelectionOrigin::Explicit};
}

/// The clicked point together with its k nearest neighbors.
inline Selection select_by_click(const EmbeddingDataset& dataset, Index anchor, Index k, Metric metric) {
    const auto list = neighbors(dataset.vectors(), anchor, k, metric);
    std::vector<Index> idx{anchor};
    for (const auto& nb : list.neighbors) idx.push_back(nb.index);
    return {dataset.id(), std::move(idx), SelectionOrigin::ClickNeighbors};
}

inline Selection select_by_search(const EmbeddingDataset& dataset, std::string_view pattern, MatchMode mode,
                                  const MatchOptions& options = {}) {
    auto q = match_query(dataset, pattern, mode, options);
    return {dataset.id(), std::move(q.matched), SelectionOrigin::Search};
}

/// Points whose projected coordinates lie within `radius` of `center`.
inline Selection select_by_sphere(const Matrix& coords, std::span<const double> center, double radius,
                                  std::string dataset_id = {}) {
    if (static_cast<Eigen::Index>(center.size()) != coords.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "center has " + std::to_string(center.size()) +
                                                      " dimensions, coordinates have " +
                                                      std::to_string(coords.cols()));
    }
    if (!(radius >= 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be nonnegative");
    std::vector<Index> idx;
    for (Eigen::Index r = 0; r < coords.rows(); ++r) {
        if (euclidean_distance(row_span(coords, static_cast<Index>(r)), center) <= radius) {
            idx.push_back(static_cast<Index>(r));
        }
    }
    return {std::move(dataset_id), std::move(idx), SelectionOrigin::Sphere};
}

/// An isolated subset of a dataset: the selected rows plus the mapping back to
/// parent indices.
class Subset {
public:
    Subset(DatasetPtr parent, std::vector<Index> parent_indices)
        : parent_(std::move(parent)), parent_indices_(std::move(parent_indices)) {
        if (parent_indices_.empty()) throw Error(ErrorCode::EmptySelection, "cannot isolate an empty selection");
        for (Index local = 0; local < parent_indices_.size(); ++local) {
            const Index p = parent_indices_[local];
            if (p >= parent_->size()) {
                throw Error(ErrorCode::IndexOutOfRange, "index " + std::to_string(p) + " out of range");
            }
            local_of_.emplace(p, local);
        }
        points_ = gather_rows(parent_->vectors(), parent_indices_);
    }

    const EmbeddingDataset& parent() const noexcept { return *parent_; }
    const DatasetPtr& parent_ptr() const noexcept { return parent_; }
    const Matrix& points() const noexcept { return points_; }
    const std::vector<Index>& parent_indices() const noexcept { return parent_indices_; }
    Index size() const noexcept { return parent_indices_.size(); }

    Index parent_of(Index local) const {
        if (local >= parent_indices_.size()) {
            throw Error(ErrorCode::IndexOutOfRange, "local index " + std::to_string(local) + " out of range");
        }
        return parent_indices_[local];
    }

    std::optional<Index> local_of(Index parent) const {
        auto it = local_of_.find(parent);
        if (it == local_of_.end()) return std::nullopt;
        return it->second;
    }

    std::vector<std::string> labels() const {
        const auto& all = parent_->labels();
        std::vector<std::string> out;
        out.reserve(parent_indices_.size());
        for (Index p : parent_indices_) out.push_back(all[p]);
        return out;
    }

    /// Neighbors among the subset, reported with parent indices.
    NeighborList neighbors_of(Index parent_anchor, Index k, Metric metric) const {
        auto local = local_of(parent_anchor);
        if (!local) throw Error(ErrorCode::IndexOutOfRange, "point " + std::to_string(parent_anchor) + " not in subset");
        auto list = neighbors(points_, *local, k, metric);
        list.anchor = parent_anchor;
        for (auto& nb : list.neighbors) nb.index = parent_indices_[nb.index];
        return list;
    }

private:
    DatasetPtr parent_;
    std::vector<Index> parent_indices_;
    std::unordered_map<Index, Index> local_of_;
    Matrix points_;
};

inline Subset isolate(const DatasetPtr& dataset, const Selection& selection) {
    if (selection.empty()) throw Error(ErrorCode::EmptySelection, "cannot isolate an empty selection");
    return Subset(dataset, selection.indices());
}

inline PcaModel fit_pca(const EmbeddingDataset& dataset, const PcaOptions& options = {}) {
    return fit_pca(dataset.vectors(), options);
}

inline PcaModel fit_pca(const Subset& subset, const PcaOptions& options = {}) {
    return fit_pca(subset.points(), options);
}

} // namespace embproj
