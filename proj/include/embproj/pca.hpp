#pragma once

#include "embproj/error.hpp"
#include "embproj/matrix.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace embproj {

inline constexpr Index kMaxComponents = 10;
inline constexpr Index kDenseCovarianceLimit = 1024;

struct PcaModel {
    Vector mean;
    Matrix components; // K×D, orthonormal rows
    std::vector<double> explained_variance;
    std::vector<double> explained_fraction;
    double total_variance = 0.0;

    Index num_components() const { return static_cast<Index>(components.rows()); }
    Index dims() const { return static_cast<Index>(components.cols()); }
};

struct PcaOptions {
    Index max_components = kMaxComponents;
    Index dense_limit = kDenseCovarianceLimit;
    double iterative_tolerance = 1e-10;
    int iterative_max_iters = 10'000;
};

namespace detail {

/// Flips `v` so its largest-magnitude entry is positive. Entries within a
/// relative 1e-12 of the maximum count as ties; the lowest index wins.
inline void normalize_sign(Eigen::Ref<Eigen::RowVectorXd> v) {
    const double peak = v.cwiseAbs().maxCoeff();
    if (peak == 0.0) return;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) >= peak * (1.0 - 1e-12)) {
            if (v[i] < 0) v = -v;
            return;
        }
    }
}

/// Replaces rows [keep, K) of `components` with standard basis vectors
/// orthogonalized against everything before them.
inline void complete_basis(Matrix& components, Index keep) {
    const auto k = static_cast<Index>(components.rows());
    const auto d = components.cols();
    Index filled = keep;
    for (Eigen::Index e = 0; e < d && filled < k; ++e) {
        Eigen::RowVectorXd v = Eigen::RowVectorXd::Unit(d, e);
        for (int pass = 0; pass < 2; ++pass) {
            for (Index r = 0; r < filled; ++r) {
                auto row = components.row(static_cast<Eigen::Index>(r));
                v -= v.dot(row) * row;
            }
        }
        const double norm = v.norm();
        if (norm < 1e-3) continue;
        components.row(static_cast<Eigen::Index>(filled++)) = v / norm;
    }
}

inline double degenerate_threshold(double largest, Index dims) {
    return 64.0 * static_cast<double>(dims) * std::numeric_limits<double>::epsilon() *
           std::max(largest, 0.0);
}

struct Eigenpairs {
    std::vector<double> values; // descending
    Matrix vectors;             // rows
};

inline Eigenpairs dense_top_eigenpairs(const Matrix& centered, Index k, double denom) {
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const auto d = cov.rows();
    Eigenpairs out;
    out.vectors.resize(static_cast<Eigen::Index>(k), d);
    for (Index i = 0; i < k; ++i) {
        const auto src = d - 1 - static_cast<Eigen::Index>(i);
        out.values.push_back(solver.eigenvalues()[src]);
        out.vectors.row(static_cast<Eigen::Index>(i)) = solver.eigenvectors().col(src).transpose();
    }
    return out;
}

/// Block subspace iteration with Rayleigh-Ritz against the implicit
/// covariance XᵀX/denom, never forming the D×D matrix.
inline Eigenpairs iterative_top_eigenpairs(const Matrix& centered, Index k, double denom,
                                           double tolerance, int max_iters) {
    const auto d = centered.cols();
    const auto block = std::min<Eigen::Index>(static_cast<Eigen::Index>(k) + 5, d);

    auto apply = [&](const Eigen::MatrixXd& q) -> Eigen::MatrixXd {
        Eigen::MatrixXd xq = centered * q;
        return (centered.transpose() * xq) / denom;
    };

    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd q(d, block);
    for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = gauss(rng);
    q = Eigen::HouseholderQR<Eigen::MatrixXd>(q).householderQ() * Eigen::MatrixXd::Identity(d, block);

    Eigen::VectorXd previous = Eigen::VectorXd::Constant(block, -1.0);
    Eigen::VectorXd ritz_values;
    Eigen::MatrixXd ritz_vectors;
    for (int iter = 0; iter < max_iters; ++iter) {
        Eigen::MatrixXd z = apply(q);
        Eigen::MatrixXd t = q.transpose() * z;
        t = 0.5 * (t + t.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(t);
        ritz_values = small.eigenvalues().reverse();
        ritz_vectors = q * small.eigenvectors().rowwise().reverse();

        const double scale = std::max(std::abs(ritz_values[0]), std::numeric_limits<double>::min());
        const double change =
            (ritz_values.head(static_cast<Eigen::Index>(k)) - previous.head(static_cast<Eigen::Index>(k)))
                .cwiseAbs()
                .maxCoeff();
        if (iter > 0 && change <= tolerance * scale) break;
        previous = ritz_values;

        q = Eigen::HouseholderQR<Eigen::MatrixXd>(z).householderQ() *
            Eigen::MatrixXd::Identity(d, block);
    }

    Eigenpairs out;
    out.vectors.resize(static_cast<Eigen::Index>(k), d);
    for (Index i = 0; i < k; ++i) {
        out.values.push_back(ritz_values[static_cast<Eigen::Index>(i)]);
        out.vectors.row(static_cast<Eigen::Index>(i)) =
            ritz_vectors.col(static_cast<Eigen::Index>(i)).transpose().normalized();
    }
    return out;
}

} // namespace detail

/// Fits the top min(10, D, N) principal components of the rows of `points`,
/// using the sample covariance (N−1 divisor; zero when N = 1).
inline PcaModel fit_pca(const Matrix& points, const PcaOptions& options = {}) {
    const auto n = static_cast<Index>(points.rows());
    const auto d = static_cast<Index>(points.cols());
    if (n == 0) throw Error(ErrorCode::DegenerateInput, "cannot fit PCA on an empty point set");
    if (d == 0) throw Error(ErrorCode::DegenerateInput, "cannot fit PCA on zero-dimensional points");

    const Index k = std::min({options.max_components, d, n});

    PcaModel model;
    model.mean = points.colwise().mean().transpose();
    Matrix centered = points.rowwise() - model.mean.transpose();
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    if (n == 1) centered.setZero();

    model.total_variance = centered.colwise().squaredNorm().sum() / denom;

    detail::Eigenpairs pairs =
        d <= options.dense_limit
            ? detail::dense_top_eigenpairs(centered, k, denom)
            : detail::iterative_top_eigenpairs(centered, k, denom, options.iterative_tolerance,
                                               options.iterative_max_iters);

    const double threshold = detail::degenerate_threshold(pairs.values.front(), d);
    Index keep = 0;
    while (keep < k && pairs.values[keep] > threshold) ++keep;

    model.components = std::move(pairs.vectors);
    detail::complete_basis(model.components, keep);
    for (Index i = 0; i < k; ++i) {
        detail::normalize_sign(model.components.row(static_cast<Eigen::Index>(i)));
        const double variance = i < keep ? std::max(pairs.values[i], 0.0) : 0.0;
        model.explained_variance.push_back(variance);
        model.explained_fraction.push_back(model.total_variance > 0 ? variance / model.total_variance
                                                                    : 0.0);
    }
    return model;
}

/// Projects `points` onto the chosen 2 or 3 components, after centering on
/// the model mean.
inline Matrix project_pca(const PcaModel& model, const Matrix& points, std::span<const Index> axes) {
    if (axes.size() != 2 && axes.size() != 3) {
        throw Error(ErrorCode::InvalidArgument, "PCA projection needs 2 or 3 axes");
    }
    const Index k = model.num_components();
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (axes[i] >= k) {
            throw Error(ErrorCode::AxisOutOfRange, "component " + std::to_string(axes[i]) +
                                                       " out of range, model has " + std::to_string(k));
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (axes[i] == axes[j]) {
                throw Error(ErrorCode::DuplicateAxis, "component " + std::to_string(axes[i]) + " repeated");
            }
        }
    }
    if (static_cast<Index>(points.cols()) != model.dims()) {
        throw Error(ErrorCode::DimensionMismatch, "points have " + std::to_string(points.cols()) +
                                                      " dimensions, model has " + std::to_string(model.dims()));
    }

    Matrix out(points.rows(), static_cast<Eigen::Index>(axes.size()));
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        for (std::size_t j = 0; j < axes.size(); ++j) {
            const auto comp = model.components.row(static_cast<Eigen::Index>(axes[j]));
            double acc = 0.0;
            for (Eigen::Index c = 0; c < points.cols(); ++c) {
                acc += (points(r, c) - model.mean[c]) * comp[c];
            }
            out(r, static_cast<Eigen::Index>(j)) = acc;
        }
    }
    return out;
}

} // namespace embproj
