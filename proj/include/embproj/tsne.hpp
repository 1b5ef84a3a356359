#pragma once

#include "embproj/error.hpp"
#include "embproj/ingest.hpp"
#include "embproj/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace embproj {

inline constexpr Index kDefaultTsneMaxPoints = 10'000;

struct TsneParams {
    int out_dims = 2;
    /// Unset means min(30, (N−1)/3), floored at 1.
    std::optional<double> perplexity;
    double learning_rate = 10.0;
    double early_exaggeration_factor = 4.0;
    Index early_exaggeration_iters = 100;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    Index momentum_switch_iter = 250;
    std::uint64_t seed = 0;

    bool operator==(const TsneParams&) const = default;
};

inline double default_perplexity(Index n) {
    return std::max(1.0, std::min(30.0, static_cast<double>(n - 1) / 3.0));
}

struct Affinities {
    Matrix joint;       // symmetric, sums to 1, zero diagonal
    Matrix conditional; // row i holds p(j|i)
    std::vector<double> beta;
    /// Rows whose points coincide with every other point; they get a uniform
    /// conditional distribution.
    std::vector<Index> degenerate_rows;
};

namespace detail {

struct RowEntropy {
    double perplexity;
    double sum;
};

// Entropy of exp(−β·shifted), computed in nats and reported as exp(H).
inline RowEntropy row_perplexity(std::span<const double> shifted, double beta, std::vector<double>& w) {
    double sum = 0.0, weighted = 0.0;
    for (std::size_t j = 0; j < shifted.size(); ++j) {
        w[j] = std::exp(-beta * shifted[j]);
        sum += w[j];
        weighted += w[j] * shifted[j];
    }
    const double h = std::log(sum) + beta * weighted / sum;
    return {std::exp(h), sum};
}

} // namespace detail

/// Gaussian conditional affinities with per-point bandwidths calibrated to
/// `perplexity`, symmetrized into a joint distribution.
///
/// Each row searches β = 1/(2σ²) starting at 1, doubling or halving until the
/// target is bracketed, then bisecting up to 50 times or until exp(H) is
/// within 1e-5 of the target.
inline Affinities calibrate_affinities(const Matrix& points, double perplexity) {
    const auto n = static_cast<Index>(points.rows());
    if (n < 2) throw Error(ErrorCode::SubsetTooSmall, "t-SNE needs at least 2 points");
    if (!(perplexity >= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "perplexity must be at least 1");
    }
    if (perplexity > static_cast<double>(n - 1)) {
        throw Error(ErrorCode::PerplexityTooLarge, "perplexity " + format_real(perplexity) +
                                                       " exceeds N-1 for N=" + std::to_string(n));
    }

    constexpr double tolerance = 1e-5;
    constexpr int bisections = 50;
    constexpr int max_bracket_steps = 1100;

    Affinities out;
    out.conditional = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    out.beta.assign(n, 1.0);

    std::vector<double> shifted(n - 1), w(n - 1);
    std::vector<Index> others(n - 1);
    for (Index i = 0; i < n; ++i) {
        const auto xi = row_span(points, i);
        double dmin = std::numeric_limits<double>::infinity();
        double dmax = 0.0;
        for (Index j = 0, c = 0; j < n; ++j) {
            if (j == i) continue;
            const auto xj = row_span(points, j);
            double d = 0.0;
            for (std::size_t t = 0; t < xi.size(); ++t) d += (xi[t] - xj[t]) * (xi[t] - xj[t]);
            shifted[c] = d;
            others[c++] = j;
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
        if (dmax == 0.0) out.degenerate_rows.push_back(i);
        if (dmax == dmin) {
            for (Index c = 0; c < n - 1; ++c) {
                out.conditional(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(others[c])) =
                    1.0 / static_cast<double>(n - 1);
            }
            continue;
        }
        for (auto& d : shifted) d -= dmin;

        double beta = 1.0;
        auto eval = [&](double b) { return detail::row_perplexity(shifted, b, w); };
        auto current = eval(beta);
        double lo = 0.0, hi = 0.0;
        bool bracketed = false;
        if (std::abs(current.perplexity - perplexity) >= tolerance) {
            if (current.perplexity > perplexity) {
                lo = beta;
                for (int s = 0; s < max_bracket_steps && std::isfinite(beta * 2); ++s) {
                    beta *= 2;
                    current = eval(beta);
                    if (current.perplexity <= perplexity) {
                        hi = beta;
                        bracketed = true;
                        break;
                    }
                    lo = beta;
                }
            } else {
                hi = beta;
                for (int s = 0; s < max_bracket_steps && beta > 0; ++s) {
                    beta /= 2;
                    current = eval(beta);
                    if (current.perplexity >= perplexity) {
                        lo = beta;
                        bracketed = true;
                        break;
                    }
                    hi = beta;
                }
            }
            if (bracketed) {
                for (int s = 0; s < bisections; ++s) {
                    if (std::abs(current.perplexity - perplexity) < tolerance) break;
                    beta = 0.5 * (lo + hi);
                    current = eval(beta);
                    if (current.perplexity > perplexity) lo = beta;
                    else hi = beta;
                }
            }
        }
        out.beta[i] = beta;
        for (Index c = 0; c < n - 1; ++c) {
            out.conditional(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(others[c])) =
                w[c] / current.sum;
        }
    }

    out.joint.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        out.joint(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < static_cast<Eigen::Index>(n); ++j) {
            const double p = (out.conditional(i, j) + out.conditional(j, i)) * scale;
            out.joint(i, j) = p;
            out.joint(j, i) = p;
        }
    }
    return out;
}

namespace detail {

inline double student_weight(const double* yi, const double* yj, Eigen::Index dims) {
    double d = 0.0;
    for (Eigen::Index t = 0; t < dims; ++t) d += (yi[t] - yj[t]) * (yi[t] - yj[t]);
    return 1.0 / (1.0 + d);
}

inline double weight_sum(const Matrix& y) {
    const auto n = y.rows(), dims = y.cols();
    double z = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double row = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) row += student_weight(&y(i, 0), &y(j, 0), dims);
        z += row;
    }
    return 2.0 * z;
}

} // namespace detail

/// KL(P‖Q) summed over entries with p > 0, where Q is the normalized
/// Student-t kernel over the embedding `y`.
inline double kl_divergence(const Matrix& joint, const Matrix& y) {
    const auto n = y.rows(), dims = y.cols();
    const double log_z = std::log(detail::weight_sum(y));
    double kl = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double row = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double p = joint(i, j);
            if (p <= 0.0) continue;
            const double w = detail::student_weight(&y(i, 0), &y(j, 0), dims);
            row += p * (std::log(p) - std::log(w) + log_z);
        }
        kl += row;
    }
    return 2.0 * kl;
}

/// ∂KL/∂y_i = 4 Σ_j (e·p_ij − q_ij)(1 + ‖y_i − y_j‖²)⁻¹ (y_i − y_j), with e the
/// current exaggeration factor.
inline Matrix kl_gradient(const Matrix& joint, const Matrix& y, double exaggeration = 1.0) {
    const auto n = y.rows(), dims = y.cols();
    const double inv_z = 1.0 / detail::weight_sum(y);
    Matrix grad = Matrix::Zero(n, dims);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double* yi = &y(i, 0);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double* yj = &y(j, 0);
            const double w = detail::student_weight(yi, yj, dims);
            const double m = (exaggeration * joint(i, j) - w * inv_z) * w;
            for (Eigen::Index t = 0; t < dims; ++t) {
                const double f = m * (yi[t] - yj[t]);
                grad(i, t) += f;
                grad(j, t) -= f;
            }
        }
    }
    grad *= 4.0;
    return grad;
}

struct TsneProgress {
    Index iteration = 0;
    double kl = 0.0;
};

/// Exact t-SNE optimizer state, advanced explicitly by the caller. Not
/// internally synchronized: one writer at a time.
class TsneSession {
public:
    TsneSession(const Matrix& points, std::vector<Index> point_indices, TsneParams params,
                const std::optional<Matrix>& initial = std::nullopt)
        : params_(params), point_indices_(std::move(point_indices)) {
        const auto n = static_cast<Index>(points.rows());
        if (n < 2) throw Error(ErrorCode::SubsetTooSmall, "t-SNE needs at least 2 points");
        if (params_.out_dims != 2 && params_.out_dims != 3) {
            throw Error(ErrorCode::InvalidArgument, "out_dims must be 2 or 3");
        }
        if (!(params_.learning_rate > 0) || !(params_.early_exaggeration_factor >= 1)) {
            throw Error(ErrorCode::InvalidArgument, "invalid t-SNE optimizer parameters");
        }
        if (!params_.perplexity) params_.perplexity = default_perplexity(n);
        if (*params_.perplexity >= static_cast<double>(n)) {
            throw Error(ErrorCode::PerplexityTooLarge,
                        "perplexity must be below N=" + std::to_string(n));
        }

        auto affinities = calibrate_affinities(points, *params_.perplexity);
        joint_ = std::move(affinities.joint);
        degenerate_rows_ = std::move(affinities.degenerate_rows);

        const auto rows = static_cast<Eigen::Index>(n);
        if (initial) {
            if (initial->rows() != rows || initial->cols() != params_.out_dims) {
                throw Error(ErrorCode::DimensionMismatch, "initial coordinates have the wrong shape");
            }
            y_ = *initial;
        } else {
            y_.resize(rows, params_.out_dims);
            std::mt19937_64 rng(params_.seed);
            std::normal_distribution<double> gauss(0.0, 1e-4);
            for (Eigen::Index i = 0; i < y_.size(); ++i) y_.data()[i] = gauss(rng);
        }
        velocity_ = Matrix::Zero(rows, params_.out_dims);
        gains_ = Matrix::Ones(rows, params_.out_dims);
        kl_ = kl_divergence(joint_, y_);
    }

    TsneProgress step(Index n_iters) {
        ensure_open();
        for (Index t = 0; t < n_iters; ++t) {
            const double momentum =
                iteration_ < params_.momentum_switch_iter ? params_.momentum_initial : params_.momentum_final;
            const Matrix grad = kl_gradient(joint_, y_, exaggeration());
            for (Eigen::Index e = 0; e < y_.size(); ++e) {
                const double g = grad.data()[e];
                double& v = velocity_.data()[e];
                double& gain = gains_.data()[e];
                gain = sign(g) != sign(v) ? gain + 0.2 : gain * 0.8;
                gain = std::max(gain, 0.01);
                v = momentum * v - params_.learning_rate * gain * g;
                y_.data()[e] += v;
            }
            y_.rowwise() -= y_.colwise().mean();
            ++iteration_;
        }
        if (n_iters > 0) kl_ = kl_divergence(joint_, y_);
        return {iteration_, kl_};
    }

    Matrix coords() const {
        ensure_open();
        return y_;
    }

    TsneProgress progress() const {
        ensure_open();
        return {iteration_, kl_};
    }

    void close() {
        closed_ = true;
        joint_ = Matrix();
        velocity_ = Matrix();
        gains_ = Matrix();
    }

    bool closed() const noexcept { return closed_; }
    Index iteration() const noexcept { return iteration_; }
    double kl() const noexcept { return kl_; }
    Index size() const noexcept { return static_cast<Index>(y_.rows()); }

    /// The exaggeration factor that the next update will apply.
    double exaggeration() const noexcept {
        return iteration_ < params_.early_exaggeration_iters ? params_.early_exaggeration_factor : 1.0;
    }

    /// The normalized joint affinities, without exaggeration.
    const Matrix& affinities() const {
        ensure_open();
        return joint_;
    }
    const Matrix& gains() const { return gains_; }
    const TsneParams& params() const noexcept { return params_; }
    const std::vector<Index>& point_indices() const noexcept { return point_indices_; }
    const std::vector<Index>& degenerate_rows() const noexcept { return degenerate_rows_; }

private:
    static int sign(double x) { return (x > 0) - (x < 0); }

    void ensure_open() const {
        if (closed_) throw Error(ErrorCode::SessionClosed, "t-SNE session is closed");
    }

    TsneParams params_;
    std::vector<Index> point_indices_;
    Matrix joint_;
    Matrix y_;
    Matrix velocity_;
    Matrix gains_;
    std::vector<Index> degenerate_rows_;
    Index iteration_ = 0;
    double kl_ = 0.0;
    bool closed_ = false;
};

/// Starts a session over the whole dataset or over `subset` (parent indices).
inline TsneSession start_session(const EmbeddingDataset& dataset,
                                 const std::optional<std::vector<Index>>& subset, const TsneParams& params,
                                 Index max_points = kDefaultTsneMaxPoints,
                                 const std::optional<Matrix>& initial = std::nullopt) {
    std::vector<Index> indices;
    if (subset) {
        indices = *subset;
        std::vector<bool> seen(dataset.size(), false);
        for (Index i : indices) {
            if (i >= dataset.size()) {
                throw Error(ErrorCode::IndexOutOfRange, "subset index " + std::to_string(i) + " out of range");
            }
            if (seen[i]) throw Error(ErrorCode::InvalidArgument, "subset index " + std::to_string(i) + " repeated");
            seen[i] = true;
        }
    } else {
        indices.resize(dataset.size());
        for (Index i = 0; i < indices.size(); ++i) indices[i] = i;
    }
    if (indices.size() < 2) throw Error(ErrorCode::SubsetTooSmall, "t-SNE needs at least 2 points");
    if (indices.size() > max_points) {
        throw Error(ErrorCode::TooLarge, "t-SNE is limited to " + std::to_string(max_points) + " points");
    }
    const Matrix points = subset ? gather_rows(dataset.vectors(), indices) : dataset.vectors();
    return TsneSession(points, std::move(indices), params, initial);
}

} // namespace embproj
