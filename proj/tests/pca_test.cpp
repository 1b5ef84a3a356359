#include "embproj/pca.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace embproj;
using testutil::to_matrix;

namespace {

double orthonormality_residual(const PcaModel& m) {
    const Eigen::MatrixXd gram = m.components * m.components.transpose();
    return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

double abs_dot(const Matrix& components, Index row, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += components(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) * v[j];
    return std::abs(s);
}

/// Compares a fitted model with the Jacobi oracle on the explicit covariance.
void expect_matches_oracle(const oracle::Rows& rows, const PcaModel& model) {
    const auto eig = oracle::jacobi(oracle::covariance(rows));
    const Index k = model.num_components();
    for (Index i = 0; i < k; ++i) {
        EXPECT_NEAR(model.explained_variance[i], std::max(eig.values[i], 0.0), 1e-9) << "component " << i;
        const double gap_before = i > 0 ? eig.values[i - 1] - eig.values[i] : INFINITY;
        const double gap_after = i + 1 < eig.values.size() ? eig.values[i] - eig.values[i + 1] : INFINITY;
        if (gap_before < 1e-9 || gap_after < 1e-9) continue;
        EXPECT_GT(abs_dot(model.components, i, eig.vecs[i]), 1.0 - 1e-6) << "component " << i;
    }
}

} // namespace

TEST(FitPca, AxisAlignedExample) {
    const oracle::Rows rows{{1, 0}, {-1, 0}, {2, 0}, {-2, 0}};
    const auto eig = oracle::jacobi(oracle::covariance(rows));
    ASSERT_NEAR(eig.values[0], 10.0 / 3.0, 1e-15);

    const auto model = fit_pca(to_matrix(rows));
    ASSERT_EQ(model.num_components(), 2u);
    EXPECT_NEAR(model.explained_variance[0], 10.0 / 3.0, 1e-12);
    EXPECT_NEAR(model.components(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(model.components(0, 1), 0.0, 1e-12);
    EXPECT_EQ(model.explained_variance[1], 0.0);
    EXPECT_NEAR(model.explained_fraction[0], 1.0, 1e-12);
}

TEST(FitPca, IdenticalPointsGiveDeterministicBasis) {
    const oracle::Rows rows(5, std::vector<double>{3.0, -1.0, 2.0});
    const auto model = fit_pca(to_matrix(rows));
    ASSERT_EQ(model.num_components(), 3u);
    for (Index i = 0; i < 3; ++i) {
        EXPECT_EQ(model.explained_variance[i], 0.0);
        EXPECT_EQ(model.explained_fraction[i], 0.0);
    }
    EXPECT_TRUE(model.components.isApprox(Matrix::Identity(3, 3)));
    EXPECT_TRUE(identical(model.components, fit_pca(to_matrix(rows)).components));
}

TEST(FitPca, DiagonalLine) {
    const auto model = fit_pca(to_matrix({{1, 1}, {2, 2}, {4, 4}}));
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(model.components(0, 0), r, 1e-12);
    EXPECT_NEAR(model.components(0, 1), r, 1e-12);
    EXPECT_EQ(model.explained_variance[1], 0.0);
    // Completed from e0 and sign-normalized: largest |entry| ties, lowest index wins.
    EXPECT_NEAR(model.components(1, 0), r, 1e-12);
    EXPECT_NEAR(model.components(1, 1), -r, 1e-12);
}

TEST(FitPca, SinglePointIsDegenerate) {
    const auto model = fit_pca(to_matrix({{1, 2, 3}}));
    ASSERT_EQ(model.num_components(), 1u);
    EXPECT_EQ(model.explained_variance[0], 0.0);
    EXPECT_EQ(model.total_variance, 0.0);
    EXPECT_EQ(model.mean, Vector((Vector(3) << 1, 2, 3).finished()));
}

TEST(FitPca, EmptyInputRejected) {
    try {
        fit_pca(Matrix(0, 3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
    }
}

TEST(FitPca, ComponentCountRule) {
    std::mt19937_64 rng(3);
    EXPECT_EQ(fit_pca(to_matrix(oracle::gaussian_rows(200, 50, rng))).num_components(), 10u);
    EXPECT_EQ(fit_pca(to_matrix(oracle::gaussian_rows(3, 8, rng))).num_components(), 3u);
    EXPECT_EQ(fit_pca(to_matrix(oracle::gaussian_rows(40, 4, rng))).num_components(), 4u);
}

TEST(FitPca, MatchesJacobiOracleOnRandomData) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> nd(1, 50), dd(1, 8);
    for (int trial = 0; trial < 60; ++trial) {
        const auto rows = oracle::gaussian_rows(nd(rng), dd(rng), rng, 2.0);
        const auto model = fit_pca(to_matrix(rows));
        expect_matches_oracle(rows, model);
        EXPECT_LT(orthonormality_residual(model), 1e-8);
        for (std::size_t i = 1; i < model.explained_variance.size(); ++i) {
            EXPECT_LE(model.explained_variance[i], model.explained_variance[i - 1]);
        }
    }
}

TEST(FitPca, ExplainedFractionUsesTotalVariance) {
    std::mt19937_64 rng(5);
    const auto rows = oracle::gaussian_rows(30, 6, rng);
    const auto eig = oracle::jacobi(oracle::covariance(rows));
    double total = 0.0;
    for (double v : eig.values) total += v;
    const auto model = fit_pca(to_matrix(rows));
    EXPECT_NEAR(model.total_variance, total, 1e-12);
    double sum = 0.0;
    for (std::size_t i = 0; i < model.explained_fraction.size(); ++i) {
        EXPECT_NEAR(model.explained_fraction[i], eig.values[i] / total, 1e-12);
        sum += model.explained_fraction[i];
    }
    EXPECT_LE(sum, 1.0 + 1e-12);
}

TEST(FitPca, TranslationInvariant) {
    std::mt19937_64 rng(9);
    const auto rows = oracle::gaussian_rows(25, 5, rng);
    Matrix shifted = to_matrix(rows);
    shifted.rowwise() += Eigen::RowVectorXd::LinSpaced(5, 3.0, 11.0);
    const auto a = fit_pca(to_matrix(rows));
    const auto b = fit_pca(shifted);
    for (Index i = 0; i < a.num_components(); ++i) {
        EXPECT_NEAR(a.explained_variance[i], b.explained_variance[i], 1e-9);
    }
    EXPECT_LT((a.components - b.components).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FitPca, IterativePathMatchesGramOracle) {
    // D above the dense limit; the oracle diagonalizes the small N×N Gram matrix.
    const std::size_t n = 30, d = 1100;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g;
    oracle::Rows rows(n, std::vector<double>(d));
    oracle::Rows factors = oracle::gaussian_rows(12, d, rng);
    for (auto& r : rows) {
        for (std::size_t f = 0; f < factors.size(); ++f) {
            const double w = g(rng) * (14.0 - static_cast<double>(f));
            for (std::size_t j = 0; j < d; ++j) r[j] += w * factors[f][j] / std::sqrt(static_cast<double>(d));
        }
        for (auto& v : r) v += 0.01 * g(rng);
    }
    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j] / static_cast<double>(n);
    oracle::Rows gram(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t j = 0; j < d; ++j) gram[a][b] += (rows[a][j] - mean[j]) * (rows[b][j] - mean[j]) / (n - 1.0);
    const auto eig = oracle::jacobi(gram);

    const auto model = fit_pca(to_matrix(rows));
    ASSERT_EQ(model.num_components(), 10u);
    EXPECT_LT(orthonormality_residual(model), 1e-8);
    for (Index i = 0; i < 10; ++i) {
        EXPECT_NEAR(model.explained_variance[i], eig.values[i], 1e-9 * eig.values[0]);
        std::vector<double> v(d, 0.0);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t j = 0; j < d; ++j) v[j] += (rows[a][j] - mean[j]) * eig.vecs[i][a];
        double norm = 0.0;
        for (double x : v) norm += x * x;
        for (double& x : v) x /= std::sqrt(norm);
        EXPECT_GT(abs_dot(model.components, i, v), 1.0 - 1e-6) << "component " << i;
    }
}

TEST(FitPca, IterativePathOnSmallData) {
    std::mt19937_64 rng(31);
    const auto rows = oracle::gaussian_rows(40, 6, rng);
    PcaOptions opts;
    opts.dense_limit = 0;
    const auto model = fit_pca(to_matrix(rows), opts);
    expect_matches_oracle(rows, model);
}

TEST(ProjectPca, MeanMapsToOrigin) {
    std::mt19937_64 rng(1);
    const auto rows = oracle::gaussian_rows(20, 4, rng);
    const auto model = fit_pca(to_matrix(rows));
    Matrix mean_point = model.mean.transpose();
    const std::vector<Index> axes{0, 1, 2};
    const Matrix out = project_pca(model, mean_point, axes);
    EXPECT_LT(out.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProjectPca, OracleEigenvectorDot) {
    const auto model = fit_pca(to_matrix({{1, 0}, {-1, 0}, {2, 0}, {-2, 0}}));
    const std::vector<Index> axes{0, 1};
    const Matrix out = project_pca(model, to_matrix({{2, 0}}), axes);
    EXPECT_NEAR(out(0, 0), 2.0, 1e-12);
    EXPECT_NEAR(out(0, 1), 0.0, 1e-12);
}

TEST(ProjectPca, AxisValidation) {
    const auto model = fit_pca(to_matrix({{1, 0}, {-1, 0}, {2, 0}, {-2, 0}}));
    const Matrix p = to_matrix({{0, 0}});
    auto code = [&](std::vector<Index> axes) {
        try {
            project_pca(model, p, axes);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::NotFound;
    };
    EXPECT_EQ(code({0, 0}), ErrorCode::DuplicateAxis);
    EXPECT_EQ(code({0, 2}), ErrorCode::AxisOutOfRange);
    EXPECT_EQ(code({0}), ErrorCode::InvalidArgument);
    try {
        const std::vector<Index> axes{0, 1};
        project_pca(model, to_matrix({{0, 0, 0}}), axes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}
